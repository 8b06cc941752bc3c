use nalgebra::{DMatrix, DVector};

use crate::basis::{NodalBasis, QuadratureRule, TemporalBasis};

/// Reference-slab matrices between a temporal trial basis (columns) and test
/// basis (rows). Physical scalings by the slab length are applied at assembly.
#[derive(Debug, Clone)]
pub struct TemporalForms {
    /// `∫ ψ_a ψ_b ds`
    pub mass: DMatrix<f64>,
    /// `∫ ψ_a' ψ_b ds` (trial differentiated)
    pub deriv: DMatrix<f64>,
    /// `∫ ψ_a' ψ_b' ds`
    pub deriv_deriv: DMatrix<f64>,
    pub trial_start: DVector<f64>,
    pub trial_end: DVector<f64>,
    pub test_start: DVector<f64>,
    pub test_end: DVector<f64>,
}

impl TemporalForms {
    pub fn assemble(trial: &TemporalBasis, test: &TemporalBasis, quad: &QuadratureRule) -> Self {
        let (na, nb) = (trial.len(), test.len());
        let mut mass = DMatrix::zeros(nb, na);
        let mut deriv = DMatrix::zeros(nb, na);
        let mut deriv_deriv = DMatrix::zeros(nb, na);
        for (s, w) in quad.iter() {
            let (pa, da) = (trial.eval(s, 0), trial.eval(s, 1));
            let (pb, db) = (test.eval(s, 0), test.eval(s, 1));
            for b in 0..nb {
                for a in 0..na {
                    mass[(b, a)] += w * pa[a] * pb[b];
                    deriv[(b, a)] += w * da[a] * pb[b];
                    deriv_deriv[(b, a)] += w * da[a] * db[b];
                }
            }
        }
        Self {
            mass,
            deriv,
            deriv_deriv,
            trial_start: DVector::from_vec(trial.eval(0.0, 0)),
            trial_end: DVector::from_vec(trial.eval(1.0, 0)),
            test_start: DVector::from_vec(test.eval(0.0, 0)),
            test_end: DVector::from_vec(test.eval(1.0, 0)),
        }
    }

    /// Outer product `test_side * trial_side^T` for the given slab ends
    /// (`false` = start, `true` = end).
    pub fn trace_product(&self, test_end: bool, trial_end: bool) -> DMatrix<f64> {
        let b = if test_end { &self.test_end } else { &self.test_start };
        let a = if trial_end {
            &self.trial_end
        } else {
            &self.trial_start
        };
        b * a.transpose()
    }
}
