use crate::basis::{NodalBasis, QuadratureRule, SpatialBasis};
use crate::mesh::{DataDomain, IntervalMesh};
use crate::sparse::{CooBuilder, CsrMatrix};

/// Number of global spatial dofs of the continuous `P_k` space.
pub fn spatial_dofs(mesh: &IntervalMesh, k: usize) -> usize {
    mesh.n_elems() * k + 1
}

/// Global index of local node `i` of element `e`. Nodes are numbered left to
/// right, so the numbering is monotone in the node coordinate.
#[inline]
pub fn global_dof(k: usize, e: usize, i: usize) -> usize {
    e * k + i
}

/// Coordinate of global spatial dof `g` for an equispaced `P_k` space.
pub fn dof_coordinate(mesh: &IntervalMesh, k: usize, g: usize) -> f64 {
    mesh.a() + g as f64 * mesh.h() / k as f64
}

/// Spatial matrices between a trial space (columns, basis `φ`) and a test
/// space (rows, basis `χ`) on the same mesh.
#[derive(Debug, Clone)]
pub struct SpatialForms {
    /// `∫ φ_j χ_i`
    pub mass: CsrMatrix,
    /// `∫ φ_j' χ_i'`
    pub stiffness: CsrMatrix,
    /// `Σ_{∂Ω} (φ_j' n) χ_i`
    pub flux: CsrMatrix,
    /// `Σ_{∂Ω} φ_j χ_i`
    pub boundary_mass: CsrMatrix,
    /// `∫_ω φ_j χ_i`
    pub omega_mass: CsrMatrix,
    /// `Σ_F h ⟦φ_j'⟧ ⟦χ_i'⟧`
    pub gradient_jump: CsrMatrix,
    /// `Σ_K ∫_K φ_j'' χ_i''`
    pub laplace_laplace: CsrMatrix,
    /// `Σ_K ∫_K φ_j'' χ_i`
    pub laplace_mass: CsrMatrix,
}

impl SpatialForms {
    pub fn assemble(
        mesh: &IntervalMesh,
        omega: Option<&DataDomain>,
        trial: &SpatialBasis,
        test: &SpatialBasis,
        quad: &QuadratureRule,
    ) -> Self {
        let (kt, ks) = (trial.degree(), test.degree());
        let (nrows, ncols) = (spatial_dofs(mesh, ks), spatial_dofs(mesh, kt));
        let new = || CooBuilder::new(nrows, ncols);
        let (mut mass, mut stiff, mut omega_mass, mut ll, mut lm) = (new(), new(), new(), new(), new());
        let (mut flux, mut bmass, mut jump) = (new(), new(), new());

        for e in 0..mesh.n_elems() {
            let len = mesh.element_length(e);
            let in_omega = omega.is_some_and(|d| d.contains_element(e));
            for (x, w) in quad.iter() {
                let w = w * len;
                let (p0, p1, p2) = (trial.eval(x, 0), trial.eval(x, 1), trial.eval(x, 2));
                let (c0, c1, c2) = (test.eval(x, 0), test.eval(x, 1), test.eval(x, 2));
                for i in 0..=ks {
                    let gi = global_dof(ks, e, i);
                    for j in 0..=kt {
                        let gj = global_dof(kt, e, j);
                        let m = w * p0[j] * c0[i];
                        mass.push(gi, gj, m);
                        if in_omega {
                            omega_mass.push(gi, gj, m);
                        }
                        stiff.push(gi, gj, w * p1[j] * c1[i] / (len * len));
                        ll.push(gi, gj, w * p2[j] * c2[i] / len.powi(4));
                        lm.push(gi, gj, w * p2[j] * c0[i] / (len * len));
                    }
                }
            }
        }

        for bp in mesh.boundary_points() {
            let (e, s) = (bp.element, bp.local);
            let len = mesh.element_length(e);
            let (p0, p1) = (trial.eval(s, 0), trial.eval(s, 1));
            let c0 = test.eval(s, 0);
            for i in 0..=ks {
                for j in 0..=kt {
                    let (gi, gj) = (global_dof(ks, e, i), global_dof(kt, e, j));
                    flux.push(gi, gj, bp.normal * p1[j] / len * c0[i]);
                    bmass.push(gi, gj, p0[j] * c0[i]);
                }
            }
        }

        // facet at vertex v sits between elements v-1 (right end) and v (left end)
        let h = mesh.h();
        for &v in mesh.interior_facets() {
            let (el, er) = (v - 1, v);
            let (ll_len, lr_len) = (mesh.element_length(el), mesh.element_length(er));
            let jump_of = |vals_l: Vec<f64>, vals_r: Vec<f64>, k: usize| {
                let mut out: Vec<(usize, f64)> = Vec::with_capacity(2 * (k + 1));
                for (i, d) in vals_r.iter().enumerate() {
                    out.push((global_dof(k, er, i), d / lr_len));
                }
                for (i, d) in vals_l.iter().enumerate() {
                    out.push((global_dof(k, el, i), -d / ll_len));
                }
                out
            };
            let tj = jump_of(trial.eval(1.0, 1), trial.eval(0.0, 1), kt);
            let sj = jump_of(test.eval(1.0, 1), test.eval(0.0, 1), ks);
            for &(gi, ci) in &sj {
                for &(gj, pj) in &tj {
                    jump.push(gi, gj, h * ci * pj);
                }
            }
        }

        Self {
            mass: mass.build(),
            stiffness: stiff.build(),
            flux: flux.build(),
            boundary_mass: bmass.build(),
            omega_mass: omega_mass.build(),
            gradient_jump: jump.build(),
            laplace_laplace: ll.build(),
            laplace_mass: lm.build(),
        }
    }
}
