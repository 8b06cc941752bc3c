//! Time-continuous lifting of slab-wise solutions, error norms and rates.

use crate::basis::{gauss_rule, lobatto_points, NodalBasis, QuadratureRule, SpatialBasis, TemporalBasis};
use crate::error::Result;
use crate::mesh::IntervalMesh;
use crate::slab_forms::global_dof;
use crate::system::{SpaceTimeSystem, SpaceTimeVector};

/// Time-continuous function obtained from a slab-wise field by subtracting
/// each slab's start jump blended with `θ_n(t) = (t_{n+1} - t) / Δt`.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    mesh: IntervalMesh,
    spatial: SpatialBasis,
    temporal: TemporalBasis,
    k: usize,
    /// temporal order of the field before lifting
    source_q: usize,
    n_x: usize,
    dt: f64,
    /// per slab, `(mode, spatial dof)` coefficients in the lifted basis
    coeffs: Vec<Vec<f64>>,
    /// `⟦w^n⟧ = w(t_n^+) - w(t_n^-)`, zero for the first slab
    jumps: Vec<Vec<f64>>,
}

/// Lifts field `field` (0 for `u1`, 1 for `u2`) of the primal part of `x`.
pub fn lift(system: &SpaceTimeSystem, x: &SpaceTimeVector, field: usize) -> Result<LiftedSolution> {
    assert!(field < 2);
    let l = system.layout();
    if x.layout() != l {
        return Err(crate::Error::LayoutMismatch {
            expected: l.len(),
            actual: x.as_slice().len(),
        });
    }
    let space = system.primal_space(0);
    let (n_x, q) = (space.n_x, space.q);
    let source = space.temporal_basis();
    let temporal = TemporalBasis::new(q.max(1))?;
    let nodes = temporal.lagrange().nodes().to_vec();
    let at_nodes: Vec<Vec<f64>> = nodes.iter().map(|&s| source.eval(s, 0)).collect();
    let (psi0, psi1) = (source.eval(0.0, 0), source.eval(1.0, 0));

    let field_of = |n: usize| &x.primal(n)[field * space.n_f..(field + 1) * space.n_f];
    let trace = |c: &[f64], psi: &[f64]| -> Vec<f64> {
        (0..n_x)
            .map(|j| psi.iter().enumerate().map(|(a, p)| p * c[a * n_x + j]).sum())
            .collect()
    };
    let mut coeffs = Vec::with_capacity(l.n_slabs);
    let mut jumps = Vec::with_capacity(l.n_slabs);
    for n in 0..l.n_slabs {
        let c = field_of(n);
        let jump = if n == 0 {
            vec![0.0; n_x]
        } else {
            let (plus, minus) = (trace(c, &psi0), trace(field_of(n - 1), &psi1));
            plus.iter().zip(&minus).map(|(p, m)| p - m).collect()
        };
        let mut out = vec![0.0; nodes.len() * n_x];
        for (b, (&s, psi)) in nodes.iter().zip(&at_nodes).enumerate() {
            let v = trace(c, psi);
            for j in 0..n_x {
                out[b * n_x + j] = v[j] - jump[j] * (1.0 - s);
            }
        }
        coeffs.push(out);
        jumps.push(jump);
    }
    Ok(LiftedSolution {
        mesh: system.mesh().clone(),
        spatial: space.spatial_basis().clone(),
        temporal,
        k: space.k,
        source_q: q,
        n_x,
        dt: system.dt(),
        coeffs,
        jumps,
    })
}

impl LiftedSolution {
    pub fn n_slabs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Temporal degree of the lifted representation.
    pub fn degree(&self) -> usize {
        self.temporal.degree()
    }

    pub fn coefficients(&self, n: usize) -> &[f64] {
        &self.coeffs[n]
    }

    pub fn jump(&self, n: usize) -> &[f64] {
        &self.jumps[n]
    }

    /// Largest coefficient mismatch between the end of slab `n-1` and the
    /// start of slab `n` over all interfaces.
    pub fn interface_mismatch(&self) -> f64 {
        let (p0, p1) = (self.temporal.eval(0.0, 0), self.temporal.eval(1.0, 0));
        let trace = |c: &[f64], psi: &[f64], j: usize| -> f64 {
            psi.iter().enumerate().map(|(a, p)| p * c[a * self.n_x + j]).sum()
        };
        let mut worst = 0.0f64;
        for n in 1..self.n_slabs() {
            for j in 0..self.n_x {
                let d = trace(&self.coeffs[n], &p0, j) - trace(&self.coeffs[n - 1], &p1, j);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Value (`deriv = 0`) or time derivative (`deriv = 1`) at reference time
    /// `s` of slab `n`, spatial element `e` and reference coordinate `xi`.
    fn eval_local(&self, n: usize, s: f64, deriv: usize, e: usize, phi: &[f64]) -> f64 {
        let psi = self.temporal.eval(s, deriv);
        let scale = if deriv == 1 { 1.0 / self.dt } else { 1.0 };
        let c = &self.coeffs[n];
        let mut v = 0.0;
        for (a, pa) in psi.iter().enumerate() {
            for (i, pi) in phi.iter().enumerate() {
                v += pa * pi * c[a * self.n_x + global_dof(self.k, e, i)];
            }
        }
        v * scale
    }

    /// Value at physical `(t, x)`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        let (n, s) = self.locate_time(t);
        let (e, xi) = self.locate_space(x);
        self.eval_local(n, s, 0, e, &self.spatial.eval(xi, 0))
    }

    pub fn time_derivative(&self, t: f64, x: f64) -> f64 {
        let (n, s) = self.locate_time(t);
        let (e, xi) = self.locate_space(x);
        self.eval_local(n, s, 1, e, &self.spatial.eval(xi, 0))
    }

    fn locate_time(&self, t: f64) -> (usize, f64) {
        let n = ((t / self.dt).floor().max(0.0) as usize).min(self.n_slabs() - 1);
        (n, t / self.dt - n as f64)
    }

    fn locate_space(&self, x: f64) -> (usize, f64) {
        let h = self.mesh.h();
        let e = (((x - self.mesh.a()) / h).floor().max(0.0) as usize).min(self.mesh.n_elems() - 1);
        (e, (x - self.mesh.element_origin(e)) / h)
    }
}

/// `(‖θ_n‖, ‖θ_n'‖)` in `L²(I_n)` by quadrature.
pub fn theta_norms(dt: f64) -> (f64, f64) {
    let rule = gauss_rule(4).expect("fixed size");
    let (mut v, mut d) = (0.0, 0.0);
    for (s, w) in rule.iter() {
        v += w * dt * (1.0 - s).powi(2);
        d += w * dt * (1.0 / dt).powi(2);
    }
    (v.sqrt(), d.sqrt())
}

/// Reference solution evaluated in the error norms.
pub trait ExactSolution {
    fn value(&self, t: f64, x: f64) -> f64;
    fn time_derivative(&self, t: f64, x: f64) -> f64;
}

/// `u(t, x) = cos(πt) sin(πx)`
#[derive(Debug, Clone, Copy, Default)]
pub struct StandingWave;

impl ExactSolution for StandingWave {
    fn value(&self, t: f64, x: f64) -> f64 {
        use std::f64::consts::PI;
        (PI * t).cos() * (PI * x).sin()
    }

    fn time_derivative(&self, t: f64, x: f64) -> f64 {
        use std::f64::consts::PI;
        -PI * (PI * t).sin() * (PI * x).sin()
    }
}

/// Time-dependent spatial interval `[lo(t), hi(t)]`; empty when `hi <= lo`.
pub type Region<'a> = &'a dyn Fn(f64) -> (f64, f64);

/// Domain of dependence of data on `[0, 1/4]` for `T = 1/2`.
pub fn dependence_region(t: f64) -> (f64, f64) {
    (0.0, (0.25 + t).min(0.75 - t))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    /// `max_t ‖u - L u1‖_{L²}`
    pub linf_l2_u: f64,
    /// `‖∂t (u - L u1)‖_{L²L²}`
    pub l2l2_ut: f64,
    pub linf_l2_u_restricted: Option<f64>,
    pub l2l2_ut_restricted: Option<f64>,
}

/// Squared spatial L² error at reference time `s` of slab `n`, restricted to
/// `[lo, hi]` (pass the whole domain for no restriction).
fn spatial_error_sq(
    sol: &LiftedSolution,
    rule: &QuadratureRule,
    n: usize,
    s: f64,
    deriv: usize,
    exact: impl Fn(f64) -> f64,
    (lo, hi): (f64, f64),
) -> f64 {
    let mesh = &sol.mesh;
    let h = mesh.h();
    let mut total = 0.0;
    for e in 0..mesh.n_elems() {
        let x0 = mesh.element_origin(e);
        let (a, b) = (x0.max(lo), (x0 + h).min(hi));
        if b <= a {
            continue;
        }
        for (x, w) in rule.mapped(a, b) {
            let phi = sol.spatial.eval((x - x0) / h, 0);
            let diff = exact(x) - sol.eval_local(n, s, deriv, e, &phi);
            total += w * diff * diff;
        }
    }
    total
}

/// Error norms of a lifted solution. The sup in time is taken over `q + 3`
/// Gauss-Lobatto samples per slab.
pub fn error_norms(exact: &dyn ExactSolution, sol: &LiftedSolution, region: Option<Region>) -> ErrorReport {
    let space_rule = gauss_rule(sol.k + 5).expect("bounded degree");
    let time_rule = gauss_rule(6).expect("fixed size");
    let samples = lobatto_points(sol.source_q + 3).expect("bounded degree");
    let whole = (sol.mesh.a(), sol.mesh.b());
    let mut rep = ErrorReport::default();
    let (mut linf_r, mut l2_r) = (0.0f64, 0.0f64);
    for n in 0..sol.n_slabs() {
        let t0 = n as f64 * sol.dt;
        for &s in &samples {
            let t = t0 + s * sol.dt;
            let ex = |x| exact.value(t, x);
            let full = spatial_error_sq(sol, &space_rule, n, s, 0, ex, whole);
            rep.linf_l2_u = rep.linf_l2_u.max(full);
            if let Some(r) = region {
                linf_r = linf_r.max(spatial_error_sq(sol, &space_rule, n, s, 0, ex, r(t)));
            }
        }
        for (s, w) in time_rule.iter() {
            let t = t0 + s * sol.dt;
            let ex = |x| exact.time_derivative(t, x);
            rep.l2l2_ut += w * sol.dt * spatial_error_sq(sol, &space_rule, n, s, 1, ex, whole);
            if let Some(r) = region {
                l2_r += w * sol.dt * spatial_error_sq(sol, &space_rule, n, s, 1, ex, r(t));
            }
        }
    }
    rep.linf_l2_u = rep.linf_l2_u.sqrt();
    rep.l2l2_ut = rep.l2l2_ut.sqrt();
    if region.is_some() {
        rep.linf_l2_u_restricted = Some(linf_r.sqrt());
        rep.l2l2_ut_restricted = Some(l2_r.sqrt());
    }
    rep
}

/// `log2(e_{l-1} / e_l)` for consecutive levels; a vanishing error gives
/// `f64::INFINITY`.
pub fn eoc(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log2() })
        .collect()
}
