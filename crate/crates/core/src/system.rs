//! Global space-time layout and the coupled primal-dual operator.
//!
//! Unknowns are stored slab by slab; inside a slab the primal block `(u1, u2)`
//! precedes the dual block `(z1, z2)`. The operator is applied slab-wise from
//! blocks that are shared by all slabs of the uniform partition.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::basis::{gauss_rule, NodalBasis};
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::mesh::{DataDomain, IntervalMesh};
use crate::slab_forms::{
    global_dof, volume_rule, SlabBlocks, SlabSpace, SpaceRole, SpatialForms,
};
use crate::sparse::CsrMatrix;

/// Largest system `assemble_dense` agrees to build.
pub const DENSE_LIMIT: usize = 5000;

/// Polynomial orders of the primal `(k, q)` and dual `(kstar, qstar)` spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Orders {
    pub k: usize,
    pub q: usize,
    pub kstar: usize,
    pub qstar: usize,
}

impl Orders {
    pub fn new(k: usize, q: usize, kstar: usize, qstar: usize) -> Self {
        Self { k, q, kstar, qstar }
    }

    /// Dual orders equal to the primal ones.
    pub fn full(k: usize, q: usize) -> Self {
        Self::new(k, q, k, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemLayout {
    pub n_slabs: usize,
    pub primal_len: usize,
    pub dual_len: usize,
}

impl SystemLayout {
    pub fn slab_len(&self) -> usize {
        self.primal_len + self.dual_len
    }

    pub fn len(&self) -> usize {
        self.n_slabs * self.slab_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slab_range(&self, n: usize) -> Range<usize> {
        let s = n * self.slab_len();
        s..s + self.slab_len()
    }

    pub fn primal_range(&self, n: usize) -> Range<usize> {
        let s = n * self.slab_len();
        s..s + self.primal_len
    }

    pub fn dual_range(&self, n: usize) -> Range<usize> {
        let s = n * self.slab_len() + self.primal_len;
        s..s + self.dual_len
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::LayoutMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Coefficient vector over all slabs, primal and dual.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeVector {
    layout: SystemLayout,
    data: Vec<f64>,
}

impl SpaceTimeVector {
    pub fn zeros(layout: SystemLayout) -> Self {
        Self {
            layout,
            data: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(layout: SystemLayout, data: Vec<f64>) -> Result<Self> {
        layout.check(data.len())?;
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> SystemLayout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn primal(&self, n: usize) -> &[f64] {
        &self.data[self.layout.primal_range(n)]
    }

    pub fn primal_mut(&mut self, n: usize) -> &mut [f64] {
        let r = self.layout.primal_range(n);
        &mut self.data[r]
    }

    pub fn dual(&self, n: usize) -> &[f64] {
        &self.data[self.layout.dual_range(n)]
    }

    pub fn dual_mut(&mut self, n: usize) -> &mut [f64] {
        let r = self.layout.dual_range(n);
        &mut self.data[r]
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &SpaceTimeVector) -> Result<()> {
        self.layout.check(x.data.len())?;
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn dot(&self, x: &SpaceTimeVector) -> Result<f64> {
        self.layout.check(x.data.len())?;
        Ok(self.data.iter().zip(&x.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same primal part, dual part negated.
    pub fn with_negated_dual(&self) -> Self {
        let mut out = self.clone();
        for n in 0..self.layout.n_slabs {
            out.dual_mut(n).iter_mut().for_each(|v| *v = -*v);
        }
        out
    }
}

/// Components of the discrete stability norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleNorm {
    pub stabilization: f64,
    pub data: f64,
    pub dual: f64,
    pub jumps: f64,
    pub total: f64,
}

/// The coupled optimality system on a uniform slab partition of `[0, T]`.
#[derive(Debug, Clone)]
pub struct SpaceTimeSystem {
    mesh: IntervalMesh,
    omega: DataDomain,
    orders: Orders,
    n_slabs: usize,
    dt: f64,
    layout: SystemLayout,
    blocks: SlabBlocks,
    /// spatial weights of the temporal jumps of `u1` and `u2`
    jump_weights: [CsrMatrix; 2],
}

impl SpaceTimeSystem {
    pub fn new(
        mesh: IntervalMesh,
        omega: DataDomain,
        orders: Orders,
        n_slabs: usize,
        t_final: f64,
    ) -> Result<Self> {
        if n_slabs == 0 {
            return Err(Error::InvalidCount { what: "slab count" });
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if omega.element_mask().len() != mesh.n_elems() {
            return Err(Error::SpaceMismatch(
                "data domain was marked on a different mesh".into(),
            ));
        }
        let dt = t_final / n_slabs as f64;
        let primal = SlabSpace::new(&mesh, SpaceRole::Primal, orders.k, orders.q, 0, 0.0, dt)?;
        let dual = SlabSpace::new(&mesh, SpaceRole::Dual, orders.kstar, orders.qstar, 0, 0.0, dt)?;
        let layout = SystemLayout {
            n_slabs,
            primal_len: primal.len(),
            dual_len: dual.len(),
        };
        let quad = volume_rule(&[orders.k]);
        let s = SpatialForms::assemble(
            &mesh,
            None,
            primal.spatial_basis(),
            primal.spatial_basis(),
            &quad,
        );
        let zero = CsrMatrix::zeros(s.mass.nrows(), s.mass.ncols());
        let jump_weights = [
            zero.add(&s.mass, 1.0 / dt).add(&s.stiffness, dt),
            zero.add(&s.mass, 1.0 / dt),
        ];
        let blocks = SlabBlocks::assemble(primal, dual, &mesh, &omega)?;
        Ok(Self {
            mesh,
            omega,
            orders,
            n_slabs,
            dt,
            layout,
            blocks,
            jump_weights,
        })
    }

    pub fn mesh(&self) -> &IntervalMesh {
        &self.mesh
    }

    pub fn omega(&self) -> &DataDomain {
        &self.omega
    }

    pub fn orders(&self) -> Orders {
        self.orders
    }

    pub fn n_slabs(&self) -> usize {
        self.n_slabs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.n_slabs as f64
    }

    pub fn layout(&self) -> SystemLayout {
        self.layout
    }

    pub fn ndof(&self) -> usize {
        self.layout.len()
    }

    pub fn blocks(&self) -> &SlabBlocks {
        &self.blocks
    }

    pub fn primal_space(&self, n: usize) -> SlabSpace {
        let mut sp = self.blocks.primal.clone();
        sp.slab = n;
        sp.t_start = n as f64 * self.dt;
        sp
    }

    pub fn dual_space(&self, n: usize) -> SlabSpace {
        let mut sp = self.blocks.dual.clone();
        sp.slab = n;
        sp.t_start = n as f64 * self.dt;
        sp
    }

    /// Primal-primal block of slab `n` without temporal jumps:
    /// data mass plus primal stabilization.
    pub fn primal_local(&self) -> CsrMatrix {
        self.blocks.m_omega.add(&self.blocks.stabilizers.sh, 1.0)
    }

    /// Applies the coupled operator, `y = B x`.
    pub fn apply(&self, x: &SpaceTimeVector) -> Result<SpaceTimeVector> {
        self.layout.check(x.data.len())?;
        let mut y = SpaceTimeVector::zeros(self.layout);
        self.apply_into(x.as_slice(), y.as_mut_slice());
        Ok(y)
    }

    /// Slice form of [`apply`](Self::apply); `y` is overwritten.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let l = self.layout;
        assert_eq!(x.len(), l.len());
        assert_eq!(y.len(), l.len());
        y.fill(0.0);
        let b = &self.blocks;
        for n in 0..self.n_slabs {
            let (u, z) = (&x[l.primal_range(n)], &x[l.dual_range(n)]);
            {
                let yp = &mut y[l.primal_range(n)];
                b.m_omega.mul_add(1.0, u, yp);
                b.stabilizers.sh.mul_add(1.0, u, yp);
                b.a.mul_add_transpose(1.0, z, yp);
                self.apply_jumps(x, n, yp);
            }
            let yd = &mut y[l.dual_range(n)];
            b.a.mul_add(1.0, u, yd);
            b.sstar.mul_add(-1.0, z, yd);
        }
    }

    /// Adds the temporal jump rows of slab `n`.
    fn apply_jumps(&self, x: &[f64], n: usize, yp: &mut [f64]) {
        let (l, j) = (self.layout, &self.blocks.jumps);
        let u = &x[l.primal_range(n)];
        if n >= 1 {
            j.start_start.mul_add(1.0, u, yp);
            j.start_end.mul_add(-1.0, &x[l.primal_range(n - 1)], yp);
        }
        if n + 1 < self.n_slabs {
            j.end_end.mul_add(1.0, u, yp);
            j.end_start.mul_add(-1.0, &x[l.primal_range(n + 1)], yp);
        }
    }

    /// Applies only the temporal jump stabilization to the primal part of `x`.
    pub fn apply_jump_stabilization(&self, x: &[f64], y: &mut [f64]) {
        let l = self.layout;
        assert_eq!(x.len(), l.len());
        y.fill(0.0);
        for n in 0..self.n_slabs {
            let mut yp = vec![0.0; l.primal_len];
            self.apply_jumps(x, n, &mut yp);
            y[l.primal_range(n)].copy_from_slice(&yp);
        }
    }

    /// Load vector `(u_data, w1)` over the data region, on the primal rows.
    pub fn assemble_rhs(&self, data: impl Fn(f64, f64) -> f64) -> Result<SpaceTimeVector> {
        if self.omega.is_empty() {
            return Err(Error::EmptyDataDomain);
        }
        let mut out = SpaceTimeVector::zeros(self.layout);
        for n in 0..self.n_slabs {
            let load = self.data_load(&self.primal_space(n), &data);
            out.primal_mut(n).copy_from_slice(&load);
        }
        Ok(out)
    }

    /// Load vector `(u_data, y1)` over the data region, on the dual rows.
    pub fn assemble_dual_data(&self, data: impl Fn(f64, f64) -> f64) -> Result<SpaceTimeVector> {
        if self.omega.is_empty() {
            return Err(Error::EmptyDataDomain);
        }
        let mut out = SpaceTimeVector::zeros(self.layout);
        for n in 0..self.n_slabs {
            let load = self.data_load(&self.dual_space(n), &data);
            out.dual_mut(n).copy_from_slice(&load);
        }
        Ok(out)
    }

    /// `∫∫_{ω × I_n} f v` for every basis function `v` of the first field of `space`.
    fn data_load(&self, space: &SlabSpace, f: &impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let rule = gauss_rule(space.k.max(space.q) + 6).expect("bounded degree");
        let (sb, tb) = (space.spatial_basis(), space.temporal_basis());
        let mut out = vec![0.0; space.len()];
        let time: Vec<(f64, f64, Vec<f64>)> = rule
            .iter()
            .map(|(s, w)| (space.t_start + s * space.dt, w * space.dt, tb.eval(s, 0)))
            .collect();
        for e in 0..self.mesh.n_elems() {
            if !self.omega.contains_element(e) {
                continue;
            }
            let (x0, len) = (self.mesh.element_origin(e), self.mesh.element_length(e));
            for (xi, wx) in rule.iter() {
                let x = x0 + xi * len;
                let phi = sb.eval(xi, 0);
                for (t, wt, psi) in &time {
                    let fw = f(*t, x) * wx * len * wt;
                    for (a, pa) in psi.iter().enumerate() {
                        for (i, pi) in phi.iter().enumerate() {
                            out[space.dof(0, a, global_dof(space.k, e, i))] += fw * pa * pi;
                        }
                    }
                }
            }
        }
        out
    }

    /// Components of the stability norm of `x = (U, Z)`.
    pub fn triple_norm(&self, x: &SpaceTimeVector) -> Result<TripleNorm> {
        self.layout.check(x.data.len())?;
        let b = &self.blocks;
        let (mut st, mut data, mut dual) = (0.0, 0.0, 0.0);
        for n in 0..self.n_slabs {
            let (u, z) = (x.primal(n), x.dual(n));
            st += b.stabilizers.sh.bilinear(u, u);
            data += b.m_omega.bilinear(u, u);
            dual += b.sstar.bilinear(z, z);
        }
        let mut jy = vec![0.0; self.layout.len()];
        self.apply_jump_stabilization(x.as_slice(), &mut jy);
        let jumps: f64 = jy.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        let comps = [st, data, dual, jumps].map(|v| v.max(0.0));
        Ok(TripleNorm {
            stabilization: comps[0].sqrt(),
            data: comps[1].sqrt(),
            dual: comps[2].sqrt(),
            jumps: comps[3].sqrt(),
            total: comps.iter().sum::<f64>().sqrt(),
        })
    }

    fn check_dense(&self) -> Result<()> {
        if self.ndof() > DENSE_LIMIT {
            return Err(Error::TooLarge {
                ndof: self.ndof(),
                limit: DENSE_LIMIT,
            });
        }
        Ok(())
    }

    /// Dense matrix of the coupled operator, row = test function, column =
    /// trial function. The temporal jumps are built from slab-end traces
    /// rather than from the precomputed jump blocks.
    pub fn assemble_dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense()?;
        let l = self.layout;
        let b = &self.blocks;
        let mut d = DMatrix::zeros(l.len(), l.len());
        let local = self.primal_local();
        for n in 0..self.n_slabs {
            let (p, q) = (l.primal_range(n).start, l.dual_range(n).start);
            add_block(&mut d, p, p, &local, 1.0);
            add_block(&mut d, p, q, &b.a.transpose(), 1.0);
            add_block(&mut d, q, p, &b.a, 1.0);
            add_block(&mut d, q, q, &b.sstar, -1.0);
        }
        self.add_dense_jumps(&mut d);
        Ok(d)
    }

    /// Symmetric matrix whose quadratic form is the squared stability norm.
    pub fn assemble_dense_norm(&self) -> Result<DMatrix<f64>> {
        self.check_dense()?;
        let l = self.layout;
        let mut d = DMatrix::zeros(l.len(), l.len());
        let local = self.primal_local();
        for n in 0..self.n_slabs {
            let (p, q) = (l.primal_range(n).start, l.dual_range(n).start);
            add_block(&mut d, p, p, &local, 1.0);
            add_block(&mut d, q, q, &self.blocks.sstar, 1.0);
        }
        self.add_dense_jumps(&mut d);
        Ok(d)
    }

    /// Dense temporal jump stabilization alone.
    pub fn assemble_dense_jumps(&self) -> Result<DMatrix<f64>> {
        self.check_dense()?;
        let mut d = DMatrix::zeros(self.ndof(), self.ndof());
        self.add_dense_jumps(&mut d);
        Ok(d)
    }

    /// Adds `Σ_m Σ_f J_mfᵀ W_f J_mf` where `J_mf` maps a global vector to the
    /// jump of field `f` at interface `m`.
    fn add_dense_jumps(&self, d: &mut DMatrix<f64>) {
        let l = self.layout;
        let tr = &self.blocks.primal_traces;
        let (plus, minus) = (tr.plus.to_dense(), tr.minus.to_dense());
        let n_f = self.blocks.primal.n_f;
        for m in 1..self.n_slabs {
            for (f, w) in self.jump_weights.iter().enumerate() {
                let mut jump = DMatrix::zeros(plus.nrows(), l.len());
                let cur = l.primal_range(m).start + f * n_f;
                let prev = l.primal_range(m - 1).start + f * n_f;
                jump.columns_mut(cur, n_f).copy_from(&plus);
                jump.columns_mut(prev, n_f).copy_from(&(-&minus));
                *d += jump.transpose() * w.to_dense() * &jump;
            }
        }
    }
}

impl LinearOperator for SpaceTimeSystem {
    fn dim(&self) -> usize {
        self.ndof()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y);
    }
}

fn add_block(d: &mut DMatrix<f64>, row0: usize, col0: usize, m: &CsrMatrix, scale: f64) {
    for (i, j, v) in m.triplets() {
        d[(row0 + i, col0 + j)] += scale * v;
    }
}

/// Dense `x` as a column vector.
pub fn column(x: &SpaceTimeVector) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(n_slabs: usize, orders: Orders) -> SpaceTimeSystem {
        let mesh = IntervalMesh::new(0.0, 1.0, 4).unwrap();
        let omega = mesh.mark_data_domain(&[[0.0, 0.25], [0.75, 1.0]]).unwrap();
        SpaceTimeSystem::new(mesh, omega, orders, n_slabs, 0.5).unwrap()
    }

    fn random(l: SystemLayout, rng: &mut ChaCha8Rng) -> SpaceTimeVector {
        let v = (0..l.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        SpaceTimeVector::from_vec(l, v).unwrap()
    }

    /// Continuous-in-time primal part: every slab holds the same affine-in-time
    /// polynomial evaluated from a common global function.
    fn time_continuous(sys: &SpaceTimeSystem) -> SpaceTimeVector {
        let mut x = SpaceTimeVector::zeros(sys.layout());
        for n in 0..sys.n_slabs() {
            let sp = sys.primal_space(n);
            let nodes = sp.temporal_basis().lagrange().nodes().to_vec();
            for f in 0..2 {
                for (a, s) in nodes.iter().enumerate() {
                    let t = sp.t_start + s * sp.dt;
                    for j in 0..sp.n_x {
                        let xj = j as f64 / sp.n_x as f64;
                        x.primal_mut(n)[sp.dof(f, a, j)] = (1.0 + f as f64) * t + xj * xj;
                    }
                }
            }
        }
        x
    }

    #[test]
    fn layout_ranges() {
        let sys = small(3, Orders::new(2, 1, 1, 0));
        let l = sys.layout();
        // n_x = 9 primal, 5 dual
        assert_eq!(l.primal_len, 2 * 2 * 9);
        assert_eq!(l.dual_len, 2 * 5);
        assert_eq!(l.len(), 3 * (36 + 10));
        assert_eq!(l.dual_range(1), 82..92);
        assert_eq!(l.slab_range(2).end, l.len());
    }

    #[test]
    fn zero_maps_to_zero() {
        let sys = small(2, Orders::full(1, 1));
        let y = sys.apply(&SpaceTimeVector::zeros(sys.layout())).unwrap();
        assert_eq!(y.norm(), 0.0);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let sys = small(2, Orders::full(1, 1));
        let other = small(3, Orders::full(1, 1));
        let x = SpaceTimeVector::zeros(other.layout());
        assert!(matches!(sys.apply(&x), Err(Error::LayoutMismatch { .. })));
        assert!(SpaceTimeVector::from_vec(sys.layout(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn matches_dense_assembly() {
        let sys = small(2, Orders::full(1, 1));
        let d = sys.assemble_dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random(sys.layout(), &mut rng);
            let y = sys.apply(&x).unwrap();
            let yd = &d * column(&x);
            let err = (column(&y) - &yd).norm() / yd.norm();
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn matches_dense_assembly_mixed_orders() {
        let sys = small(3, Orders::new(2, 2, 1, 0));
        let d = sys.assemble_dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(sys.layout(), &mut rng);
        let yd = &d * column(&x);
        let err = (column(&sys.apply(&x).unwrap()) - &yd).norm() / yd.norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn norm_identity() {
        let sys = small(3, Orders::full(2, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dn = sys.assemble_dense_norm().unwrap();
        for _ in 0..10 {
            let x = random(sys.layout(), &mut rng);
            let bx = sys.apply(&x.with_negated_dual()).unwrap();
            let lhs = bx.dot(&x).unwrap();
            let tn = sys.triple_norm(&x).unwrap();
            assert!((lhs - tn.total.powi(2)).abs() < 1e-10 * lhs.abs().max(1.0));
            let xc = column(&x);
            let quad = (xc.transpose() * &dn * &xc)[0];
            assert!((quad - tn.total.powi(2)).abs() < 1e-10 * quad.max(1.0));
            let parts = tn.stabilization.powi(2) + tn.data.powi(2) + tn.dual.powi(2) + tn.jumps.powi(2);
            assert!((parts - tn.total.powi(2)).abs() < 1e-12 * parts);
        }
    }

    #[test]
    fn jump_blocks_are_symmetric() {
        let sys = small(3, Orders::full(1, 2));
        let j = sys.assemble_dense_jumps().unwrap();
        assert!((&j - j.transpose()).amax() < 1e-13);
        let z = DVector::zeros(sys.ndof());
        assert_eq!((&sys.assemble_dense().unwrap() * z).amax(), 0.0);
    }

    #[test]
    fn continuous_primal_has_no_jump_contribution() {
        let sys = small(3, Orders::full(1, 1));
        let x = time_continuous(&sys);
        let mut jy = vec![0.0; sys.ndof()];
        sys.apply_jump_stabilization(x.as_slice(), &mut jy);
        assert!(jy.iter().all(|v| v.abs() < 1e-12));
        assert!(sys.triple_norm(&x).unwrap().jumps < 1e-6);
        let tn = sys.triple_norm(&SpaceTimeVector::zeros(sys.layout())).unwrap();
        assert_eq!(tn.total, 0.0);
    }

    #[test]
    fn slab_locality() {
        let sys = small(5, Orders::full(1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = random(sys.layout(), &mut rng);
        let mut bumped = base.clone();
        bumped.primal_mut(2).iter_mut().for_each(|v| *v += 1.0);
        bumped.dual_mut(2)[1] -= 0.5;
        let dy = {
            let mut d = sys.apply(&bumped).unwrap();
            d.axpy(-1.0, &sys.apply(&base).unwrap()).unwrap();
            d
        };
        for n in [0, 4] {
            let l = sys.layout();
            assert!(dy.as_slice()[l.slab_range(n)].iter().all(|v| *v == 0.0));
        }
        assert!(dy.primal(1).iter().any(|v| *v != 0.0));
        assert!(dy.primal(3).iter().any(|v| *v != 0.0));
    }

    #[test]
    fn rhs_constant_data_on_whole_domain() {
        let mesh = IntervalMesh::new(0.0, 1.0, 4).unwrap();
        let omega = mesh.mark_data_domain(&[[0.0, 1.0]]).unwrap();
        let sys = SpaceTimeSystem::new(mesh, omega, Orders::full(1, 1), 2, 0.5).unwrap();
        let (dt, h) = (0.25, 0.25);
        let r = sys.assemble_rhs(|_, _| 1.0).unwrap();
        let sp = sys.primal_space(1);
        for a in 0..2 {
            for j in 0..sp.n_x {
                let hat = if j == 0 || j == sp.n_x - 1 { h / 2.0 } else { h };
                let got = r.primal(1)[sp.dof(0, a, j)];
                assert!((got - dt / 2.0 * hat).abs() < 1e-12);
                assert_eq!(r.primal(1)[sp.dof(1, a, j)], 0.0);
            }
        }
        assert!(r.dual(0).iter().all(|v| *v == 0.0));
        let z = sys.assemble_rhs(|_, _| 0.0).unwrap();
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn rhs_is_supported_on_data_elements() {
        let sys = small(2, Orders::full(2, 1));
        let r = sys.assemble_rhs(|t, x| (t + 1.0) * (x + 0.3)).unwrap();
        let sp = sys.primal_space(0);
        // dofs strictly inside (1/4, 3/4)
        for a in 0..2 {
            for j in 3..=5 {
                assert_eq!(r.primal(0)[sp.dof(0, a, j)], 0.0);
            }
            assert!(r.primal(0)[sp.dof(0, a, 1)] != 0.0);
            assert!(r.primal(0)[sp.dof(0, a, 7)] != 0.0);
        }
        let d = sys.assemble_dual_data(|_, _| 1.0).unwrap();
        assert!(d.primal(0).iter().all(|v| *v == 0.0));
        assert!(d.dual(1).iter().any(|v| *v != 0.0));
    }

    #[test]
    fn rhs_matches_data_mass_for_discrete_data() {
        // data inside the primal space: load equals the data mass applied to it
        let sys = small(2, Orders::full(1, 1));
        let f = |t: f64, x: f64| 2.0 * t - x;
        let r = sys.assemble_rhs(f).unwrap();
        for n in 0..2 {
            let sp = sys.primal_space(n);
            let mut u = vec![0.0; sp.len()];
            for (a, s) in [0.0, 1.0].iter().enumerate() {
                for j in 0..sp.n_x {
                    u[sp.dof(0, a, j)] = f(sp.t_start + s * sp.dt, j as f64 * 0.25);
                }
            }
            let mu = sys.blocks().m_omega.mul_vec(&u);
            for (x, y) in mu.iter().zip(r.primal(n)) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_data_domain_and_too_large() {
        let mesh = IntervalMesh::new(0.0, 1.0, 4).unwrap();
        let omega = mesh.mark_data_domain(&[]).unwrap();
        let sys = SpaceTimeSystem::new(mesh, omega, Orders::full(1, 1), 2, 0.5).unwrap();
        assert_eq!(sys.assemble_rhs(|_, _| 1.0).unwrap_err(), Error::EmptyDataDomain);
        let mesh = IntervalMesh::new(0.0, 1.0, 128).unwrap();
        let omega = mesh.mark_data_domain(&[[0.0, 0.25]]).unwrap();
        let big = SpaceTimeSystem::new(mesh, omega, Orders::full(2, 2), 8, 0.5).unwrap();
        assert!(matches!(big.assemble_dense(), Err(Error::TooLarge { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn apply_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let sys = small(3, Orders::new(1, 1, 1, 0));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = (random(sys.layout(), &mut rng), random(sys.layout(), &mut rng));
            let mut comb = x.clone();
            comb.scale(alpha);
            comb.axpy(beta, &y).unwrap();
            let lhs = sys.apply(&comb).unwrap();
            let mut rhs = sys.apply(&x).unwrap();
            rhs.scale(alpha);
            rhs.axpy(beta, &sys.apply(&y).unwrap()).unwrap();
            let mut diff = lhs.clone();
            diff.axpy(-1.0, &rhs).unwrap();
            prop_assert!(diff.norm() <= 1e-12 * rhs.norm().max(1e-300) + 1e-14);
        }
    }
}
