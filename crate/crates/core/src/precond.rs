//! Slab-sequential preconditioners for the coupled system.
//!
//! Each preconditioner replaces the global operator by an approximation that
//! can be inverted one slab at a time. Slab matrices are factored once; uniform
//! slab partitions need at most two factorizations per matrix type (first slab
//! and the rest).

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::krylov::{Identity, Preconditioner};
use crate::slab_forms::{
    assemble_atilde_extras, assemble_backward_form, dof_coordinate, volume_rule, SlabSpace,
};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::system::{SpaceTimeSystem, SystemLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreconditionerKind {
    None,
    /// diagonal slab blocks, temporal jumps dropped
    BlockJacobi,
    /// forward sweep with the temporal jumps tested on the slab start only
    MonolithicForward,
    /// decoupled forward sweep for the primal and backward sweep for the dual
    /// variable, with the given Nitsche penalty
    ForwardBackward { lambda: f64 },
}

impl PreconditionerKind {
    pub fn build(self, system: &SpaceTimeSystem) -> Result<Box<dyn Preconditioner + Send + Sync>> {
        Ok(match self {
            Self::None => Box::new(Identity),
            Self::BlockJacobi => Box::new(BlockJacobi::new(system)?),
            Self::MonolithicForward => Box::new(MonolithicForward::new(system)?),
            Self::ForwardBackward { lambda } => Box::new(ForwardBackward::new(system, lambda)?),
        })
    }
}

/// Banded LU of one slab matrix with the unknowns sorted by spatial position.
#[derive(Debug, Clone)]
pub struct SlabSolver {
    lu: BandedLu,
}

impl SlabSolver {
    pub fn factor(m: &CsrMatrix, order: &[usize], slab: usize, which: &'static str) -> Result<Self> {
        BandedLu::factor(m, order)
            .map(|lu| Self { lu })
            .map_err(|_| Error::SingularSlabSystem { slab, which })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.lu.solve_in_place(b);
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }
}

/// Spatial coordinate of every unknown of `space`, in slab ordering.
fn coordinates(space: &SlabSpace, system: &SpaceTimeSystem) -> Vec<f64> {
    let mesh = system.mesh();
    (0..space.len())
        .map(|i| dof_coordinate(mesh, space.k, i % space.n_x))
        .collect()
}

/// Permutation `order[new] = old` sorting by coordinate, stable in the index.
fn spatial_order(coords: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]).then(a.cmp(&b)));
    order
}

fn saddle_order(system: &SpaceTimeSystem) -> Vec<usize> {
    let mut c = coordinates(&system.primal_space(0), system);
    c.extend(coordinates(&system.dual_space(0), system));
    spatial_order(&c)
}

/// `[[top_left, aᵀ], [a, -sstar]]`
fn saddle(top_left: &CsrMatrix, a: &CsrMatrix, sstar: &CsrMatrix) -> CsrMatrix {
    let (p, d) = (top_left.nrows(), sstar.nrows());
    let mut c = CooBuilder::new(p + d, p + d);
    c.add_block(0, 0, top_left, 1.0);
    c.add_block(0, p, &a.transpose(), 1.0);
    c.add_block(p, 0, a, 1.0);
    c.add_block(p, p, sstar, -1.0);
    c.build()
}

fn check_len(layout: SystemLayout, r: &[f64], out: &[f64]) {
    assert_eq!(r.len(), layout.len());
    assert_eq!(out.len(), layout.len());
}

/// Independent solves with the diagonal slab blocks of the coupled operator.
#[derive(Debug, Clone)]
pub struct BlockJacobi {
    layout: SystemLayout,
    solver: SlabSolver,
}

impl BlockJacobi {
    pub fn new(system: &SpaceTimeSystem) -> Result<Self> {
        let b = system.blocks();
        let m = saddle(&system.primal_local(), &b.a, &b.sstar);
        Ok(Self {
            layout: system.layout(),
            solver: SlabSolver::factor(&m, &saddle_order(system), 0, "block diagonal")?,
        })
    }
}

impl Preconditioner for BlockJacobi {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        check_len(self.layout, r, out);
        out.copy_from_slice(r);
        for n in 0..self.layout.n_slabs {
            self.solver.solve_in_place(&mut out[self.layout.slab_range(n)]);
        }
    }
}

/// Forward sweep over the system in which every temporal jump is tested only
/// against the trace at the start of the later slab. The dual orders of the
/// underlying system decide between the full and the lowest order variant.
#[derive(Debug, Clone)]
pub struct MonolithicForward {
    layout: SystemLayout,
    first: SlabSolver,
    interior: Option<SlabSolver>,
    /// start-test, end-trial jump block moved to the right-hand side
    start_end: CsrMatrix,
}

impl MonolithicForward {
    /// Slab matrices `(first, interior)` of the forward system.
    pub fn slab_matrices(system: &SpaceTimeSystem) -> (CsrMatrix, CsrMatrix) {
        let b = system.blocks();
        let local = system.primal_local();
        (
            saddle(&local, &b.a, &b.sstar),
            saddle(&local.add(&b.jumps.start_start, 1.0), &b.a, &b.sstar),
        )
    }

    pub fn new(system: &SpaceTimeSystem) -> Result<Self> {
        let order = saddle_order(system);
        let (first, interior) = Self::slab_matrices(system);
        let interior = if system.n_slabs() > 1 {
            Some(SlabSolver::factor(&interior, &order, 1, "forward sweep")?)
        } else {
            None
        };
        Ok(Self {
            layout: system.layout(),
            first: SlabSolver::factor(&first, &order, 0, "forward sweep")?,
            interior,
            start_end: system.blocks().jumps.start_end.clone(),
        })
    }
}

impl Preconditioner for MonolithicForward {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let l = self.layout;
        check_len(l, r, out);
        out.copy_from_slice(r);
        self.first.solve_in_place(&mut out[l.slab_range(0)]);
        for n in 1..l.n_slabs {
            let (done, rest) = out.split_at_mut(l.slab_range(n).start);
            let prev = &done[l.primal_range(n - 1)];
            let slab = &mut rest[..l.slab_len()];
            self.start_end.mul_add(1.0, prev, &mut slab[..l.primal_len]);
            self.interior
                .as_ref()
                .expect("factored when more than one slab")
                .solve_in_place(slab);
        }
    }
}

/// Forward sweep with the enriched wave form for the primal variable, then a
/// backward sweep with its transpose for the dual variable.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    layout: SystemLayout,
    forward_first: SlabSolver,
    forward_interior: Option<SlabSolver>,
    /// row slab `n`, column slab `n - 1`
    forward_sub: CsrMatrix,
    backward_first: SlabSolver,
    backward_interior: Option<SlabSolver>,
    /// row slab `n - 1`, column slab `n`
    backward_upper: CsrMatrix,
    local: CsrMatrix,
    jumps: crate::slab_forms::JumpBlocks,
}

/// Slab matrices of the two sweeps.
#[derive(Debug, Clone)]
pub struct ForwardBackwardMatrices {
    pub forward_first: CsrMatrix,
    pub forward_interior: CsrMatrix,
    pub forward_sub: CsrMatrix,
    pub backward_first: CsrMatrix,
    pub backward_interior: CsrMatrix,
    pub backward_upper: CsrMatrix,
}

impl ForwardBackward {
    pub fn slab_matrices(system: &SpaceTimeSystem, lambda: f64) -> Result<ForwardBackwardMatrices> {
        let o = system.orders();
        if (o.kstar, o.qstar) != (o.k, o.q) {
            return Err(Error::OrderMismatch {
                k: o.k,
                q: o.q,
                kstar: o.kstar,
                qstar: o.qstar,
            });
        }
        let (primal, dual) = (system.primal_space(0), system.dual_space(0));
        let quad = volume_rule(&[o.k, o.q]);
        let ex = assemble_atilde_extras(&primal, &dual, system.mesh(), system.omega(), lambda, &quad)?;
        let bw = assemble_backward_form(&primal, &dual, system.mesh(), system.omega(), lambda, &quad)?;
        let forward_first = system.blocks().a.add(&ex.observer, 1.0).add(&ex.nitsche, 1.0);
        Ok(ForwardBackwardMatrices {
            forward_interior: forward_first.add(&ex.coupling_diag, 1.0),
            forward_first,
            forward_sub: ex.coupling_sub,
            backward_first: bw.first,
            backward_interior: bw.interior,
            backward_upper: bw.upper,
        })
    }

    pub fn new(system: &SpaceTimeSystem, lambda: f64) -> Result<Self> {
        let m = Self::slab_matrices(system, lambda)?;
        let order = spatial_order(&coordinates(&system.primal_space(0), system));
        let several = system.n_slabs() > 1;
        let factor_interior = |mat: &CsrMatrix, which| {
            several
                .then(|| SlabSolver::factor(mat, &order, 1, which))
                .transpose()
        };
        Ok(Self {
            layout: system.layout(),
            forward_first: SlabSolver::factor(&m.forward_first, &order, 0, "forward wave sweep")?,
            forward_interior: factor_interior(&m.forward_interior, "forward wave sweep")?,
            forward_sub: m.forward_sub,
            backward_first: SlabSolver::factor(&m.backward_first, &order, 0, "backward adjoint sweep")?,
            backward_interior: factor_interior(&m.backward_interior, "backward adjoint sweep")?,
            backward_upper: m.backward_upper,
            local: system.primal_local(),
            jumps: system.blocks().jumps.clone(),
        })
    }

    fn diagonal<'a>(&self, first: &'a SlabSolver, interior: &'a Option<SlabSolver>, n: usize) -> &'a SlabSolver {
        if n == 0 {
            first
        } else {
            interior.as_ref().expect("factored when more than one slab")
        }
    }
}

impl Preconditioner for ForwardBackward {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let l = self.layout;
        check_len(l, r, out);
        let n_slabs = l.n_slabs;
        // primal variable from the dual-test rows
        let mut u: Vec<Vec<f64>> = Vec::with_capacity(n_slabs);
        for n in 0..n_slabs {
            let mut rhs = r[l.dual_range(n)].to_vec();
            if n >= 1 {
                self.forward_sub.mul_add(-1.0, &u[n - 1], &mut rhs);
            }
            self.diagonal(&self.forward_first, &self.forward_interior, n)
                .solve_in_place(&mut rhs);
            u.push(rhs);
        }
        // primal-test residual after removing data, stabilization and jumps
        let mut rhs: Vec<Vec<f64>> = (0..n_slabs)
            .map(|n| {
                let mut v = r[l.primal_range(n)].to_vec();
                self.local.mul_add(-1.0, &u[n], &mut v);
                if n >= 1 {
                    self.jumps.start_start.mul_add(-1.0, &u[n], &mut v);
                    self.jumps.start_end.mul_add(1.0, &u[n - 1], &mut v);
                }
                if n + 1 < n_slabs {
                    self.jumps.end_end.mul_add(-1.0, &u[n], &mut v);
                    self.jumps.end_start.mul_add(1.0, &u[n + 1], &mut v);
                }
                v
            })
            .collect();
        // dual variable backwards in time
        for n in (0..n_slabs).rev() {
            if n + 1 < n_slabs {
                let (head, tail) = rhs.split_at_mut(n + 1);
                self.backward_upper.mul_add(-1.0, &tail[0], &mut head[n]);
            }
            self.diagonal(&self.backward_first, &self.backward_interior, n)
                .solve_in_place(&mut rhs[n]);
        }
        for n in 0..n_slabs {
            out[l.primal_range(n)].copy_from_slice(&u[n]);
            out[l.dual_range(n)].copy_from_slice(&rhs[n]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::IntervalMesh;
    use crate::system::Orders;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(n_slabs: usize, orders: Orders) -> SpaceTimeSystem {
        let mesh = IntervalMesh::new(0.0, 1.0, 4).unwrap();
        let omega = mesh.mark_data_domain(&[[0.0, 0.25], [0.75, 1.0]]).unwrap();
        SpaceTimeSystem::new(mesh, omega, orders, n_slabs, 0.5).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn apply(pc: &dyn Preconditioner, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        pc.apply(r, &mut out);
        out
    }

    fn place(d: &mut DMatrix<f64>, r0: usize, c0: usize, m: &CsrMatrix, s: f64) {
        for (i, j, v) in m.triplets() {
            d[(r0 + i, c0 + j)] += s * v;
        }
    }

    /// Dense global matrix of the forward-tested system.
    fn dense_forward(sys: &SpaceTimeSystem) -> DMatrix<f64> {
        let l = sys.layout();
        let (first, interior) = MonolithicForward::slab_matrices(sys);
        let mut d = DMatrix::zeros(l.len(), l.len());
        for n in 0..l.n_slabs {
            let s = l.slab_range(n).start;
            place(&mut d, s, s, if n == 0 { &first } else { &interior }, 1.0);
            if n >= 1 {
                place(&mut d, s, l.primal_range(n - 1).start, &sys.blocks().jumps.start_end, -1.0);
            }
        }
        d
    }

    fn rel(a: &[f64], b: &DVector<f64>) -> f64 {
        (DVector::from_column_slice(a) - b).norm() / b.norm()
    }

    #[test]
    fn forward_system_is_block_lower_triangular() {
        let sys = system(3, Orders::full(1, 1));
        let d = dense_forward(&sys);
        let l = sys.layout();
        for n in 0..3 {
            for m in n + 1..3 {
                let blk = d.view((l.slab_range(n).start, l.slab_range(m).start), (l.slab_len(), l.slab_len()));
                assert_eq!(blk.amax(), 0.0);
            }
        }
        // it differs from the full operator only next to the diagonal
        let diff = sys.assemble_dense().unwrap() - &d;
        for n in 0..3 {
            for m in (0..3usize).filter(|m| m.abs_diff(n) > 1) {
                let blk = diff.view((l.slab_range(n).start, l.slab_range(m).start), (l.slab_len(), l.slab_len()));
                assert_eq!(blk.amax(), 0.0);
            }
        }
    }

    #[test]
    fn monolithic_forward_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for orders in [Orders::full(1, 1), Orders::new(2, 1, 1, 0)] {
            let sys = system(2, orders);
            let pc = MonolithicForward::new(&sys).unwrap();
            let lu = dense_forward(&sys).lu();
            let r = random(sys.ndof(), &mut rng);
            let exact = lu.solve(&DVector::from_column_slice(&r)).unwrap();
            assert!(rel(&apply(&pc, &r), &exact) < 1e-10);
        }
    }

    #[test]
    fn single_slab_forward_sweep_is_exact() {
        let sys = system(1, Orders::full(2, 1));
        let pc = MonolithicForward::new(&sys).unwrap();
        let d = sys.assemble_dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random(sys.ndof(), &mut rng);
        let exact = d.lu().solve(&DVector::from_column_slice(&r)).unwrap();
        assert!(rel(&apply(&pc, &r), &exact) < 1e-10);
        let bj = BlockJacobi::new(&sys).unwrap();
        assert!(rel(&apply(&bj, &r), &exact) < 1e-10);
    }

    #[test]
    fn block_jacobi_is_slab_local() {
        let sys = system(3, Orders::full(1, 1));
        let pc = BlockJacobi::new(&sys).unwrap();
        let l = sys.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = vec![0.0; sys.ndof()];
        let s = l.slab_range(1);
        r[s.clone()].copy_from_slice(&random(l.slab_len(), &mut rng));
        let out = apply(&pc, &r);
        for n in [0, 2] {
            assert!(out[l.slab_range(n)].iter().all(|v| *v == 0.0));
        }
        // against a dense block-diagonal solve
        let full = sys.assemble_dense().unwrap();
        let jumps = sys.assemble_dense_jumps().unwrap();
        let block = (full - jumps).view((s.start, s.start), (l.slab_len(), l.slab_len())).into_owned();
        let exact = block.lu().solve(&DVector::from_column_slice(&r[s.clone()])).unwrap();
        assert!(rel(&out[s], &exact) < 1e-10);
    }

    /// Dense forward enriched wave operator and the backward sweep operator.
    fn dense_sweeps(sys: &SpaceTimeSystem, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = ForwardBackward::slab_matrices(sys, lambda).unwrap();
        let (n, p) = (sys.n_slabs(), sys.layout().primal_len);
        let mut fwd = DMatrix::zeros(n * p, n * p);
        let mut bwd = DMatrix::zeros(n * p, n * p);
        for s in 0..n {
            let (df, db) = if s == 0 {
                (&m.forward_first, &m.backward_first)
            } else {
                (&m.forward_interior, &m.backward_interior)
            };
            place(&mut fwd, s * p, s * p, df, 1.0);
            place(&mut bwd, s * p, s * p, db, 1.0);
            if s >= 1 {
                place(&mut fwd, s * p, (s - 1) * p, &m.forward_sub, 1.0);
                place(&mut bwd, (s - 1) * p, s * p, &m.backward_upper, 1.0);
            }
        }
        (fwd, bwd)
    }

    #[test]
    fn forward_backward_matches_dense_sweeps() {
        let sys = system(2, Orders::full(1, 1));
        let lambda = 10.0;
        let pc = ForwardBackward::new(&sys, lambda).unwrap();
        let (fwd, bwd) = dense_sweeps(&sys, lambda);
        assert!((&bwd - fwd.transpose()).amax() < 1e-12);

        let l = sys.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random(sys.ndof(), &mut rng);
        let out = apply(&pc, &r);
        let gather = |v: &[f64], dual: bool| -> DVector<f64> {
            let mut g = Vec::new();
            for n in 0..l.n_slabs {
                g.extend_from_slice(&v[if dual { l.dual_range(n) } else { l.primal_range(n) }]);
            }
            DVector::from_vec(g)
        };
        let u = fwd.clone().lu().solve(&gather(&r, true)).unwrap();
        assert!((gather(&out, false) - &u).norm() < 1e-10 * u.norm());

        // second step right-hand side from the dense norm pieces
        let mut uz = vec![0.0; sys.ndof()];
        for n in 0..l.n_slabs {
            uz[l.primal_range(n)].copy_from_slice(&u.as_slice()[n * l.primal_len..(n + 1) * l.primal_len]);
        }
        let norm = sys.assemble_dense_norm().unwrap();
        let wu = &norm * DVector::from_vec(uz);
        let rhs = gather(&r, false) - gather(wu.as_slice(), false);
        let z = bwd.lu().solve(&rhs).unwrap();
        assert!((gather(&out, true) - &z).norm() < 1e-10 * z.norm());
    }

    #[test]
    fn forward_backward_needs_equal_orders() {
        let sys = system(2, Orders::new(1, 1, 1, 0));
        assert!(matches!(
            ForwardBackward::new(&sys, 10.0),
            Err(Error::OrderMismatch { .. })
        ));
        assert!(matches!(
            ForwardBackward::new(&system(2, Orders::full(1, 1)), 0.0),
            Err(Error::NonpositivePenalty(_))
        ));
    }

    #[test]
    fn zero_and_linearity_and_determinism() {
        let sys = system(3, Orders::full(1, 1));
        let pcs: Vec<Box<dyn Preconditioner + Send + Sync>> = [
            PreconditionerKind::BlockJacobi,
            PreconditionerKind::MonolithicForward,
            PreconditionerKind::ForwardBackward { lambda: 10.0 },
        ]
        .into_iter()
        .map(|k| k.build(&sys).unwrap())
        .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = sys.ndof();
        for pc in &pcs {
            assert!(apply(pc.as_ref(), &vec![0.0; n]).iter().all(|v| *v == 0.0));
            let (x, y) = (random(n, &mut rng), random(n, &mut rng));
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = apply(pc.as_ref(), &comb);
            let (mx, my) = (apply(pc.as_ref(), &x), apply(pc.as_ref(), &y));
            let rhs: Vec<f64> = mx.iter().zip(&my).map(|(p, q)| a * p + b * q).collect();
            let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let err = lhs.iter().zip(&rhs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-11 * scale, "{err} vs {scale}");
            assert_eq!(apply(pc.as_ref(), &x), mx);
        }
    }

    #[test]
    fn shared_interior_factorization_matches_per_slab_solves() {
        let sys = system(4, Orders::full(1, 1));
        let pc = MonolithicForward::new(&sys).unwrap();
        let (_, interior) = MonolithicForward::slab_matrices(&sys);
        let order = saddle_order(&sys);
        let per_slab: Vec<SlabSolver> = (1..4)
            .map(|n| SlabSolver::factor(&interior, &order, n, "forward sweep").unwrap())
            .collect();
        let l = sys.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = random(sys.ndof(), &mut rng);
        let mut out = r.clone();
        pc.first.solve_in_place(&mut out[l.slab_range(0)]);
        for n in 1..4 {
            let prev = out[l.primal_range(n - 1)].to_vec();
            let s = l.slab_range(n);
            sys.blocks().jumps.start_end.mul_add(1.0, &prev, &mut out[s.start..s.start + l.primal_len]);
            per_slab[n - 1].solve_in_place(&mut out[s]);
        }
        assert_eq!(out, apply(&pc, &r));
    }

    #[test]
    fn singular_slab_reports_index() {
        let m = CsrMatrix::zeros(3, 3);
        let err = SlabSolver::factor(&m, &[0, 1, 2], 5, "test").unwrap_err();
        assert_eq!(err, Error::SingularSlabSystem { slab: 5, which: "test" });
    }
}
