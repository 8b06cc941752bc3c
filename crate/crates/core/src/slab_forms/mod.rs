//! Slab-local matrices of the stabilized space-time formulation.
//!
//! A slab space is the tensor product `P^q(I_n) ⊗ V_h^k` for each of its two
//! fields. Unknowns are ordered `(field, temporal mode, spatial dof)`, so index
//! `f * n_f + a * n_x + j` addresses field `f`, temporal mode `a`, spatial dof `j`.
//! Every slab form is a sum of Kronecker products of a reference temporal matrix
//! and a spatial matrix, which is how the blocks are assembled here.
//!
//! Rectangular blocks are stored with rows indexed by the test space and columns
//! by the trial space.

mod spatial;
mod temporal;

pub use spatial::{dof_coordinate, global_dof, spatial_dofs, SpatialForms};
pub use temporal::TemporalForms;

use nalgebra::DMatrix;

use crate::basis::{gauss_rule, NodalBasis, QuadratureRule, SpatialBasis, TemporalBasis};
use crate::error::{Error, Result};
use crate::mesh::{DataDomain, IntervalMesh};
use crate::sparse::{CooBuilder, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceRole {
    /// Fields `(u1, u2)`, tested by `(w1, w2)`.
    Primal,
    /// Fields `(z1, z2)`, tested by `(y1, y2)`.
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabSpace {
    pub role: SpaceRole,
    pub k: usize,
    pub q: usize,
    pub n_x: usize,
    /// dofs per field, `(q + 1) * n_x`
    pub n_f: usize,
    pub slab: usize,
    pub t_start: f64,
    pub dt: f64,
    spatial: SpatialBasis,
    temporal: TemporalBasis,
}

impl SlabSpace {
    pub fn new(
        mesh: &IntervalMesh,
        role: SpaceRole,
        k: usize,
        q: usize,
        slab: usize,
        t_start: f64,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("slab length must be positive, got {dt}")));
        }
        let spatial = SpatialBasis::new(k)?;
        let temporal = TemporalBasis::new(q)?;
        let n_x = spatial_dofs(mesh, k);
        Ok(Self {
            role,
            k,
            q,
            n_x,
            n_f: (q + 1) * n_x,
            slab,
            t_start,
            dt,
            spatial,
            temporal,
        })
    }

    /// Total number of unknowns of the slab (both fields).
    pub fn len(&self) -> usize {
        2 * self.n_f
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dof(&self, field: usize, mode: usize, j: usize) -> usize {
        field * self.n_f + mode * self.n_x + j
    }

    pub fn spatial_basis(&self) -> &SpatialBasis {
        &self.spatial
    }

    pub fn temporal_basis(&self) -> &TemporalBasis {
        &self.temporal
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.dt
    }

    fn check_mesh(&self, mesh: &IntervalMesh) -> Result<()> {
        if spatial_dofs(mesh, self.k) != self.n_x {
            return Err(Error::SpaceMismatch(format!(
                "space has {} spatial dofs, mesh yields {}",
                self.n_x,
                spatial_dofs(mesh, self.k)
            )));
        }
        Ok(())
    }
}

fn check_pair(primal: &SlabSpace, dual: &SlabSpace, mesh: &IntervalMesh) -> Result<()> {
    primal.check_mesh(mesh)?;
    dual.check_mesh(mesh)?;
    if primal.role != SpaceRole::Primal || dual.role != SpaceRole::Dual {
        return Err(Error::SpaceMismatch("expected a primal and a dual space".into()));
    }
    if primal.dt != dual.dt || primal.slab != dual.slab {
        return Err(Error::SpaceMismatch(
            "primal and dual spaces live on different slabs".into(),
        ));
    }
    Ok(())
}

/// Gauss rule exact for every bilinear form of the given degrees.
pub fn volume_rule(degrees: &[usize]) -> QuadratureRule {
    let m = degrees.iter().copied().max().unwrap_or(1);
    gauss_rule(m + 2).expect("degree bounded by basis limits")
}

fn temporal(trial: &SlabSpace, test: &SlabSpace, quad: &QuadratureRule) -> TemporalForms {
    TemporalForms::assemble(trial.temporal_basis(), test.temporal_basis(), quad)
}

fn spatial(
    trial: &SlabSpace,
    test: &SlabSpace,
    mesh: &IntervalMesh,
    omega: Option<&DataDomain>,
    quad: &QuadratureRule,
) -> SpatialForms {
    SpatialForms::assemble(mesh, omega, trial.spatial_basis(), test.spatial_basis(), quad)
}

/// Places Kronecker blocks into a `test × trial` slab matrix.
struct SlabMatrix<'a> {
    coo: CooBuilder,
    test: &'a SlabSpace,
    trial: &'a SlabSpace,
}

impl<'a> SlabMatrix<'a> {
    fn new(test: &'a SlabSpace, trial: &'a SlabSpace) -> Self {
        Self {
            coo: CooBuilder::new(test.len(), trial.len()),
            test,
            trial,
        }
    }

    fn add(&mut self, test_field: usize, trial_field: usize, t: &DMatrix<f64>, s: &CsrMatrix, scale: f64) {
        self.coo.add_kron(
            test_field * self.test.n_f,
            trial_field * self.trial.n_f,
            t,
            s,
            scale,
        );
    }

    fn build(self) -> CsrMatrix {
        self.coo.build()
    }
}

/// Mixed wave operator `A[U, Y]`: rows are dual test functions, columns primal
/// trial functions.
pub fn assemble_a(
    primal: &SlabSpace,
    dual: &SlabSpace,
    mesh: &IntervalMesh,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    check_pair(primal, dual, mesh)?;
    let t = temporal(primal, dual, quad);
    let s = spatial(primal, dual, mesh, None, quad);
    let dt = primal.dt;
    let mut m = SlabMatrix::new(dual, primal);
    // (∂t u2, y1) + a(u1, y1) - (∂x u1 n, y1)_Σ
    m.add(0, 1, &t.deriv, &s.mass, 1.0);
    m.add(0, 0, &t.mass, &s.stiffness, dt);
    m.add(0, 0, &t.mass, &s.flux, -dt);
    // (∂t u1 - u2, y2)
    m.add(1, 0, &t.deriv, &s.mass, 1.0);
    m.add(1, 1, &t.mass, &s.mass, -dt);
    Ok(m.build())
}

/// Components of the primal stabilization on one slab.
#[derive(Debug, Clone)]
pub struct PrimalStabilizers {
    /// gradient-jump penalty over interior facets
    pub j: CsrMatrix,
    /// elementwise least squares on the strong residual
    pub g: CsrMatrix,
    /// consistency of `u2` with `∂t u1`
    pub i0: CsrMatrix,
    /// boundary penalty
    pub r: CsrMatrix,
    /// `J + G + R + I0`
    pub sh: CsrMatrix,
}

pub fn assemble_primal_stabilizers(
    primal: &SlabSpace,
    mesh: &IntervalMesh,
    quad: &QuadratureRule,
) -> Result<PrimalStabilizers> {
    primal.check_mesh(mesh)?;
    if primal.role != SpaceRole::Primal {
        return Err(Error::SpaceMismatch("primal stabilizers need a primal space".into()));
    }
    let t = temporal(primal, primal, quad);
    let s = spatial(primal, primal, mesh, None, quad);
    let (dt, h) = (primal.dt, mesh.h());
    let deriv_t = t.deriv.transpose();

    let mut j = SlabMatrix::new(primal, primal);
    j.add(0, 0, &t.mass, &s.gradient_jump, dt);

    let h2 = h * h;
    let mut g = SlabMatrix::new(primal, primal);
    g.add(1, 1, &t.deriv_deriv, &s.mass, h2 / dt);
    g.add(1, 0, &deriv_t, &s.laplace_mass, -h2);
    g.add(0, 1, &t.deriv, &s.laplace_mass.transpose(), -h2);
    g.add(0, 0, &t.mass, &s.laplace_laplace, h2 * dt);

    let mut i0 = SlabMatrix::new(primal, primal);
    i0.add(1, 1, &t.mass, &s.mass, dt);
    i0.add(1, 0, &t.deriv, &s.mass, -1.0);
    i0.add(0, 1, &deriv_t, &s.mass, -1.0);
    i0.add(0, 0, &t.deriv_deriv, &s.mass, 1.0 / dt);

    let mut r = SlabMatrix::new(primal, primal);
    r.add(0, 0, &t.mass, &s.boundary_mass, dt / h);

    let (j, g, i0, r) = (j.build(), g.build(), i0.build(), r.build());
    let sh = j.add(&g, 1.0).add(&i0, 1.0).add(&r, 1.0);
    Ok(PrimalStabilizers { j, g, i0, r, sh })
}

/// Dual stabilization `S*` on one slab.
pub fn assemble_dual_stabilizer(
    dual: &SlabSpace,
    mesh: &IntervalMesh,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    dual.check_mesh(mesh)?;
    if dual.role != SpaceRole::Dual {
        return Err(Error::SpaceMismatch("dual stabilizer needs a dual space".into()));
    }
    let t = temporal(dual, dual, quad);
    let s = spatial(dual, dual, mesh, None, quad);
    let (dt, h) = (dual.dt, mesh.h());
    let s11 = s.mass.add(&s.stiffness, 1.0).add(&s.boundary_mass, 1.0 / h);
    let mut m = SlabMatrix::new(dual, dual);
    m.add(0, 0, &t.mass, &s11, dt);
    m.add(1, 1, &t.mass, &s.mass, dt);
    Ok(m.build())
}

/// Data term `(u1, w1)` over `ω × I_n`.
pub fn assemble_data_mass(
    primal: &SlabSpace,
    mesh: &IntervalMesh,
    omega: &DataDomain,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    primal.check_mesh(mesh)?;
    let t = temporal(primal, primal, quad);
    let s = spatial(primal, primal, mesh, Some(omega), quad);
    let mut m = SlabMatrix::new(primal, primal);
    m.add(0, 0, &t.mass, &s.omega_mass, primal.dt);
    Ok(m.build())
}

/// Maps the coefficients of one field to the spatial coefficients of its trace
/// at the slab start (`plus`, the value `v(t_n^+)`) and end (`minus`, the value
/// `v(t_{n+1}^-)`). The same maps give the gradient traces, which are paired
/// through the stiffness matrix.
#[derive(Debug, Clone)]
pub struct TimeTraces {
    pub plus: CsrMatrix,
    pub minus: CsrMatrix,
}

pub fn assemble_time_traces(space: &SlabSpace, mesh: &IntervalMesh) -> Result<TimeTraces> {
    space.check_mesh(mesh)?;
    let eye = CsrMatrix::identity(space.n_x);
    let build = |s: f64| {
        let row = DMatrix::from_row_slice(1, space.q + 1, &space.temporal_basis().lagrange().eval(s, 0));
        let mut c = CooBuilder::new(space.n_x, space.n_f);
        c.add_kron(0, 0, &row, &eye, 1.0);
        c.build()
    };
    Ok(TimeTraces {
        plus: build(0.0),
        minus: build(1.0),
    })
}

/// Slab-end pieces of the temporal jump stabilization. With `⟦v⟧ = v_+ - v_-` at
/// the interface between slabs `n-1` and `n`, the interface contributes
/// `start_start` to block `(n, n)`, `end_end` to `(n-1, n-1)`, `-start_end` to
/// `(n, n-1)` and `-end_start` to `(n-1, n)`.
#[derive(Debug, Clone)]
pub struct JumpBlocks {
    pub start_start: CsrMatrix,
    pub end_end: CsrMatrix,
    /// test at slab start, trial at slab end
    pub start_end: CsrMatrix,
    /// test at slab end, trial at slab start
    pub end_start: CsrMatrix,
}

pub fn assemble_jump_blocks(
    primal: &SlabSpace,
    mesh: &IntervalMesh,
    quad: &QuadratureRule,
) -> Result<JumpBlocks> {
    primal.check_mesh(mesh)?;
    let t = temporal(primal, primal, quad);
    let s = spatial(primal, primal, mesh, None, quad);
    let dt = primal.dt;
    let w1 = s.mass.add(&s.stiffness, dt * dt);
    let block = |test_end: bool, trial_end: bool| {
        let tp = t.trace_product(test_end, trial_end);
        let mut m = SlabMatrix::new(primal, primal);
        m.add(0, 0, &tp, &w1, 1.0 / dt);
        m.add(1, 1, &tp, &s.mass, 1.0 / dt);
        m.build()
    };
    Ok(JumpBlocks {
        start_start: block(false, false),
        end_end: block(true, true),
        start_end: block(false, true),
        end_start: block(true, false),
    })
}

/// Terms added to `A` in the enriched forward form. Rows are dual tests,
/// columns primal trials. `coupling_diag` acts within slab `n >= 1`,
/// `coupling_sub` couples row slab `n` to column slab `n - 1`.
#[derive(Debug, Clone)]
pub struct AtildeExtras {
    pub observer: CsrMatrix,
    pub nitsche: CsrMatrix,
    pub coupling_diag: CsrMatrix,
    pub coupling_sub: CsrMatrix,
}

pub fn assemble_atilde_extras(
    primal: &SlabSpace,
    dual: &SlabSpace,
    mesh: &IntervalMesh,
    omega: &DataDomain,
    lambda: f64,
    quad: &QuadratureRule,
) -> Result<AtildeExtras> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositivePenalty(lambda));
    }
    check_pair(primal, dual, mesh)?;
    let t = temporal(primal, dual, quad);
    let s = spatial(primal, dual, mesh, Some(omega), quad);
    let (dt, h) = (primal.dt, mesh.h());

    let mut observer = SlabMatrix::new(dual, primal);
    observer.add(0, 0, &t.mass, &s.omega_mass, dt);
    let mut nitsche = SlabMatrix::new(dual, primal);
    nitsche.add(0, 0, &t.mass, &s.boundary_mass, lambda * dt / h);

    // (⟦u1⟧, y2_+) + (⟦u2⟧, y1_+)
    let coupling = |trial_end: bool, sign: f64| {
        let tp = t.trace_product(false, trial_end);
        let mut m = SlabMatrix::new(dual, primal);
        m.add(1, 0, &tp, &s.mass, sign);
        m.add(0, 1, &tp, &s.mass, sign);
        m.build()
    };
    Ok(AtildeExtras {
        observer: observer.build(),
        nitsche: nitsche.build(),
        coupling_diag: coupling(false, 1.0),
        coupling_sub: coupling(true, -1.0),
    })
}

/// Extra start-trace mass of the adapted dual stabilization; applies to slabs
/// `n >= 1` only.
pub fn assemble_sstar_tilde_extras(
    dual: &SlabSpace,
    mesh: &IntervalMesh,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    dual.check_mesh(mesh)?;
    let t = temporal(dual, dual, quad);
    let s = spatial(dual, dual, mesh, None, quad);
    let tp = t.trace_product(false, false);
    let mut m = SlabMatrix::new(dual, dual);
    m.add(0, 0, &tp, &s.mass, dual.dt);
    m.add(1, 1, &tp, &s.mass, dual.dt);
    Ok(m.build())
}

/// The enriched form `Ã[W, Z]` written after integration by parts in time, so
/// that it couples each slab only to the following one. Rows are primal tests
/// `W`, columns dual trials `Z`.
#[derive(Debug, Clone)]
pub struct BackwardForm {
    /// diagonal block of slab 0
    pub first: CsrMatrix,
    /// diagonal block of slabs `n >= 1`
    pub interior: CsrMatrix,
    /// couples row slab `n - 1` to column slab `n`
    pub upper: CsrMatrix,
}

pub fn assemble_backward_form(
    primal: &SlabSpace,
    dual: &SlabSpace,
    mesh: &IntervalMesh,
    omega: &DataDomain,
    lambda: f64,
    quad: &QuadratureRule,
) -> Result<BackwardForm> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositivePenalty(lambda));
    }
    check_pair(primal, dual, mesh)?;
    // trial = dual, test = primal
    let t = temporal(dual, primal, quad);
    let s = spatial(dual, primal, mesh, Some(omega), quad);
    // normal derivative falls on the test function w1
    let flux_on_test = spatial(primal, dual, mesh, None, quad).flux.transpose();
    let (dt, h) = (primal.dt, mesh.h());

    let s11 = s
        .stiffness
        .add(&flux_on_test, -1.0)
        .add(&s.boundary_mass, lambda / h)
        .add(&s.omega_mass, 1.0);
    let end_end = t.trace_product(true, true);
    let start_start = t.trace_product(false, false);

    let base = || {
        let mut m = SlabMatrix::new(primal, dual);
        // -(w2, ∂t z1 + z2) + a(w1, z1) - (w1, ∂t z2) - (∂x w1 n, z1)_Σ + ...
        m.add(1, 0, &t.deriv, &s.mass, -1.0);
        m.add(1, 1, &t.mass, &s.mass, -dt);
        m.add(0, 0, &t.mass, &s11, dt);
        m.add(0, 1, &t.deriv, &s.mass, -1.0);
        // (w_-, z_-) at the slab end
        m.add(1, 0, &end_end, &s.mass, 1.0);
        m.add(0, 1, &end_end, &s.mass, 1.0);
        m
    };
    let interior = base().build();
    let mut first = base();
    first.add(1, 0, &start_start, &s.mass, -1.0);
    first.add(0, 1, &start_start, &s.mass, -1.0);

    let tp = t.trace_product(true, false);
    let mut upper = SlabMatrix::new(primal, dual);
    upper.add(1, 0, &tp, &s.mass, -1.0);
    upper.add(0, 1, &tp, &s.mass, -1.0);

    Ok(BackwardForm {
        first: first.build(),
        interior,
        upper: upper.build(),
    })
}

/// All blocks needed to apply the coupled operator on a slab.
#[derive(Debug, Clone)]
pub struct SlabBlocks {
    pub primal: SlabSpace,
    pub dual: SlabSpace,
    /// dual test × primal trial
    pub a: CsrMatrix,
    pub stabilizers: PrimalStabilizers,
    pub sstar: CsrMatrix,
    pub m_omega: CsrMatrix,
    pub jumps: JumpBlocks,
    pub primal_traces: TimeTraces,
}

impl SlabBlocks {
    pub fn assemble(
        primal: SlabSpace,
        dual: SlabSpace,
        mesh: &IntervalMesh,
        omega: &DataDomain,
    ) -> Result<Self> {
        let quad = volume_rule(&[primal.k, primal.q, dual.k, dual.q]);
        Ok(Self {
            a: assemble_a(&primal, &dual, mesh, &quad)?,
            stabilizers: assemble_primal_stabilizers(&primal, mesh, &quad)?,
            sstar: assemble_dual_stabilizer(&dual, mesh, &quad)?,
            m_omega: assemble_data_mass(&primal, mesh, omega, &quad)?,
            jumps: assemble_jump_blocks(&primal, mesh, &quad)?,
            primal_traces: assemble_time_traces(&primal, mesh)?,
            primal,
            dual,
        })
    }
}
