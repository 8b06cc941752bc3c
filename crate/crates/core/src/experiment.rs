//! Experiment configurations and the assemble, solve, lift and measure pipeline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, SolveReport};
use crate::mesh::IntervalMesh;
use crate::postproc::{dependence_region, error_norms, eoc, lift, ErrorReport, StandingWave};
use crate::precond::PreconditionerKind;
use crate::system::{Orders, SpaceTimeSystem, SpaceTimeVector};

/// Built-in reconstruction problems with `u = cos(πt) sin(πx)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// data on both ends of the interval
    Gcc1d,
    /// data on the left end only; errors are also reported on the domain of
    /// dependence
    NoGcc1d,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gcc1d => "gcc1d",
            Self::NoGcc1d => "nogcc1d",
        }
    }

    pub fn domain(self) -> [f64; 2] {
        [0.0, 1.0]
    }

    pub fn omega(self) -> Vec<[f64; 2]> {
        match self {
            Self::Gcc1d => vec![[0.0, 0.25], [0.75, 1.0]],
            Self::NoGcc1d => vec![[0.0, 0.25]],
        }
    }

    pub fn t_final(self) -> f64 {
        0.5
    }

    pub fn reports_region(self) -> bool {
        self == Self::NoGcc1d
    }

    /// Element count giving `h = Δt` for `n_slabs` slabs, at least four.
    pub fn elements_for(self, n_slabs: usize) -> usize {
        let len = self.domain()[1] - self.domain()[0];
        let n = (len * n_slabs as f64 / self.t_final()).round() as usize;
        n.max(4)
    }

    /// Configuration with `h = Δt` and the dual orders implied by `precond`.
    pub fn config(self, k: usize, q: usize, n_slabs: usize, precond: PrecondChoice) -> DiscretizationConfig {
        let (kstar, qstar) = precond.default_dual_orders(k, q);
        DiscretizationConfig {
            preset: self,
            orders: Orders::new(k, q, kstar, qstar),
            n_elems: self.elements_for(n_slabs),
            n_slabs,
            t_final: self.t_final(),
            omega: self.omega(),
            lambda: None,
            precond,
            gmres: GmresConfig::default(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcc1d" => Ok(Self::Gcc1d),
            "nogcc1d" => Ok(Self::NoGcc1d),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset '{other}', expected gcc1d or nogcc1d"
            ))),
        }
    }
}

/// Preconditioner selection as exposed to users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecondChoice {
    None,
    Block,
    /// forward sweep, full dual orders
    Mf,
    /// forward sweep, dual orders `(1, 0)`
    Ml,
    /// decoupled forward-backward sweeps
    Dfb,
}

impl PrecondChoice {
    pub const ALL: [PrecondChoice; 5] = [Self::None, Self::Block, Self::Mf, Self::Ml, Self::Dfb];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Block => "block",
            Self::Mf => "mf",
            Self::Ml => "ml",
            Self::Dfb => "dfb",
        }
    }

    pub fn default_dual_orders(self, k: usize, q: usize) -> (usize, usize) {
        match self {
            Self::Ml => (1, 0),
            _ => (k, q),
        }
    }

    pub fn kind(self, lambda: f64) -> PreconditionerKind {
        match self {
            Self::None => PreconditionerKind::None,
            Self::Block => PreconditionerKind::BlockJacobi,
            Self::Mf | Self::Ml => PreconditionerKind::MonolithicForward,
            Self::Dfb => PreconditionerKind::ForwardBackward { lambda },
        }
    }
}

impl fmt::Display for PrecondChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecondChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown preconditioner '{s}', expected one of none, block, mf, ml, dfb"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationConfig {
    pub preset: Preset,
    pub orders: Orders,
    pub n_elems: usize,
    pub n_slabs: usize,
    pub t_final: f64,
    pub omega: Vec<[f64; 2]>,
    /// Nitsche penalty of the forward-backward preconditioner; `10 k²` if unset
    pub lambda: Option<f64>,
    pub precond: PrecondChoice,
    pub gmres: GmresConfig,
}

/// Accepted range of `Δt / h`.
pub const STEP_RATIO_RANGE: (f64, f64) = (0.1, 10.0);

impl DiscretizationConfig {
    pub fn dt(&self) -> f64 {
        self.t_final / self.n_slabs as f64
    }

    pub fn h(&self) -> f64 {
        let [a, b] = self.preset.domain();
        (b - a) / self.n_elems as f64
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(10.0 * (self.orders.k * self.orders.k) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let o = self.orders;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if o.k < 1 || o.q < 1 || o.kstar < 1 {
            return bad(format!(
                "orders must satisfy k, q, kstar >= 1 and qstar >= 0, got (k, q, kstar, qstar) = ({}, {}, {}, {})",
                o.k, o.q, o.kstar, o.qstar
            ));
        }
        if self.n_elems == 0 || self.n_slabs == 0 {
            return bad("element and slab counts must be at least 1".into());
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("final time must be positive, got {}", self.t_final));
        }
        let ratio = self.dt() / self.h();
        let (lo, hi) = STEP_RATIO_RANGE;
        if !(lo..=hi).contains(&ratio) {
            return bad(format!("dt/h = {ratio} lies outside [{lo}, {hi}]"));
        }
        if self.omega.is_empty() {
            return Err(Error::EmptyDataDomain);
        }
        if !(self.lambda() > 0.0) {
            return Err(Error::NonpositivePenalty(self.lambda()));
        }
        match self.precond {
            PrecondChoice::Dfb if (o.kstar, o.qstar) != (o.k, o.q) => {
                return Err(Error::OrderMismatch {
                    k: o.k,
                    q: o.q,
                    kstar: o.kstar,
                    qstar: o.qstar,
                });
            }
            PrecondChoice::Mf if (o.kstar, o.qstar) != (o.k, o.q) => {
                return bad(format!(
                    "mf uses the full dual orders (kstar, qstar) = ({}, {}), got ({}, {})",
                    o.k, o.q, o.kstar, o.qstar
                ));
            }
            PrecondChoice::Ml if (o.kstar, o.qstar) != (1, 0) => {
                return bad(format!(
                    "ml uses the lowest dual orders (kstar, qstar) = (1, 0), got ({}, {})",
                    o.kstar, o.qstar
                ));
            }
            _ => {}
        }
        self.gmres.validate()
    }

    /// Assembles the system and checks the data set against the mesh.
    pub fn build_system(&self) -> Result<SpaceTimeSystem> {
        self.validate()?;
        let [a, b] = self.preset.domain();
        let mesh = IntervalMesh::new(a, b, self.n_elems)?;
        let omega = mesh.mark_data_domain(&self.omega)?;
        if omega.is_empty() {
            return Err(Error::EmptyDataDomain);
        }
        SpaceTimeSystem::new(mesh, omega, self.orders, self.n_slabs, self.t_final)
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub preset: String,
    pub k: usize,
    pub q: usize,
    pub kstar: usize,
    pub qstar: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub ndof: usize,
    pub precond: String,
    pub iters: usize,
    pub converged: bool,
    #[serde(rename = "err_LinfL2_u")]
    pub err_linf_l2_u: f64,
    #[serde(rename = "err_L2L2_ut")]
    pub err_l2l2_ut: f64,
    #[serde(rename = "err_LinfL2_u_Bt")]
    pub err_linf_l2_u_bt: Option<f64>,
    #[serde(rename = "err_L2L2_ut_Bt")]
    pub err_l2l2_ut_bt: Option<f64>,
    pub walltime_s: f64,
}

pub const CSV_HEADER: &str = "preset,k,q,kstar,qstar,N,h,dt,ndof,precond,iters,converged,err_LinfL2_u,err_L2L2_ut,err_LinfL2_u_Bt,err_L2L2_ut_Bt,walltime_s";

/// Result of one complete run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: DiscretizationConfig,
    pub system: SpaceTimeSystem,
    pub solution: SpaceTimeVector,
    pub report: SolveReport,
    pub errors: ErrorReport,
    pub wall_time: f64,
}

impl RunOutcome {
    pub fn row(&self) -> CsvRow {
        let c = &self.config;
        CsvRow {
            preset: c.preset.name().into(),
            k: c.orders.k,
            q: c.orders.q,
            kstar: c.orders.kstar,
            qstar: c.orders.qstar,
            n: c.n_slabs,
            h: c.h(),
            dt: c.dt(),
            ndof: self.system.ndof(),
            precond: c.precond.name().into(),
            iters: self.report.iterations,
            converged: self.report.converged,
            err_linf_l2_u: self.errors.linf_l2_u,
            err_l2l2_ut: self.errors.l2l2_ut,
            err_linf_l2_u_bt: self.errors.linf_l2_u_restricted,
            err_l2l2_ut_bt: self.errors.l2l2_ut_restricted,
            walltime_s: self.wall_time,
        }
    }
}

/// Assembles, solves with GMRes, lifts `u1` and measures its error.
pub fn run(config: &DiscretizationConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let system = config.build_system()?;
    let exact = StandingWave;
    let rhs = system.assemble_rhs(|t, x| crate::postproc::ExactSolution::value(&exact, t, x))?;
    let pc = config.precond.kind(config.lambda()).build(&system)?;
    let (x, report) = gmres(&system, pc.as_ref(), rhs.as_slice(), &config.gmres)?;
    let solution = SpaceTimeVector::from_vec(system.layout(), x)?;
    let lifted = lift(&system, &solution, 0)?;
    let region = config.preset.reports_region().then_some(&dependence_region as &dyn Fn(f64) -> (f64, f64));
    let errors = error_norms(&exact, &lifted, region);
    Ok(RunOutcome {
        config: config.clone(),
        system,
        solution,
        report,
        errors,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone)]
pub struct Level {
    pub n_slabs: usize,
    pub outcome: std::result::Result<CsvRow, Error>,
}

/// Rates between consecutive successful levels of one error column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rates {
    pub linf_l2_u: Vec<f64>,
    pub l2l2_ut: Vec<f64>,
    pub linf_l2_u_restricted: Vec<f64>,
    pub l2l2_ut_restricted: Vec<f64>,
}

/// Sweep over slab counts with `h = Δt`. Failed levels are recorded and the
/// sweep continues.
pub fn convergence(
    preset: Preset,
    k: usize,
    q: usize,
    precond: PrecondChoice,
    slabs: &[usize],
    gmres: GmresConfig,
) -> (Vec<Level>, Rates) {
    let levels: Vec<Level> = slabs
        .iter()
        .map(|&n| {
            let mut cfg = preset.config(k, q, n, precond);
            cfg.gmres = gmres;
            Level {
                n_slabs: n,
                outcome: run(&cfg).map(|o| o.row()),
            }
        })
        .collect();
    let rows: Vec<&CsvRow> = levels.iter().filter_map(|l| l.outcome.as_ref().ok()).collect();
    let col = |f: &dyn Fn(&CsvRow) -> Option<f64>| -> Vec<f64> {
        let v: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
        v.map(|v| eoc(&v)).unwrap_or_default()
    };
    let rates = Rates {
        linf_l2_u: col(&|r| Some(r.err_linf_l2_u)),
        l2l2_ut: col(&|r| Some(r.err_l2l2_ut)),
        linf_l2_u_restricted: col(&|r| r.err_linf_l2_u_bt),
        l2l2_ut_restricted: col(&|r| r.err_l2l2_ut_bt),
    };
    (levels, rates)
}

/// GMRes iteration counts for every `(preconditioner, slab count)` pair.
/// Runs hitting the iteration cap keep `converged = false` in their row.
pub fn iteration_table(
    preset: Preset,
    k: usize,
    q: usize,
    preconds: &[PrecondChoice],
    slabs: &[usize],
    gmres: GmresConfig,
) -> Vec<(PrecondChoice, usize, std::result::Result<CsvRow, Error>)> {
    let mut out = Vec::new();
    for &p in preconds {
        for &n in slabs {
            let mut cfg = preset.config(k, q, n, p);
            cfg.gmres = gmres;
            out.push((p, n, run(&cfg).map(|o| o.row())));
        }
    }
    out
}
