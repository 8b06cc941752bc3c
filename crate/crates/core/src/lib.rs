//! Stabilized space-time finite elements for reconstructing a wave from interior
//! measurements without initial data.

pub mod banded;
pub mod basis;
pub mod error;
pub mod experiment;
pub mod krylov;
pub mod mesh;
pub mod postproc;
pub mod precond;
pub mod slab_forms;
pub mod sparse;
pub mod system;

pub use error::{Error, Result};
pub use experiment::{run, DiscretizationConfig, PrecondChoice, Preset, RunOutcome};
pub use krylov::{gmres, GmresConfig, LinearOperator, Preconditioner, SolveReport, SolveStatus};
pub use mesh::IntervalMesh;
pub use postproc::{error_norms, lift, ErrorReport, LiftedSolution};
pub use precond::PreconditionerKind;
pub use system::{Orders, SpaceTimeSystem, SpaceTimeVector, TripleNorm};
