//! Proper orthogonal decomposition toolkit.
//!
//! Computes POD bases from snapshot trajectories by the method of snapshots,
//! checks discrete Agmon and interpolation inequalities with explicit
//! constants, solves POD-Galerkin reduced models of the heat equation with
//! backward Euler and BDF2, and evaluates pointwise and averaged error bounds
//! against measured errors.

pub mod error;
pub mod fem;
pub mod grids;
pub mod inequality;
pub mod io;
pub mod manufactured;
pub mod output;
pub mod pod;
pub mod random;
pub mod report;
pub mod rom;
pub mod scenarios;
pub mod space;

pub use error::{Error, Result};
pub use fem::{assemble_fe, heat_semidiscrete, poincare_constant, Dirichlet, FeProblem, MeshKind};
pub use grids::{DqSequence, FnSampler, SeqNormKind, TimeGrid, TimeSampler, Trajectory};
pub use inequality::{ConstantsTable, HatSeed, Lemma};
pub use manufactured::{manufactured_trajectory, Coefficient, ManufacturedSpec};
pub use pod::{pod, PodBasis, ProjectionErrors, SnapshotOptions, DEFAULT_RANK_TOL};
pub use report::{CheckId, CheckParams, InequalityReport};
pub use rom::{bound_report, rom_solve, Bdf2Start, BoundReport, RomConfig, RomSolution, Scheme};
pub use space::{GramKind, HilbertSpace};
