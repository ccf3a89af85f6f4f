//! Finite element solver for a thermistor model: heat conduction with Joule
//! heating, a temperature dependent electric potential and a linear
//! thermoviscoelastic displacement, discretized with P1 elements on
//! crisscross meshes of the unit square.
//!
//! The [`stepper`] module provides a semi-implicit scheme that decouples the
//! three equations and an implicit Euler comparison scheme; [`metrics`] and
//! [`study`] measure convergence against reference runs.

pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod sparse;
pub mod stepper;
pub mod study;

pub use error::{Error, Result};
pub use fem::{CouplingTensor, VoigtTensor};
pub use mesh::Mesh;
pub use metrics::{max_error_over_time, observed_order, ErrorReport, Norms};
pub use model::{
    make_manufactured, make_problem1, make_problem2, Conductivity, ExactSolution, ManufacturedKind, MaterialModel,
    ProblemSpec,
};
pub use sparse::{LinearSystem, SparseMatrix};
pub use stepper::{run_simulation, RunConfig, Scheme, Snapshot, State, StepperConfig, Trajectory};
pub use study::{NtRule, ReferenceSpec, StudyConfig, StudyResult, StudyRow};
