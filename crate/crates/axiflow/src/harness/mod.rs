//! Experiment harness: geometry generators, configuration, the simulation
//! runner, convergence studies, verification suites, and file outputs.

pub mod config;
pub mod converge;
pub mod fixtures;
pub mod generate;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{exact_solution_radius, ExperimentConfig, GeometryConfig, TimeStepConfig};
pub use converge::{run_convergence_study, ConvergenceReport, ConvergenceStudy};
pub use run::{run_simulation, SimOutcome, TerminalStatus};
pub use verify::{verify_suite, VerifyReport, VerifyTag};
