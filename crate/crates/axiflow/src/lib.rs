//! Finite element library for axisymmetric curvature flows.
//!
//! A surface of revolution is represented by its generating curve in the
//! (r, z) half-plane. The curve is discretized as a polygon, and one time
//! step of mean curvature flow (or a nonlinear, volume-conserving or Gauss
//! curvature variant) amounts to solving a small block-tridiagonal linear
//! system, or a mildly nonlinear one via Newton's method.
//!
//! Modules:
//! - [`mesh`]: the discrete generating curve, boundary classification, and
//!   the mass-lumped / exact inner products all schemes assemble against.
//! - [`geometry`]: discrete surface energy, enclosed volume, curvature
//!   diagnostics, contact angle residuals.
//! - [`solver`]: banded direct solver (with cyclic bordering and rank-one
//!   updates) and the damped Newton iteration.
//! - [`schemes`]: the time-stepping schemes themselves.
//! - [`harness`]: geometry generators, experiment runner, convergence
//!   studies, verification suites, file outputs.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod schemes;
pub mod solver;
mod vec2;

pub use error::Error;
pub use vec2::Vec2;

pub type Result<T> = std::result::Result<T, Error>;
