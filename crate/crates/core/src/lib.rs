//! Verification toolkit for superintegrable many-body Hamiltonians.
//!
//! * [`geometry`]: Jacobi transform and coordinate charts with canonical momentum lifts.
//! * [`potentials`]: the potential families in difference and angular form.
//! * [`observables`]: Hamiltonians, first-integral sets, Poisson brackets and rank tests.
//! * [`dynamics`]: symplectic integration and conservation drift reports.

pub mod dual;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod observables;
pub mod potentials;

pub use error::{LabError, Result};
