//! Classical and quantum η-deformation of the N-dimensional Kepler-Coulomb
//! system on the conformally flat space `ds² = (1 + η/|q|) dq²`.
//!
//! - [`model`]: parameters, Hamiltonian, metric, curvature, Green function.
//! - [`integrals`]: the `2N − 1` constants of motion and Poisson brackets.
//! - [`dynamics`]: trajectory integration and the reduced radial problem.
//! - [`spectrum`]: closed-form bound states and weighted inner products.
//! - [`oracle`]: finite-difference radial eigensolver used as a cross-check.
//! - [`operators`]: grid checks of the quantum commutation relations.

pub mod dynamics;
pub mod error;
pub mod integrals;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{ModelParams, PhaseState};
