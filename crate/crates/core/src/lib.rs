//! Constrained variational quantum optimization by perturbed primal-dual
//! iterations over a simulated two-local circuit.

pub mod ansatz;
pub mod error;
pub mod gradient;
pub mod observables;
pub mod optimizer;
pub mod problems;
pub mod reference;
pub mod seed;
pub mod sim;

pub use error::{Result, VqecError};
