//! Numerics for a one-dimensional chain of coupled oscillators driven by
//! Langevin heat baths at both ends: model matrices, continuous Lyapunov
//! equations solved by independent methods, the structured block
//! construction of the twisted quadratic form, spectral-gap analysis,
//! convergence-rate constants, and stochastic simulation.

pub mod chain;
pub mod constants;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lyapunov;
pub mod sim;
pub mod spectral;
pub mod structured;

pub use error::{Error, Result};
