//! Linearized plasma-vacuum interface problem with surface tension: coefficient
//! matrices, residual evaluators, a half-space solver and energy diagnostics.

pub mod artifact;
pub mod audit;
pub mod energy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod ring;
pub mod scenario;
pub mod solver;
pub mod state;
pub mod symmetrizers;

pub use error::{Error, Result};
