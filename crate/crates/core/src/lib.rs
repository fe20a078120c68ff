//! Finite-difference lab for Dirichlet-Neumann domain decomposition with
//! cross-points on `(-1,1)^d`.

pub mod discretization;
pub mod dn;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod linsolve;
pub mod problem;

pub use error::{Error, Result};
