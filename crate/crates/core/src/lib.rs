//! Exact finite-size eigenvalue densities of complex random matrices
//! `M = S + L X R` with Gaussian `X` and deterministic `S`, `L`, `R`,
//! together with a Monte Carlo engine to check them.

pub mod blocks;
pub mod cli;
pub mod config;
pub mod error;
pub mod hyperdual;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod nonnormal;
pub mod normal;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use hyperdual::{HyperDual, Scalar};
pub use model::*;
