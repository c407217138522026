//! Fermionic and bosonic building blocks and the residue engine.

mod bosonic;
mod fermionic;
pub mod residue;

use num_complex::Complex64;

pub use bosonic::{bosonic_reg, chgue_bosonic_check, BosonicSystem};
pub use fermionic::{fermionic_poly, fermionic_reg, fermionic_unreg};
pub use residue::{residue_sum, PoleSystem, ResidueEngine};

/// A block value with evaluation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockValue {
    pub value: Complex64,
    /// Series terms (residue path) or quadrature nodes (unregularized path).
    pub truncation_order: usize,
    pub max_pole_order: usize,
}
