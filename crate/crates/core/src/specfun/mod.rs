//! Special functions, truncated Taylor jets and residue numerators.

pub mod functions;
pub mod jet;
pub mod numerator;

pub use functions::{
    bessel_i0, bessel_i0_scaled, binomial, factorial, gamma_inc0, harmonic_all, laguerre, laguerre_all,
    modified_laguerre, modified_laguerre_all, tricomi_u, EULER_GAMMA,
};
pub use jet::Jet;
pub use numerator::{numerator_jet, ExpNumerator, HarmonicNumerator, JetSource, PolyTimes};
