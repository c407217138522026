//! Radial profile of the Ginibre density against its closed form, computed
//! with both the hyper-dual and the finite-difference derivative.

use num_complex::Complex64;
use structured_ginibre::normal::{ginibre_density, spectral_density_with, DerivativeScheme};
use structured_ginibre::StructuredEnsemble;

fn main() -> structured_ginibre::Result<()> {
    let dim = 4;
    let ens = StructuredEnsemble::ginibre(dim, dim as f64)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "|z|", "hyper-dual", "finite diff", "closed form");
    for k in 0..=10 {
        let z = Complex64::new(0.2 * k as f64, 0.0);
        let hd = spectral_density_with(&ens, z, DerivativeScheme::HyperDual)?.rho;
        let fd = spectral_density_with(&ens, z, DerivativeScheme::FiniteDifference { h: None })?.rho;
        println!("{:>6.2} {hd:>14.10} {fd:>14.10} {:>14.10}", z.re, ginibre_density(dim, dim as f64, z));
    }
    Ok(())
}
