//! Density of the eigenvalues of the inverse of a structured matrix.

use num_complex::Complex64;
use structured_ginibre::normal::{ginibre_inverse_density, spectral_density_inverse};
use structured_ginibre::StructuredEnsemble;

fn main() -> structured_ginibre::Result<()> {
    let c = Complex64::new;
    let ginibre = StructuredEnsemble::ginibre(4, 4.0)?;
    let shifted = StructuredEnsemble::from_runs(&[(c(-2.0, 0.0), 4), (c(2.0, 0.0), 2)], &[(1.0, 6)], &[(1.0, 6)], None)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "x", "Ginibre", "closed form", "S = diag(-2,2)");
    for k in 1..=15 {
        let z = c(-1.5 + 0.2 * k as f64 - 0.1, 0.05);
        println!(
            "{:>6.2} {:>14.8} {:>14.8} {:>14.8}",
            z.re,
            spectral_density_inverse(&ginibre, z)?,
            ginibre_inverse_density(4, 4.0, z),
            spectral_density_inverse(&shifted, z)?
        );
    }
    Ok(())
}
