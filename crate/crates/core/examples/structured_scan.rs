//! Density of a structured ensemble with a degenerate source and non-trivial
//! left/right covariances, along a line through the complex plane.

use num_complex::Complex64;
use structured_ginibre::normal::spectral_density;
use structured_ginibre::StructuredEnsemble;

fn main() -> structured_ginibre::Result<()> {
    let c = Complex64::new;
    let ens = StructuredEnsemble::from_runs(
        &[(c(-1.0, 0.0), 2), (c(1.5, 0.5), 2)],
        &[(1.0, 3), (2.0, 1)],
        &[(0.5, 1), (1.0, 3)],
        None,
    )?;
    println!("N = {}, n = {}, {} groups", ens.dim(), ens.n_inv_var(), ens.groups().len());
    let (start, end) = (c(-2.5, 0.0), c(2.5, 0.0));
    for k in 0..=20 {
        let z = start + (end - start) * (k as f64 / 20.0);
        println!("{:>6.2} {:.8}", z.re, spectral_density(&ens, z)?);
    }
    Ok(())
}
