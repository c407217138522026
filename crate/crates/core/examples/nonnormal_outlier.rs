//! A rank-one non-normal source versus a normal source of the same size:
//! the normal one produces an outlier near its eigenvalue, the nilpotent one
//! does not.

use num_complex::Complex64;
use structured_ginibre::nonnormal::{nn_density, KPlusMinus};
use structured_ginibre::normal::spectral_density;
use structured_ginibre::{RankOneNonNormalEnsemble, StructuredEnsemble};

fn main() -> structured_ginibre::Result<()> {
    let c = Complex64::new;
    let alpha = c(10.0, 0.0);
    let nn = RankOneNonNormalEnsemble::new(alpha, 2, 1, 4, None)?;
    let normal = StructuredEnsemble::from_runs(&[(alpha, 1), (c(0.0, 0.0), 3)], &[(1.0, 4)], &[(1.0, 4)], None)?;
    println!("{:>6} {:>14} {:>14}", "x", "non-normal", "normal");
    for k in 0..=15 {
        let z = c(-3.0 + k as f64, 0.0);
        println!("{:>6.1} {:>14.6e} {:>14.6e}", z.re, nn_density(&nn, z)?, spectral_density(&normal, z)?);
    }
    let k = KPlusMinus::new(1.0, alpha.norm_sqr());
    println!("k+ = {:.6}, k- = {:.6} at |z| = 1", k.k_plus, k.k_minus);
    Ok(())
}
