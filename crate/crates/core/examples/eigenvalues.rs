//! The dense eigensolver on a sampled Ginibre matrix.

use num_complex::Complex64;
use structured_ginibre::montecarlo::sample_ginibre;

fn main() -> structured_ginibre::Result<()> {
    let m = sample_ginibre(6, 6.0, 11);
    let ev = m.eigenvalues()?;
    for e in &ev {
        println!("{:>10.6} {:+.6}i", e.re, e.im);
    }
    let sum: Complex64 = ev.iter().sum();
    let prod = ev.iter().fold(Complex64::new(1.0, 0.0), |a, b| a * b);
    println!("sum = {sum:.6}, trace = {:.6}", m.trace());
    println!("prod = {prod:.6}, det = {:.6}", m.determinant());
    let (_, cond) = m.inverse()?;
    println!("1-norm condition number {cond:.3}");
    Ok(())
}
