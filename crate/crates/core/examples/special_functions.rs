//! Tricomi U at integer parameters, the Laguerre split and a residue sum
//! over a clustered pole system.

use num_complex::Complex64;
use structured_ginibre::blocks::{residue_sum, PoleSystem};
use structured_ginibre::specfun::{factorial, gamma_inc0, laguerre, modified_laguerre, tricomi_u, HarmonicNumerator};

fn main() -> structured_ginibre::Result<()> {
    for k in [0usize, 2, 5] {
        for x in [0.1, 1.0, 5.0] {
            let u = factorial(k) * tricomi_u(k as i64 + 1, 1, x)?;
            let xc = Complex64::new(-x, 0.0);
            let split = x.exp() * gamma_inc0(x)? * laguerre(k, xc).re + modified_laguerre(k, xc).re;
            println!("k = {k}, x = {x}: k! U = {u:.15e}, split = {split:.15e}");
        }
    }
    // Two poles 1e-9 apart are summed without cancellation.
    let c = Complex64::new;
    let sys = PoleSystem::new(vec![(c(-1.0, 0.0), 2), (c(-1.0 + 1e-9, 0.0), 1), (c(0.5, 0.3), 1)])?;
    println!("residue sum = {:.15}", residue_sum(&sys, &HarmonicNumerator)?);
    Ok(())
}
