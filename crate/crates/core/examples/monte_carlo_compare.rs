//! Sample the ensemble, histogram eigenvalues in a strip around a line and
//! compare against the cell-averaged analytic profile.
//!
//! `cargo run --release --example monte_carlo_compare -- 20000`

use num_complex::Complex64;
use structured_ginibre::montecarlo::{analytic_profile_cell_averaged, compare, empirical_density, Ensemble, Model};
use structured_ginibre::{ScanGeometry, StructuredEnsemble};

fn main() -> structured_ginibre::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let c = Complex64::new;
    let ens = StructuredEnsemble::from_runs(&[(c(-1.0, 0.0), 2), (c(1.0, 0.0), 2)], &[(1.0, 4)], &[(1.0, 4)], None)?;
    let model = Model::new(Ensemble::Normal(ens), false)?;
    let geometry = ScanGeometry::line(c(-2.5, 0.0), c(2.5, 0.0), 40)?.with_strip(0.05)?;

    let analytic = analytic_profile_cell_averaged(&model, &geometry)?;
    let empirical = empirical_density(&model, &geometry, trials, 7)?;
    let report = compare(&analytic, &empirical)?;
    for (a, e) in analytic.values.iter().zip(&empirical.values) {
        println!("{:>6.3} {:>10.5} {:>10.5} +- {:.5}", a.z.re, a.rho, e.rho, e.stderr);
    }
    println!(
        "{}: chi2 = {:.1} on {} points, p = {:.3}, {} beyond {} sigma, sup = {:.4}",
        if report.pass { "pass" } else { "FAIL" },
        report.chi2,
        report.dof,
        report.p_value,
        report.beyond,
        report.sigma_level,
        report.sup_norm
    );
    Ok(())
}
