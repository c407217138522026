//! Drive a full run from an inline configuration, the same path the
//! `density` binary takes.

use structured_ginibre::cli::run;
use structured_ginibre::config::RunConfig;

const CONFIG: &str = r#"
mode = "compare"

[[model]]
name = "ginibre"
kind = "normal"
n_inv_var = 4
s = [["0", 4]]

[[scan]]
name = "radial"
kind = "line"
start = "0"
end = "2"
points = 20

[mc]
trials = 40000
seed = 3
"#;

fn main() -> structured_ginibre::Result<()> {
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.output.path = std::env::temp_dir().join("density-example");
    let outcome = run(&cfg)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("report {}", outcome.report.display());
    println!("all comparisons passed: {}", outcome.all_passed());
    Ok(())
}
