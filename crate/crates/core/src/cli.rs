//! The `density` command: runs a configuration and writes CSV profiles and
//! a report.
//!
//! Exit status: 0 on success, 1 for an invalid configuration, 2 for a
//! numerical failure, 3 when a comparison fails (the report is still
//! written). `DENSITY_WORKERS` overrides the number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use num_complex::Complex64;

use crate::config::{format_complex, parse_complex, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::model::{ScanGeometry, ScanKind};
use crate::montecarlo::{
    analytic_profile, analytic_profile_cell_averaged, compare, empirical_density, with_workers, CompareReport, DensityProfile,
    ProfilePoint, Provenance,
};

pub const WORKERS_ENV: &str = "DENSITY_WORKERS";
pub const CSV_COLUMNS: &str = "re_z,im_z,rho,stderr,provenance";

#[derive(Debug, Parser)]
#[command(name = "density", version, about = "Eigenvalue densities of structured random matrices")]
pub struct Args {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory (overrides output.path).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

impl Args {
    /// Loads the config and applies the command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(o) = &self.out {
            cfg.output.path = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.mc.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub report: PathBuf,
    pub comparisons: Vec<(String, String, CompareReport)>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.2.pass)
    }
}

fn config_header(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed = {}", cfg.mc.seed);
    let _ = writeln!(s, "# --- resolved config ---");
    for line in cfg.to_toml().lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "# --- end config ---");
    s
}

fn geometry_line(g: &ScanGeometry) -> String {
    match &g.kind {
        ScanKind::Line { start, end, points } => format!(
            "line start={} end={} points={} strip_half_width={}",
            format_complex(*start),
            format_complex(*end),
            points,
            g.strip_half_width
        ),
        ScanKind::Grid { lower, upper, nx, ny } => format!(
            "grid lower={} upper={} nx={} ny={} strip_half_width={}",
            format_complex(*lower),
            format_complex(*upper),
            nx,
            ny,
            g.strip_half_width
        ),
    }
}

fn provenance_line(p: &Provenance) -> String {
    match p {
        Provenance::Analytic | Provenance::AnalyticCellMean => p.to_string(),
        Provenance::Empirical { seed, trials, accepted, discarded, count_unit } => {
            format!("empirical seed={seed} trials={trials} accepted={accepted} discarded={discarded} count_unit={count_unit}")
        }
    }
}

/// CSV text of a profile. Comment lines carry the model and scan names, the
/// geometry, the provenance and the resolved config; floats are written in
/// shortest round-trip form.
pub fn profile_csv(profile: &DensityProfile, model: &str, scan: &str, cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# density profile");
    let _ = writeln!(s, "# model = {model}");
    let _ = writeln!(s, "# scan = {scan}");
    let _ = writeln!(s, "# geometry = {}", geometry_line(&profile.geometry));
    let _ = writeln!(s, "# provenance = {}", provenance_line(&profile.provenance));
    s.push_str(&config_header(cfg));
    let _ = writeln!(s, "{CSV_COLUMNS}");
    let prov = profile.provenance.to_string();
    for p in &profile.values {
        let _ = writeln!(s, "{},{},{},{},{}", p.z.re, p.z.im, p.rho, p.stderr, prov);
    }
    s
}

fn bad_csv<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(format!("profile CSV: {}", msg.into())))
}

fn kv<'a>(words: &[&'a str], key: &str) -> Result<&'a str> {
    for w in words {
        if let Some(v) = w.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            return Ok(v);
        }
    }
    bad_csv(format!("missing {key}"))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().or_else(|_| bad_csv(format!("cannot parse {s:?}")))
}

fn cnum(s: &str) -> Result<Complex64> {
    parse_complex(s).map_or_else(|| bad_csv(format!("cannot parse {s:?}")), Ok)
}

/// Reads a profile written by [`profile_csv`].
pub fn read_profile_csv(text: &str) -> Result<DensityProfile> {
    let mut geometry = None;
    let mut provenance = None;
    let mut values = Vec::new();
    let mut seen_columns = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# geometry = ") {
            let w: Vec<&str> = rest.split_whitespace().collect();
            let strip: f64 = num(kv(&w, "strip_half_width")?)?;
            let g = match w.first() {
                Some(&"line") => ScanGeometry::line(cnum(kv(&w, "start")?)?, cnum(kv(&w, "end")?)?, num(kv(&w, "points")?)?)?,
                Some(&"grid") => ScanGeometry::grid(
                    cnum(kv(&w, "lower")?)?,
                    cnum(kv(&w, "upper")?)?,
                    num(kv(&w, "nx")?)?,
                    num(kv(&w, "ny")?)?,
                )?,
                _ => return bad_csv("unknown geometry"),
            };
            geometry = Some(g.with_strip(strip)?);
        } else if let Some(rest) = line.strip_prefix("# provenance = ") {
            let w: Vec<&str> = rest.split_whitespace().collect();
            provenance = Some(match w.first() {
                Some(&"analytic") => Provenance::Analytic,
                Some(&"analytic-cell-mean") => Provenance::AnalyticCellMean,
                Some(&"empirical") => Provenance::Empirical {
                    seed: num(kv(&w, "seed")?)?,
                    trials: num(kv(&w, "trials")?)?,
                    accepted: num(kv(&w, "accepted")?)?,
                    discarded: num(kv(&w, "discarded")?)?,
                    count_unit: num(kv(&w, "count_unit")?)?,
                },
                _ => return bad_csv("unknown provenance"),
            });
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else if line == CSV_COLUMNS {
            seen_columns = true;
        } else {
            if !seen_columns {
                return bad_csv("data before the column header");
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return bad_csv(format!("expected 5 columns, got {}", f.len()));
            }
            values.push(ProfilePoint { z: Complex64::new(num(f[0])?, num(f[1])?), rho: num(f[2])?, stderr: num(f[3])? });
        }
    }
    let (Some(geometry), Some(provenance)) = (geometry, provenance) else {
        return bad_csv("missing geometry or provenance header");
    };
    if values.len() != geometry.len() {
        return bad_csv(format!("{} rows for a scan of {} points", values.len(), geometry.len()));
    }
    Ok(DensityProfile { geometry, values, provenance })
}

fn comparison_section(model: &str, scan: &str, r: &CompareReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[[comparison]]");
    let _ = writeln!(s, "model = \"{model}\"");
    let _ = writeln!(s, "scan = \"{scan}\"");
    let _ = writeln!(s, "points = {}", r.points.len());
    let _ = writeln!(s, "sigma_level = {}", r.sigma_level);
    let _ = writeln!(s, "beyond_sigma = {}", r.beyond);
    let _ = writeln!(s, "fraction_beyond = {}", r.fraction_beyond());
    let _ = writeln!(s, "chi2 = {}", r.chi2);
    let _ = writeln!(s, "dof = {}", r.dof);
    let _ = writeln!(s, "p_value = {}", r.p_value);
    let _ = writeln!(s, "sup_norm = {}", r.sup_norm);
    let _ = writeln!(s, "pass = {}", r.pass);
    let _ = writeln!(s, "table = \"\"\"");
    let _ = writeln!(s, "{:>12} {:>12} {:>14} {:>14} {:>12} {:>9}", "re_z", "im_z", "analytic", "empirical", "sigma", "z_score");
    for p in &r.points {
        let _ = writeln!(
            s,
            "{:>12.6} {:>12.6} {:>14.6e} {:>14.6e} {:>12.4e} {:>9.3}",
            p.z.re, p.z.im, p.analytic, p.empirical, p.sigma, p.z_score
        );
    }
    let _ = writeln!(s, "\"\"\"\n");
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("output.path: cannot write {}: {e}", path.display())))
}

/// Executes a validated configuration on the current thread pool.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = &cfg.output.path;
    fs::create_dir_all(out).map_err(|e| Error::Config(format!("output.path: cannot create {}: {e}", out.display())))?;
    let mut files = Vec::new();
    let mut comparisons = Vec::new();
    for (mi, mc) in cfg.models.iter().enumerate() {
        let model = mc.model(mi)?;
        for (si, sc) in cfg.scans.iter().enumerate() {
            let geometry = sc.geometry(si, cfg.mc.strip_half_width.0)?;
            let stem = format!("{}_{}", mc.name, sc.name);
            let analytic = match cfg.mode {
                Mode::Analytic => Some(analytic_profile(&model, &geometry)?),
                Mode::Compare => Some(analytic_profile_cell_averaged(&model, &geometry)?),
                Mode::Montecarlo => None,
            };
            let empirical = match cfg.mode {
                Mode::Analytic => None,
                _ => Some(empirical_density(&model, &geometry, cfg.mc.trials, cfg.mc.seed)?),
            };
            for (p, kind) in [(&analytic, "analytic"), (&empirical, "empirical")] {
                if let Some(p) = p {
                    let path = out.join(format!("{stem}_{kind}.csv"));
                    write(&path, &profile_csv(p, &mc.name, &sc.name, cfg))?;
                    files.push(path);
                }
            }
            if let (Some(a), Some(e)) = (&analytic, &empirical) {
                comparisons.push((mc.name.clone(), sc.name.clone(), compare(a, e)?));
            }
        }
    }
    let mut report = String::new();
    let _ = writeln!(report, "# density run report");
    report.push_str(&config_header(cfg));
    let _ = writeln!(report);
    for (m, s, r) in &comparisons {
        report.push_str(&comparison_section(m, s, r));
    }
    let _ = writeln!(report, "[summary]");
    let _ = writeln!(report, "mode = \"{}\"", cfg.mode);
    let names: Vec<String> = files.iter().map(|f| format!("\"{}\"", f.file_name().unwrap_or_default().to_string_lossy())).collect();
    let _ = writeln!(report, "files = [{}]", names.join(", "));
    if cfg.mode == Mode::Compare {
        let passed = comparisons.iter().filter(|c| c.2.pass).count();
        let _ = writeln!(report, "comparisons = {}", comparisons.len());
        let _ = writeln!(report, "passed = {passed}");
        let _ = writeln!(report, "pass = {}", passed == comparisons.len());
    }
    let report_path = out.join("report.txt");
    write(&report_path, &report)?;
    Ok(RunOutcome { files, report: report_path, comparisons })
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs the command and returns the process exit status.
pub fn execute(args: &Args) -> i32 {
    let outcome = (|| {
        let cfg = args.resolve()?;
        match workers_from_env()? {
            Some(n) => with_workers(n, || run(&cfg))?,
            None => run(&cfg),
        }
    })();
    match outcome {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", o.report.display());
            if o.all_passed() {
                0
            } else {
                for (m, s, r) in o.comparisons.iter().filter(|c| !c.2.pass) {
                    eprintln!(
                        "compare failed for {m}/{s}: {} of {} points beyond {} sigma, p = {:.3e}",
                        r.beyond, r.dof, r.sigma_level, r.p_value
                    );
                }
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    execute(&Args::parse())
}
