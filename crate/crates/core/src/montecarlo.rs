//! Monte Carlo sampling of the ensembles, empirical densities, and the
//! comparison against analytic profiles.

use std::fmt;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{RankOneNonNormalEnsemble, ScanGeometry, ScanKind, StructuredEnsemble};
use crate::nonnormal::nn_density_with;
use crate::normal::{spectral_density_inverse_with, spectral_density_with, DerivativeScheme};

/// Independent generator for one trial: the seed selects the key, the trial
/// index selects the stream, so no state is shared between trials.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Standard normals by the Box-Muller transform.
pub struct GaussianStream<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> GaussianStream<R> {
    pub fn new(rng: R) -> Self {
        GaussianStream { rng, spare: None }
    }

    fn uniform_open(&mut self) -> f64 {
        // (0, 1]: never zero, so the logarithm is finite.
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(x) = self.spare.take() {
            return x;
        }
        let r = (-2.0 * self.uniform_open().ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * self.uniform_open();
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    /// Complex Gaussian with `E|x|^2 = variance`.
    pub fn next_complex(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        let re = self.next_normal();
        let im = self.next_normal();
        Complex64::new(re * s, im * s)
    }
}

fn ginibre_from<R: RngCore>(dim: usize, n_inv_var: f64, g: &mut GaussianStream<R>) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| g.next_complex(1.0 / n_inv_var))
}

/// Ginibre matrix with entry variance `1/n`, drawn from trial stream 0.
pub fn sample_ginibre(dim: usize, n_inv_var: f64, seed: u64) -> ComplexMatrix {
    ginibre_from(dim, n_inv_var, &mut GaussianStream::new(trial_rng(seed, 0)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ensemble {
    Normal(StructuredEnsemble),
    NonNormal(RankOneNonNormalEnsemble),
}

impl Ensemble {
    pub fn dim(&self) -> usize {
        match self {
            Ensemble::Normal(e) => e.dim(),
            Ensemble::NonNormal(e) => e.dim(),
        }
    }

    pub fn n_inv_var(&self) -> f64 {
        match self {
            Ensemble::Normal(e) => e.n_inv_var(),
            Ensemble::NonNormal(e) => e.n_inv_var(),
        }
    }
}

/// An ensemble and whether its inverse is studied.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub ensemble: Ensemble,
    pub invert: bool,
}

impl Model {
    pub fn new(ensemble: Ensemble, invert: bool) -> Result<Self> {
        if invert {
            if let Ensemble::Normal(e) = &ensemble {
                if !e.has_unit_covariance() {
                    return invalid("invert requires L = R = 1");
                }
            }
        }
        Ok(Model { ensemble, invert })
    }

    /// Analytic density at a single point.
    pub fn density(&self, z: Complex64) -> Result<f64> {
        let scheme = DerivativeScheme::HyperDual;
        match (&self.ensemble, self.invert) {
            (Ensemble::Normal(e), false) => spectral_density_with(e, z, scheme).map(|p| p.rho),
            (Ensemble::Normal(e), true) => spectral_density_inverse_with(e, z, scheme).map(|p| p.rho),
            (Ensemble::NonNormal(e), false) => nn_density_with(e, z, scheme).map(|p| p.rho),
            (Ensemble::NonNormal(_), true) => invalid("no analytic inverse density for the non-normal source"),
        }
    }
}

/// `M = S + L X R`, or its inverse. Inversion fails with
/// [`Error::NearSingular`] when the 1-norm condition number exceeds 1e12.
pub fn realize(ensemble: &Ensemble, x: &ComplexMatrix, invert: bool) -> Result<ComplexMatrix> {
    let n = ensemble.dim();
    if x.dim() != n {
        return invalid(format!("sample is {}x{0}, ensemble has N = {n}", x.dim()));
    }
    let m = match ensemble {
        Ensemble::Normal(e) => {
            let d = e.diagonals();
            ComplexMatrix::from_fn(n, |j, k| {
                let v = x[(j, k)] * (d[j].1 * d[k].2);
                if j == k {
                    v + d[j].0
                } else {
                    v
                }
            })
        }
        Ensemble::NonNormal(e) => {
            let mut m = x.clone();
            m[(e.ket() - 1, e.bra() - 1)] += e.alpha();
            m
        }
    };
    if !invert {
        return Ok(m);
    }
    let (inv, cond) = m.inverse()?;
    if !(cond <= 1e12) {
        return Err(Error::NearSingular(cond));
    }
    Ok(inv)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Analytic,
    /// Analytic density averaged over each estimator cell.
    AnalyticCellMean,
    Empirical {
        seed: u64,
        trials: u64,
        accepted: u64,
        discarded: u64,
        /// Density contributed by a single eigenvalue count.
        count_unit: f64,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Analytic => write!(f, "analytic"),
            Provenance::AnalyticCellMean => write!(f, "analytic-cell-mean"),
            Provenance::Empirical { seed, accepted, .. } => write!(f, "empirical(n={accepted};seed={seed})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub z: Complex64,
    pub rho: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    pub geometry: ScanGeometry,
    pub values: Vec<ProfilePoint>,
    pub provenance: Provenance,
}

/// Analytic density at the scan points, evaluated in parallel.
pub fn analytic_profile(model: &Model, geometry: &ScanGeometry) -> Result<DensityProfile> {
    profile_from(geometry, |z| model.density(z))
}

/// Analytic density averaged over each estimator cell (bin times strip for
/// lines, the cell for grids) with a 3x3 Gauss-Legendre rule. This is the
/// quantity the empirical estimator is unbiased for.
pub fn analytic_profile_cell_averaged(model: &Model, geometry: &ScanGeometry) -> Result<DensityProfile> {
    const X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    // Half-extents of the cell along two orthogonal unit directions.
    let (e1, h1, e2, h2) = match &geometry.kind {
        ScanKind::Line { start, end, points } => {
            let d = end - start;
            let u = d / d.norm();
            (u, d.norm() / (2.0 * *points as f64), u * Complex64::new(0.0, 1.0), geometry.strip_half_width)
        }
        ScanKind::Grid { lower, upper, nx, ny } => (
            Complex64::new(1.0, 0.0),
            (upper.re - lower.re) / (2.0 * *nx as f64),
            Complex64::new(0.0, 1.0),
            (upper.im - lower.im) / (2.0 * *ny as f64),
        ),
    };
    let mut profile = profile_from(geometry, |z| {
        let mut acc = 0.0;
        for (a, wa) in X.iter().zip(W) {
            for (b, wb) in X.iter().zip(W) {
                acc += wa * wb * model.density(z + e1 * (a * h1) + e2 * (b * h2))?;
            }
        }
        Ok(acc)
    })?;
    profile.provenance = Provenance::AnalyticCellMean;
    Ok(profile)
}

fn profile_from(geometry: &ScanGeometry, f: impl Fn(Complex64) -> Result<f64> + Sync) -> Result<DensityProfile> {
    geometry.validate()?;
    let values = geometry
        .points()
        .into_par_iter()
        .map(|z| {
            let rho = f(z).map_err(|e| match e {
                Error::NumericalFailure { .. } | Error::InvalidInput(_) => e,
                other => Error::NumericalFailure { z: z.to_string(), reason: other.to_string() },
            })?;
            Ok(ProfilePoint { z, rho, stderr: 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProfile { geometry: geometry.clone(), values, provenance: Provenance::Analytic })
}

// Maps an eigenvalue to its bin, if it falls inside the estimator region.
struct Binner {
    kind: ScanKind,
    half_width: f64,
    unit_dir: Complex64,
    length: f64,
}

impl Binner {
    fn new(geometry: &ScanGeometry) -> Self {
        let (unit_dir, length) = match &geometry.kind {
            ScanKind::Line { start, end, .. } => {
                let d = end - start;
                (d / d.norm(), d.norm())
            }
            ScanKind::Grid { .. } => (Complex64::new(1.0, 0.0), 0.0),
        };
        Binner { kind: geometry.kind.clone(), half_width: geometry.strip_half_width, unit_dir, length }
    }

    fn bin(&self, lam: Complex64) -> Option<usize> {
        match &self.kind {
            ScanKind::Line { start, points, .. } => {
                let w = (lam - start) * self.unit_dir.conj();
                if w.im.abs() > self.half_width || w.re < 0.0 || w.re >= self.length {
                    return None;
                }
                Some(((w.re / self.length * *points as f64) as usize).min(points - 1))
            }
            ScanKind::Grid { lower, upper, nx, ny } => {
                let fx = (lam.re - lower.re) / (upper.re - lower.re);
                let fy = (lam.im - lower.im) / (upper.im - lower.im);
                if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fy) {
                    return None;
                }
                let ix = ((fx * *nx as f64) as usize).min(nx - 1);
                let iy = ((fy * *ny as f64) as usize).min(ny - 1);
                Some(iy * nx + ix)
            }
        }
    }

    fn cell_measure(&self) -> f64 {
        match &self.kind {
            ScanKind::Line { points, .. } => self.length / *points as f64 * 2.0 * self.half_width,
            ScanKind::Grid { lower, upper, nx, ny } => (upper.re - lower.re) / *nx as f64 * (upper.im - lower.im) / *ny as f64,
        }
    }
}

const CHUNK: u64 = 256;

struct Tally {
    counts: Vec<u64>,
    accepted: u64,
    discarded: u64,
}

fn run_chunk(model: &Model, binner: &Binner, bins: usize, seed: u64, range: std::ops::Range<u64>) -> Result<Tally> {
    let mut t = Tally { counts: vec![0; bins], accepted: 0, discarded: 0 };
    let dim = model.ensemble.dim();
    let n = model.ensemble.n_inv_var();
    for trial in range {
        let mut g = GaussianStream::new(trial_rng(seed, trial));
        let x = ginibre_from(dim, n, &mut g);
        let m = match realize(&model.ensemble, &x, model.invert) {
            Ok(m) => m,
            Err(Error::NearSingular(_)) => {
                t.discarded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for lam in m.eigenvalues()? {
            if let Some(b) = binner.bin(lam) {
                t.counts[b] += 1;
            }
        }
        t.accepted += 1;
    }
    Ok(t)
}

/// Histogram estimate of the density over `geometry` from `trials`
/// realisations. Trial `k` always uses stream `k` of `seed`, and counts are
/// integers, so the result does not depend on the number of workers.
pub fn empirical_density(model: &Model, geometry: &ScanGeometry, trials: u64, seed: u64) -> Result<DensityProfile> {
    geometry.validate()?;
    if trials < 100 {
        return invalid(format!("trials must be at least 100, got {trials}"));
    }
    let binner = Binner::new(geometry);
    let bins = geometry.len();
    let chunks: Vec<std::ops::Range<u64>> = (0..trials.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(trials)).collect();
    let tallies = chunks
        .into_par_iter()
        .map(|r| run_chunk(model, &binner, bins, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Tally { counts: vec![0; bins], accepted: 0, discarded: 0 };
    for t in tallies {
        total.accepted += t.accepted;
        total.discarded += t.discarded;
        for (a, b) in total.counts.iter_mut().zip(t.counts) {
            *a += b;
        }
    }
    if total.accepted == 0 {
        return Err(Error::InsufficientSamples(format!("all {trials} realisations were discarded as near-singular")));
    }
    let unit = 1.0 / (total.accepted as f64 * model.ensemble.dim() as f64 * binner.cell_measure());
    let values = geometry
        .points()
        .into_iter()
        .zip(&total.counts)
        .map(|(z, &c)| ProfilePoint { z, rho: c as f64 * unit, stderr: (c as f64).sqrt() * unit })
        .collect();
    Ok(DensityProfile {
        geometry: geometry.clone(),
        values,
        provenance: Provenance::Empirical { seed, trials, accepted: total.accepted, discarded: total.discarded, count_unit: unit },
    })
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointComparison {
    pub z: Complex64,
    pub analytic: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub points: Vec<PointComparison>,
    pub sup_norm: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub sigma_level: f64,
    pub beyond: usize,
    pub pass: bool,
}

impl CompareReport {
    pub fn fraction_beyond(&self) -> f64 {
        self.beyond as f64 / self.points.len().max(1) as f64
    }
}

pub const SIGMA_LEVEL: f64 = 3.0;
pub const MAX_FRACTION_BEYOND: f64 = 0.01;
pub const MIN_P_VALUE: f64 = 0.001;

/// Pointwise z-scores and a chi-square test. Passes when at most 1% of
/// points lie beyond 3 sigma and the chi-square p-value is at least 0.001.
///
/// Sigma combines both standard errors. Where the empirical count is zero
/// the error of a single count is used instead, so empty bins still carry
/// weight.
pub fn compare(analytic: &DensityProfile, empirical: &DensityProfile) -> Result<CompareReport> {
    if analytic.geometry != empirical.geometry || analytic.values.len() != empirical.values.len() {
        return Err(Error::GeometryMismatch("profiles were computed on different scans".into()));
    }
    let floor = |p: &DensityProfile| match p.provenance {
        Provenance::Empirical { count_unit, .. } => count_unit,
        _ => 0.0,
    };
    let (fa, fe) = (floor(analytic), floor(empirical));
    let mut points = Vec::with_capacity(analytic.values.len());
    for (a, e) in analytic.values.iter().zip(&empirical.values) {
        let sa = if a.stderr > 0.0 { a.stderr } else { fa };
        let se = if e.stderr > 0.0 { e.stderr } else { fe };
        let sigma = sa.hypot(se);
        let diff = e.rho - a.rho;
        let z_score = if diff == 0.0 { 0.0 } else if sigma > 0.0 { diff / sigma } else { f64::INFINITY.copysign(diff) };
        points.push(PointComparison { z: a.z, analytic: a.rho, empirical: e.rho, sigma, z_score });
    }
    let sup_norm = points.iter().map(|p| (p.empirical - p.analytic).abs()).fold(0.0, f64::max);
    let chi2: f64 = points.iter().map(|p| p.z_score * p.z_score).sum();
    let dof = points.len();
    let p_value = if chi2 == 0.0 {
        1.0
    } else if !chi2.is_finite() {
        0.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(0.0)
    };
    let beyond = points.iter().filter(|p| p.z_score.abs() > SIGMA_LEVEL).count();
    let pass = beyond as f64 <= MAX_FRACTION_BEYOND * dof as f64 && p_value >= MIN_P_VALUE;
    Ok(CompareReport { points, sup_norm, chi2, dof, p_value, sigma_level: SIGMA_LEVEL, beyond, pass })
}
