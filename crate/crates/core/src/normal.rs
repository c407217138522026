//! Generating function and spectral density for a normal source with
//! diagonal covariances, plus the inverse-matrix variant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blocks::{fermionic_poly, BosonicSystem};
use crate::error::{Error, Result};
use crate::hyperdual::{HyperDual, Scalar};
use crate::model::{Group, StructuredEnsemble};
use crate::specfun::{HarmonicNumerator, JetSource};

static HARMONIC: HarmonicNumerator = HarmonicNumerator;

/// How the mixed Wirtinger derivative of the generating function is taken.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    /// Exact second-order forward differentiation with hyper-dual numbers.
    HyperDual,
    /// Nested central differences with one Richardson level; `h = None`
    /// uses `2e-3 (1 + |z|)`.
    FiniteDifference { h: Option<f64> },
}

/// A density value with evaluation metadata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityPoint {
    pub z: Complex64,
    pub rho: f64,
    /// Imaginary part of the derivative; zero up to rounding.
    pub imag_residual: f64,
    /// Finite-difference step, when one was used.
    pub step: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Spectrum {
    Direct,
    Inverse,
}

struct Assembler<'a> {
    ensemble: &'a StructuredEnsemble,
    numerator: &'a dyn JetSource,
    spectrum: Spectrum,
}

fn unit(d: usize, i: usize) -> Vec<i64> {
    let mut e = vec![0; d];
    e[i] = 1;
    e
}

fn offset(base: &[i64], plus: &[&[i64]], minus: &[&[i64]]) -> Vec<i64> {
    let mut out = base.to_vec();
    for p in plus {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o += x;
        }
    }
    for p in minus {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o -= x;
        }
    }
    out
}

impl Assembler<'_> {
    fn alpha<T: Scalar>(&self, g: &Group, x_bar: T, y: T) -> T {
        match self.spectrum {
            Spectrum::Direct => g.alpha(x_bar, y),
            Spectrum::Inverse => {
                let one = T::real(1.0);
                g.alpha(one / x_bar, one / y)
            }
        }
    }

    fn evaluate<T: Scalar>(&self, z: T, z_bar: T, v: T, v_bar: T) -> Result<T> {
        let groups = self.ensemble.groups();
        let d = groups.len();
        let n = self.ensemble.n_inv_var();
        let big_n = self.ensemble.dim() as f64;
        let mult: Vec<i64> = groups.iter().map(|g| g.m as i64).collect();
        let a_zz: Vec<T> = groups.iter().map(|g| self.alpha(g, z_bar, z)).collect();
        let a_zv: Vec<T> = groups.iter().map(|g| self.alpha(g, z_bar, v)).collect();
        let a_vz: Vec<T> = groups.iter().map(|g| self.alpha(g, v_bar, z)).collect();
        let a_vv: Vec<T> = groups.iter().map(|g| self.alpha(g, v_bar, v)).collect();
        let poles: Vec<Complex64> = a_vv.iter().map(|a| a.value()).collect();
        let bos = BosonicSystem::new(&poles, n, self.numerator);
        let fi = |m: &[i64]| fermionic_poly(&a_zz, m, n);
        let bj = |m: &[i64]| bos.block(&a_vv, m);
        let e: Vec<Vec<i64>> = (0..d).map(|i| unit(d, i)).collect();
        let nf: Vec<f64> = mult.iter().map(|&k| k as f64).collect();

        let mut acc = fi(&mult) * bj(&mult)?;
        for i in 0..d {
            let coeff = (a_zv[i] + a_vz[i] + T::real(big_n / n)) * (n / nf[i]);
            let term = fi(&offset(&mult, &[], &[&e[i]])) * bj(&offset(&mult, &[&e[i]], &[]))?;
            acc = acc - coeff * term;
        }
        for i in 0..d {
            for j in 0..d {
                let pp = offset(&mult, &[&e[i], &e[j]], &[]);
                let mm = offset(&mult, &[], &[&e[i], &e[j]]);
                if i != j {
                    let c = a_zv[i] * (a_vz[j] - a_vz[i]) * (n * n / (nf[i] * nf[j]));
                    acc = acc + c * fi(&mm) * bj(&pp)?;
                }
                let mj = offset(&mult, &[], &[&e[j]]);
                let pj = offset(&mult, &[&e[j]], &[]);
                let t1 = a_vv[i] * fi(&mj) * bj(&pp)?;
                let t2 = a_zz[i] * fi(&mm) * bj(&pj)?;
                acc = acc + (t1 + t2) * (n / nf[j]);
            }
        }
        let c: f64 = nf.iter().product();
        let mut out = acc * c;
        if self.spectrum == Spectrum::Inverse {
            let ratio = z * z_bar / (v * v_bar);
            out = out * ratio.powi(self.ensemble.dim() as u32);
        }
        Ok(out)
    }

    fn density(&self, z: Complex64, scheme: DerivativeScheme) -> Result<DensityPoint> {
        if self.spectrum == Spectrum::Inverse && z == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("inverse spectrum is undefined at z = 0".into()));
        }
        let big_n = self.ensemble.dim() as f64;
        let (d, step) = match scheme {
            DerivativeScheme::HyperDual => {
                let zb = z.conj();
                let r = self.evaluate(
                    HyperDual::constant(z),
                    HyperDual::seed1(zb),
                    HyperDual::seed2(z),
                    HyperDual::seed1(zb),
                )?;
                (r.d12, None)
            }
            DerivativeScheme::FiniteDifference { h } => {
                let h = h.unwrap_or(2e-3 * (1.0 + z.norm()));
                (self.fd_mixed(z, h)?, Some(h))
            }
        };
        let rho = -d.re / (big_n * PI);
        let point = DensityPoint { z, rho, imag_residual: -d.im / (big_n * PI), step };
        if !rho.is_finite() || rho.abs() > 1e10 {
            return Err(Error::NumericalFailure { z: z.to_string(), reason: format!("density evaluated to {rho}") });
        }
        Ok(point)
    }

    // Inner d/dv of the plane function v -> R(z, zb, v, conj v), then the
    // outer d/d z-bar of the plane function z -> phi(z, conj z).
    fn fd_mixed(&self, z: Complex64, h: f64) -> Result<Complex64> {
        let r = |zz: Complex64, vv: Complex64| self.evaluate(zz, zz.conj(), vv, vv.conj());
        let wirt = |f: &dyn Fn(Complex64) -> Result<Complex64>, x: Complex64, h: f64, bar: bool| -> Result<Complex64> {
            let one = |h: f64| -> Result<Complex64> {
                let dx = (f(x + h)? - f(x - h)?) / (2.0 * h);
                let dy = (f(x + Complex64::new(0.0, h))? - f(x - Complex64::new(0.0, h))?) / (2.0 * h);
                let i = Complex64::new(0.0, 1.0);
                Ok(if bar { (dx + i * dy) * 0.5 } else { (dx - i * dy) * 0.5 })
            };
            let a = one(h)?;
            let b = one(h / 2.0)?;
            Ok((b * 4.0 - a) / 3.0)
        };
        let phi = |zz: Complex64| wirt(&|vv| r(zz, vv), zz, h, false);
        wirt(&phi, z, h, true)
    }
}

fn assembler<'a>(ensemble: &'a StructuredEnsemble, numerator: &'a dyn JetSource, spectrum: Spectrum) -> Assembler<'a> {
    Assembler { ensemble, numerator, spectrum }
}

/// Regularized generating function at independent `(z, z_bar, v, v_bar)`.
pub fn generating_reg(ensemble: &StructuredEnsemble, z: Complex64, z_bar: Complex64, v: Complex64, v_bar: Complex64) -> Result<Complex64> {
    assembler(ensemble, &HARMONIC, Spectrum::Direct).evaluate(z, z_bar, v, v_bar)
}

/// As [`generating_reg`] with a caller-supplied residue numerator.
pub fn generating_with_numerator(
    ensemble: &StructuredEnsemble,
    numerator: &dyn JetSource,
    z: Complex64,
    z_bar: Complex64,
    v: Complex64,
    v_bar: Complex64,
) -> Result<Complex64> {
    assembler(ensemble, numerator, Spectrum::Direct).evaluate(z, z_bar, v, v_bar)
}

/// Generating function for the spectrum of `(S + X)^{-1}`; needs `L = R = 1`.
pub fn inverse_generating(ensemble: &StructuredEnsemble, z: Complex64, z_bar: Complex64, v: Complex64, v_bar: Complex64) -> Result<Complex64> {
    check_inverse(ensemble)?;
    if z == Complex64::new(0.0, 0.0) || v == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("inverse generating function needs z != 0 and v != 0".into()));
    }
    assembler(ensemble, &HARMONIC, Spectrum::Inverse).evaluate(z, z_bar, v, v_bar)
}

fn check_inverse(ensemble: &StructuredEnsemble) -> Result<()> {
    if !ensemble.has_unit_covariance() {
        return Err(Error::InvalidInput("inverse spectrum is implemented for L = R = 1 only".into()));
    }
    Ok(())
}

/// Eigenvalue density of `S + L X R` at `z`.
pub fn spectral_density(ensemble: &StructuredEnsemble, z: Complex64) -> Result<f64> {
    spectral_density_with(ensemble, z, DerivativeScheme::HyperDual).map(|p| p.rho)
}

pub fn spectral_density_with(ensemble: &StructuredEnsemble, z: Complex64, scheme: DerivativeScheme) -> Result<DensityPoint> {
    assembler(ensemble, &HARMONIC, Spectrum::Direct).density(z, scheme)
}

/// Density computed with a caller-supplied residue numerator.
pub fn spectral_density_with_numerator(ensemble: &StructuredEnsemble, numerator: &dyn JetSource, z: Complex64) -> Result<f64> {
    assembler(ensemble, numerator, Spectrum::Direct).density(z, DerivativeScheme::HyperDual).map(|p| p.rho)
}

/// Eigenvalue density of `(S + X)^{-1}` at `z`.
pub fn spectral_density_inverse(ensemble: &StructuredEnsemble, z: Complex64) -> Result<f64> {
    spectral_density_inverse_with(ensemble, z, DerivativeScheme::HyperDual).map(|p| p.rho)
}

pub fn spectral_density_inverse_with(ensemble: &StructuredEnsemble, z: Complex64, scheme: DerivativeScheme) -> Result<DensityPoint> {
    check_inverse(ensemble)?;
    assembler(ensemble, &HARMONIC, Spectrum::Inverse).density(z, scheme)
}

/// Densities at many points in parallel, in input order.
pub fn density_scan(ensemble: &StructuredEnsemble, points: &[Complex64], inverse: bool) -> Vec<Result<DensityPoint>> {
    points
        .par_iter()
        .map(|&z| {
            if inverse {
                spectral_density_inverse_with(ensemble, z, DerivativeScheme::HyperDual)
            } else {
                spectral_density_with(ensemble, z, DerivativeScheme::HyperDual)
            }
        })
        .collect()
}

/// `(n / N pi) e^{-n|z|^2} sum_{k<N} (n|z|^2)^k / k!`.
pub fn ginibre_density(dim: usize, n: f64, z: Complex64) -> f64 {
    let x = n * z.norm_sqr();
    n / (dim as f64 * PI) * truncated_exp(dim, x)
}

/// `(n e^{-n/|z|^2} / (N pi |z|^4)) sum_{k<N} (n/|z|^2)^k / k!`.
pub fn ginibre_inverse_density(dim: usize, n: f64, z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    n / (dim as f64 * PI * r2 * r2) * truncated_exp(dim, n / r2)
}

// e^{-x} sum_{k<N} x^k / k!
fn truncated_exp(dim: usize, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..dim {
        term *= x / k as f64;
        sum += term;
    }
    sum
}
