//! Rank-one non-normal source `S = alpha |ket><bra|` with `L = R = 1`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blocks::{fermionic_poly, BosonicSystem};
use crate::error::{invalid, Error, Result};
use crate::hyperdual::{HyperDual, Scalar};
use crate::model::RankOneNonNormalEnsemble;
use crate::normal::{DensityPoint, DerivativeScheme};
use crate::specfun::{factorial, tricomi_u, HarmonicNumerator, JetSource};

static HARMONIC: HarmonicNumerator = HarmonicNumerator;

/// The roots `k^±_x` for given `|x|^2` and `|alpha|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPlusMinus {
    pub k_plus: f64,
    pub k_minus: f64,
}

impl KPlusMinus {
    pub fn new(x_sq: f64, alpha_sq: f64) -> Self {
        let (k_plus, k_minus) = kpm(Complex64::new(x_sq, 0.0), alpha_sq);
        KPlusMinus { k_plus: k_plus.re, k_minus: k_minus.re }
    }

    pub fn k0(&self) -> f64 {
        0.5 * (self.k_plus + self.k_minus)
    }

    pub fn delta_k(&self) -> f64 {
        0.5 * (self.k_plus - self.k_minus)
    }
}

// k^± = (a2 + 2X ± sqrt(a2 (4X + a2))) / 2, with k^- = X^2 / k^+.
fn kpm<T: Scalar>(x: T, a2: f64) -> (T, T) {
    if a2 == 0.0 {
        return (x, x);
    }
    let root = (x * (4.0 * a2) + T::real(a2 * a2)).sqrt();
    let kp = (x * 2.0 + T::real(a2) + root) * 0.5;
    let km = x * x / kp;
    (kp, km)
}

// U(a, b, x) for real x >= 0; the x = 0 value is the b < 1 limit.
fn u_at(a: i64, b: i64, x: f64) -> Result<f64> {
    if x == 0.0 {
        if b < 1 {
            // Gamma(1 - b) / Gamma(a - b + 1)
            return Ok(factorial((-b) as usize) / factorial((a - b) as usize));
        }
        return Err(Error::Domain(format!("U({a}, {b}, x) diverges at x = 0")));
    }
    tricomi_u(a, b, x)
}

fn u_lift<T: Scalar>(a: i64, b: i64, x: T) -> Result<T> {
    let x0 = x.value().re;
    let v = u_at(a, b, x0)?;
    let err = RefCell::new(None);
    let d = |da: i64, scale: f64| -> Complex64 {
        match u_at(a + da, b + da, x0) {
            Ok(u) => Complex64::new(scale * u, 0.0),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let af = a as f64;
    let out = x.lift(Complex64::new(v, 0.0), || d(1, -af), || d(2, af * (af + 1.0)));
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

struct Blocks<'a, T: Scalar> {
    n: f64,
    a2: f64,
    zz: T,
    kz: (T, T),
    v_alphas: [T; 3],
    bos: BosonicSystem<'a>,
    fcache: RefCell<HashMap<(i64, i64), T>>,
    bcache: RefCell<HashMap<(i64, i64, i64), T>>,
}

impl<'a, T: Scalar> Blocks<'a, T> {
    fn new(zz: T, vv: T, n: f64, a2: f64, numerator: &'a dyn JetSource) -> Self {
        let kz = kpm(zz, a2);
        let (kp, km) = kpm(vv, a2);
        let v_alphas = [vv, km, kp];
        let poles: Vec<Complex64> = v_alphas.iter().map(|a| a.value()).collect();
        Blocks {
            n,
            a2,
            zz,
            kz,
            v_alphas,
            bos: BosonicSystem::new(&poles, n, numerator),
            fcache: RefCell::new(HashMap::new()),
            bcache: RefCell::new(HashMap::new()),
        }
    }

    fn fermionic(&self, k: i64, l: i64) -> Result<T> {
        if k < 0 {
            return Ok(T::real(0.0));
        }
        if let Some(v) = self.fcache.borrow().get(&(k, l)) {
            return Ok(*v);
        }
        let n = self.n;
        let v = match l {
            0 => {
                let g = fermionic_poly(&[self.zz], &[k], n) * factorial(k as usize);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                g * (sign / n.powi(k as i32 + 1))
            }
            1 => self.fermionic(k + 2, 0)? - (self.fermionic(k + 1, 0)? + self.zz * self.fermionic(k, 0)?) * self.a2,
            -1 => self.fermionic_minus(k)?,
            _ => return invalid(format!("fermionic block needs l in {{-1, 0, 1}}, got {l}")),
        };
        self.fcache.borrow_mut().insert((k, l), v);
        Ok(v)
    }

    fn fermionic_minus(&self, k: i64) -> Result<T> {
        let n = self.n;
        let (kp, km) = self.kz;
        let k0 = (kp + km) * 0.5;
        let gap = kp.value() - km.value();
        let degenerate = gap.norm() < 1e-8 * (1.0 + k0.value().norm());
        let nz = self.zz * n;
        let mut sum = T::real(0.0);
        let mut pw = T::real(1.0);
        for l in 0..=k {
            if l > 0 {
                pw = pw * nz * (1.0 / l as f64);
            }
            let b = 1 + l - k;
            let bracket = if degenerate {
                // Difference quotient limit: -(d/dx) U(1, b, x) * n = n U(2, b + 1, x).
                u_lift(2, b + 1, k0 * n)? * n
            } else {
                (u_lift(1, b, km * n)? - u_lift(1, b, kp * n)?) / (kp - km)
            };
            sum = sum + pw * bracket;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sum * (sign * factorial(k as usize) / n.powi(k as i32)))
    }

    // -(-n)^{a+b+c-1} (1/2 pi i) oint g / ((p + nV)^a (p + nk-)^b (p + nk+)^c)
    fn bosonic_orders(&self, a: i64, b: i64, c: i64) -> Result<T> {
        if let Some(v) = self.bcache.borrow().get(&(a, b, c)) {
            return Ok(*v);
        }
        let m = [a, b, c];
        let block = self.bos.block(&self.v_alphas, &m)?;
        let fact: f64 = m.iter().filter(|&&x| x > 0).map(|&x| factorial(x as usize - 1)).product();
        let e = a + b + c - 1;
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        let v = block * (sign * self.n.powi(e as i32) / fact);
        self.bcache.borrow_mut().insert((a, b, c), v);
        Ok(v)
    }

    fn bosonic(&self, q: i64, r: i64) -> Result<T> {
        if !(1..=3).contains(&r) || q + r < 1 {
            return invalid(format!("bosonic block (q, r) = ({q}, {r}) is outside q + r >= 1, r in 1..=3"));
        }
        let a2 = self.a2;
        match q {
            q if q >= 0 => self.bosonic_orders(q, r, r),
            -1 if r >= 2 => Ok((self.bosonic_orders(0, r - 1, r)? + self.bosonic_orders(0, r, r - 1)? + self.bosonic_orders(0, r, r)? * a2) * 0.5),
            -2 if r == 3 => {
                let j = |b, c| self.bosonic_orders(0, b, c);
                Ok((j(1, 3)? + j(2, 2)? * 2.0 + j(3, 1)? + j(3, 3)? * (a2 * a2) + (j(3, 2)? + j(2, 3)?) * (2.0 * a2)) * 0.25)
            }
            _ => invalid(format!("bosonic block (q, r) = ({q}, {r}) has no reduction")),
        }
    }
}

/// Regularized fermionic block `i~_{k,l}(z)`; zero for `k < 0`.
pub fn nn_fermionic(k: i64, l: i64, z: Complex64, params: &RankOneNonNormalEnsemble) -> Result<Complex64> {
    let a2 = params.alpha().norm_sqr();
    let zz = Complex64::new(z.norm_sqr(), 0.0);
    let blocks = Blocks::new(zz, zz, params.n_inv_var(), a2, &HARMONIC);
    blocks.fermionic(k, l)
}

/// Regularized bosonic block `j~_{q,r}(v)`.
pub fn nn_bosonic(q: i64, r: i64, v: Complex64, params: &RankOneNonNormalEnsemble) -> Result<Complex64> {
    nn_bosonic_with(q, r, v, params, &HARMONIC)
}

pub fn nn_bosonic_with(q: i64, r: i64, v: Complex64, params: &RankOneNonNormalEnsemble, numerator: &dyn JetSource) -> Result<Complex64> {
    let a2 = params.alpha().norm_sqr();
    let vv = Complex64::new(v.norm_sqr(), 0.0);
    let blocks = Blocks::new(vv, vv, params.n_inv_var(), a2, numerator);
    blocks.bosonic(q, r)
}

/// The five coefficients `R_0 .. R_4` of the generating function in powers
/// of `|alpha|^2`.
fn parts<T: Scalar>(b: &Blocks<'_, T>, big_n: i64, z: T, z_bar: T, v: T, v_bar: T) -> Result<[T; 5]> {
    let nn = big_n;
    let nf = big_n as f64;
    let n = b.n;
    let zz = z * z_bar;
    let vv = v * v_bar;
    let d1 = z_bar * v + z * v_bar;
    let d2 = (z_bar * v).powi(2) + (z * v_bar).powi(2);
    let i = |k: i64, l: i64| b.fermionic(k, l);
    let j = |q: i64, r: i64| b.bosonic(q, r);
    // Delta^w_{x,y} = i_{x,y} + w i_{x-1,y};  Sigma^w_{x,y} = j_{x,y} + w j_{x+1,y}
    let dd = |x: i64, y: i64, w: T| -> Result<T> { Ok(i(x, y)? + w * i(x - 1, y)?) };
    let ss = |x: i64, y: i64, w: T| -> Result<T> { Ok(j(x, y)? + w * j(x + 1, y)?) };
    let neg = |w: T| w * -1.0;

    let d1p = i(nn - 1, 0)? + i(nn - 3, 1)?;
    let d1m = i(nn - 1, 0)? - i(nn - 3, 1)?;
    let dl2 = i(nn - 4, 1)? - i(nn - 2, 0)?;
    let dl3 = i(nn, -1)? - i(nn - 2, 0)?;
    let s1p = j(nn - 3, 2)? + j(nn - 1, 1)?;
    let s1m = j(nn - 3, 2)? - j(nn - 1, 1)?;
    let s2 = j(nn - 2, 2)? - j(nn - 4, 3)?;

    let r0 = (vv * i(nn - 3, 1)? * j(nn, 1)? + zz * i(nn, -1)? * j(nn - 3, 2)?) * 2.0
        + (vv * i(nn - 1, 0)? * j(nn - 4, 3)? + zz * i(nn - 4, 1)? * j(nn - 1, 1)?) * 6.0
        - vv * j(nn - 2, 2)? * d1p * 4.0
        - zz * i(nn - 2, 0)? * s1p * 4.0
        + (j(nn - 1, 1)? * dd(nn - 3, 1, zz)? + vv * i(nn - 3, 1)? * j(nn, 1)?) * (nf * nf)
        + d1 * (j(nn - 1, 1)? * i(nn - 3, 1)? * (nf - 2.0) + i(nn - 1, 0)? * j(nn - 3, 2)? * 2.0) * n
        - i(nn - 2, 1)? * j(nn - 2, 1)? * (n * n)
        + (vv * j(nn - 2, 2)? * d1p * 2.0 - zz * j(nn - 1, 1)? * dl2 * 2.0 + j(nn - 3, 2)? * dd(nn - 1, 0, zz)? * 2.0
            - j(nn - 1, 1)? * dd(nn - 3, 1, zz)? * 2.0
            - zz * i(nn - 4, 1)? * j(nn - 1, 1)?
            - vv * i(nn - 3, 1)? * j(nn, 1)? * 3.0)
            * nf;

    let r1 = (d1m * ss(nn - 2, 2, vv)? + dd(nn - 2, 0, zz)? * s1m) * -nf
        + (dd(nn - 1, 0, zz)? * ss(nn - 3, 2, vv)? * 2.0 + d2 * i(nn - 2, 0)? * j(nn - 2, 2)?) * n
        + i(nn - 1, 0)? * (vv * j(nn - 1, 2)? * 2.0 + j(nn - 4, 3)? * 3.0)
        + d1 * (j(nn - 2, 2)? * dd(nn - 2, 0, zz)? * (2.0 * nf)
            + i(nn - 2, 0)? * (vv * j(nn - 3, 3)? * 4.0 - j(nn - 2, 2)? * nf)
            + i(nn - 2, 0)? * j(nn - 4, 3)?
            - i(nn, -1)? * j(nn - 2, 2)?
            + vv * i(nn - 2, 0)? * j(nn - 1, 2)? * (nf - 2.0)
            - zz * i(nn - 3, 0)? * j(nn - 2, 2)? * (nf + 2.0))
        + vv * j(nn - 4, 3)? * dl3 * 2.0
        - zz * i(nn, -1)? * s2
        - i(nn - 3, 1)? * ss(nn - 2, 2, vv)? * 2.0
        - j(nn - 1, 1)? * dd(nn - 2, 0, zz)? * 2.0
        - zz * j(nn - 3, 2)? * dd(nn - 1, -1, zz)? * 2.0
        + vv * i(nn - 1, 0)? * ss(nn - 3, 3, vv)? * 2.0
        + j(nn - 3, 2)? * (zz * i(nn - 3, 0)? * 2.0 + i(nn, -1)?)
        - (vv * i(nn - 2, 0)? - zz * i(nn, -1)?) * j(nn - 4, 3)?;

    let r2 = d1 * (dd(nn - 1, -1, zz)? * j(nn - 2, 2)? + (i(nn - 2, 0)? - i(nn, -1)? * 2.0) * ss(nn - 3, 3, vv)?)
        + dd(nn - 2, 0, zz)? * ss(nn - 2, 2, vv)? * (2.0 * (nf - 2.0))
        + vv * i(nn - 2, 0)? * ss(nn - 3, 3, neg(vv))?
        - (zz + vv) * j(nn - 4, 3)? * dd(nn - 1, -1, zz)? * 2.0
        - ss(nn - 3, 2, neg(zz))? * dd(nn - 1, -1, zz)?
        - i(nn - 1, 0)? * ss(nn - 3, 3, vv)?
        + j(nn - 2, 2)? * i(nn - 2, 0)?
        - dl3 * s2;

    let r3 = dl3 * ss(nn - 3, 3, vv)? * -1.0 + dd(nn - 1, -1, zz)? * (s2 + d1 * ss(nn - 3, 3, vv)? * 2.0);
    let r4 = dd(nn - 1, -1, zz)? * ss(nn - 3, 3, vv)?;
    Ok([r0, r1, r2, r3, r4])
}

fn evaluate<T: Scalar>(params: &RankOneNonNormalEnsemble, numerator: &dyn JetSource, z: T, z_bar: T, v: T, v_bar: T) -> Result<T> {
    let a2 = params.alpha().norm_sqr();
    let blocks = Blocks::new(z * z_bar, v * v_bar, params.n_inv_var(), a2, numerator);
    let r = parts(&blocks, params.dim() as i64, z, z_bar, v, v_bar)?;
    Ok(r[0] + r[1] * a2 + r[2] * a2.powi(2) + r[3] * a2.powi(3) + r[4] * a2.powi(4))
}

/// `R_0 .. R_4` at independent arguments.
pub fn nn_generating_parts(params: &RankOneNonNormalEnsemble, z: Complex64, z_bar: Complex64, v: Complex64, v_bar: Complex64) -> Result<[Complex64; 5]> {
    let a2 = params.alpha().norm_sqr();
    let blocks = Blocks::new(z * z_bar, v * v_bar, params.n_inv_var(), a2, &HARMONIC);
    parts(&blocks, params.dim() as i64, z, z_bar, v, v_bar)
}

/// Regularized generating function `R_0 + |a|^2 R_1 + ... + |a|^8 R_4`.
pub fn nn_generating(params: &RankOneNonNormalEnsemble, z: Complex64, z_bar: Complex64, v: Complex64, v_bar: Complex64) -> Result<Complex64> {
    evaluate(params, &HARMONIC, z, z_bar, v, v_bar)
}

/// Eigenvalue density of `alpha |ket><bra| + X` at `z`.
pub fn nn_density(params: &RankOneNonNormalEnsemble, z: Complex64) -> Result<f64> {
    nn_density_with(params, z, DerivativeScheme::HyperDual).map(|p| p.rho)
}

pub fn nn_density_with(params: &RankOneNonNormalEnsemble, z: Complex64, scheme: DerivativeScheme) -> Result<DensityPoint> {
    if z == Complex64::new(0.0, 0.0) {
        // k^-_z = 0 at the origin puts U(1, 1, x) at its logarithmic point;
        // the density is smooth there, so use the symmetric four-point mean.
        let eps = 1e-6;
        let mut acc = 0.0;
        let mut imag = 0.0;
        for w in [Complex64::new(eps, 0.0), Complex64::new(-eps, 0.0), Complex64::new(0.0, eps), Complex64::new(0.0, -eps)] {
            let p = nn_density_with(params, w, scheme)?;
            acc += p.rho;
            imag += p.imag_residual;
        }
        return Ok(DensityPoint { z, rho: acc / 4.0, imag_residual: imag / 4.0, step: None });
    }
    let big_n = params.dim() as f64;
    let (d, step) = match scheme {
        DerivativeScheme::HyperDual => {
            let zb = z.conj();
            let r = evaluate(params, &HARMONIC, HyperDual::constant(z), HyperDual::seed1(zb), HyperDual::seed2(z), HyperDual::seed1(zb))?;
            (r.d12, None)
        }
        DerivativeScheme::FiniteDifference { h } => {
            let h = h.unwrap_or(2e-3 * (1.0 + z.norm()));
            let r = |zz: Complex64, vv: Complex64| nn_generating(params, zz, zz.conj(), vv, vv.conj());
            let i = Complex64::new(0.0, 1.0);
            let wirt = |f: &dyn Fn(Complex64) -> Result<Complex64>, x: Complex64, bar: bool| -> Result<Complex64> {
                let one = |h: f64| -> Result<Complex64> {
                    let dx = (f(x + h)? - f(x - h)?) / (2.0 * h);
                    let dy = (f(x + i * h)? - f(x - i * h)?) / (2.0 * h);
                    Ok(if bar { (dx + i * dy) * 0.5 } else { (dx - i * dy) * 0.5 })
                };
                Ok((one(h / 2.0)? * 4.0 - one(h)?) / 3.0)
            };
            let phi = |zz: Complex64| wirt(&|vv| r(zz, vv), zz, false);
            (wirt(&phi, z, true)?, Some(h))
        }
    };
    let rho = -d.re / (big_n * PI);
    if !rho.is_finite() || rho.abs() > 1e10 {
        return Err(Error::NumericalFailure { z: z.to_string(), reason: format!("density evaluated to {rho}") });
    }
    Ok(DensityPoint { z, rho, imag_residual: -d.im / (big_n * PI), step })
}

/// Densities at many points in parallel, in input order.
pub fn nn_density_scan(params: &RankOneNonNormalEnsemble, points: &[Complex64]) -> Vec<Result<DensityPoint>> {
    points.par_iter().map(|&z| nn_density_with(params, z, DerivativeScheme::HyperDual)).collect()
}
