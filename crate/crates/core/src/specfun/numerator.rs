use num_complex::Complex64;

use super::functions::{binomial, harmonic_all};
use super::jet::{mul_truncated, Jet};
use crate::error::{Error, Result};
use crate::quad;

/// Something that can produce Taylor jets of an entire function.
pub trait JetSource: Sync {
    fn jet(&self, center: Complex64, order: usize) -> Result<Jet>;
}

/// `g(p) = e^p (gamma + Gamma(0, p) + ln p)`, the entire residue numerator.
#[derive(Clone, Copy, Debug, Default)]
pub struct HarmonicNumerator;

/// `e^p`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpNumerator;

/// `prod_j (p - root_j)^{power_j}` times an inner numerator.
pub struct PolyTimes<'a> {
    pub roots: Vec<(Complex64, u32)>,
    pub inner: &'a dyn JetSource,
}

impl JetSource for HarmonicNumerator {
    fn jet(&self, center: Complex64, order: usize) -> Result<Jet> {
        numerator_jet(center, order)
    }
}

impl JetSource for ExpNumerator {
    fn jet(&self, center: Complex64, order: usize) -> Result<Jet> {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = center.exp();
        for k in 0..=order {
            if k > 0 {
                c /= k as f64;
            }
            coeffs.push(c);
        }
        Jet::new(center, coeffs)
    }
}

impl JetSource for PolyTimes<'_> {
    fn jet(&self, center: Complex64, order: usize) -> Result<Jet> {
        let mut coeffs = self.inner.jet(center, order)?.coeffs().to_vec();
        for &(root, power) in &self.roots {
            let d = center - root;
            let factor: Vec<Complex64> = (0..=power as usize)
                .map(|k| d.powu(power - k as u32) * binomial(power as usize, k))
                .collect();
            coeffs = mul_truncated(&coeffs, &factor, order);
        }
        Jet::new(center, coeffs)
    }
}

const ORIGIN_RADIUS: f64 = 3.0;

/// Taylor coefficients of `g(p) = sum_m H_m p^m / m!` at `center`.
pub fn numerator_jet(center: Complex64, order: usize) -> Result<Jet> {
    if !center.re.is_finite() || !center.im.is_finite() {
        return Err(Error::Domain(format!("numerator jet at non-finite point {center}")));
    }
    if center.re > 700.0 {
        return Err(Error::Domain(format!("numerator jet overflows at {center}")));
    }
    let coeffs = if center.norm() <= ORIGIN_RADIUS {
        origin_series(center, order)?
    } else {
        (0..=order).map(|k| integral_coeff(center, k)).collect::<Result<Vec<_>>>()?
    };
    Jet::new(center, coeffs)
}

// g_k(c) = (1/k!) sum_j H_{k+j} c^j / j!
fn origin_series(c: Complex64, order: usize) -> Result<Vec<Complex64>> {
    const CAP: usize = 500;
    let h = harmonic_all(order + CAP + 1);
    let mut out = Vec::with_capacity(order + 1);
    let mut inv_kfact = 1.0;
    for k in 0..=order {
        if k > 0 {
            inv_kfact /= k as f64;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut small = 0;
        let mut done = false;
        for j in 0..CAP {
            if j > 0 {
                pow *= c / j as f64;
            }
            let term = pow * h[k + j];
            sum += term;
            if j as f64 > c.norm() {
                if term.norm() <= 1e-17 * sum.norm() || (term.norm() == 0.0 && sum.norm() == 0.0) {
                    small += 1;
                } else {
                    small = 0;
                }
                if small >= 3 {
                    done = true;
                    break;
                }
            }
        }
        if !done {
            return Err(Error::Convergence(format!("numerator series at {c} order {k} hit {CAP} terms")));
        }
        out.push(sum * inv_kfact);
    }
    Ok(out)
}

fn expm1c(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let mut term = x;
        let mut sum = x;
        for j in 2..30 {
            term *= x / j as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        x.exp() - 1.0
    }
}

// g_k(c) = (1/k!) int_0^1 (e^c - w^k e^{c w}) / (1 - w) dw
fn integral_coeff(c: Complex64, k: usize) -> Result<Complex64> {
    let lnk = statrs::function::factorial::ln_factorial(k as u64);
    let kf = k as f64;
    let integrand = |w: f64| -> Complex64 {
        let lw = if k == 0 { 0.0 } else { kf * w.ln() };
        let x = c * (w - 1.0) + lw;
        let one_minus = 1.0 - w;
        if x.re > 0.5 {
            ((c - lnk).exp() - (lw + c * w - lnk).exp()) / one_minus
        } else {
            -(c - lnk).exp() * expm1c(x) / one_minus
        }
    };
    // Breakpoints resolve the peak of w^k e^{c w} when |c| is large.
    let scale = c.norm();
    let mut breaks = vec![0.0];
    let mut b = 1.0 / scale;
    while b < 1.0 {
        breaks.push(b);
        b *= 2.0;
    }
    if c.re < 0.0 && k > 0 {
        let peak = kf / -c.re;
        let width = (kf.sqrt() + 1.0) / -c.re;
        for p in [peak - 4.0 * width, peak - width, peak, peak + width, peak + 4.0 * width] {
            if p > 0.0 && p < 1.0 {
                breaks.push(p);
            }
        }
    }
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut pieces = Vec::with_capacity(breaks.len());
    let mut rough = 0.0;
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        rough += integrand(mid).norm() * (w[1] - w[0]);
    }
    for w in breaks.windows(2) {
        pieces.push(quad::integrate(integrand, w[0], w[1], 1e-16 * rough, 1e-13)?);
    }
    Ok(pieces.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::functions::EULER_GAMMA;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    // -e^{-y} sum_k y^k/(k k!): positive terms, used as an independent reference.
    fn g_neg_real(y: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..2000 {
            term *= y / k as f64;
            sum += term / k as f64;
            if k as f64 > y && term / (k as f64) < 1e-18 * sum {
                break;
            }
        }
        -(-y).exp() * sum
    }

    #[test]
    fn value_matches_positive_series_on_negative_axis() {
        for &y in &[0.5, 2.0, 2.9, 3.1, 7.5, 20.0, 35.0, 60.0, 150.0, 400.0] {
            let j = numerator_jet(c(-y), 0).unwrap();
            let want = g_neg_real(y);
            assert!((j.value().re / want - 1.0).abs() < 1e-12, "y={y} {} {want}", j.value());
        }
    }

    #[test]
    fn derivatives_follow_the_ode() {
        // g' = g + (e^p - 1)/p
        for &y in &[1.0, 5.0, 12.0, 45.0, 200.0] {
            let j = numerator_jet(c(-y), 1).unwrap();
            let rhs = j.coeff(0).re + ((-y).exp() - 1.0) / -y;
            assert!((j.coeff(1).re / rhs - 1.0).abs() < 1e-11, "y={y}");
        }
    }

    #[test]
    fn jets_agree_across_the_method_switch() {
        // Re-expand a jet at 2.8 to 3.2 (different method) and compare.
        let a = numerator_jet(c(-2.8), 40).unwrap();
        let b = numerator_jet(c(-3.2), 8).unwrap();
        for k in 0..=8 {
            let mut shifted = Complex64::new(0.0, 0.0);
            for m in k..=40 {
                shifted += a.coeff(m) * binomial(m, k) * (-0.4f64).powi((m - k) as i32);
            }
            assert!((shifted - b.coeff(k)).norm() < 1e-12 * b.coeff(k).norm().max(1e-3), "k={k}");
        }
    }

    #[test]
    fn entire_form_on_the_negative_axis() {
        // g(-y) = e^{-y}(gamma + ln y - Ei(y)); at y = 2, Ei(2) = 4.954234356001890.
        let y = 2.0f64;
        let want = (-y).exp() * (EULER_GAMMA + y.ln() - 4.954_234_356_001_890);
        assert!((numerator_jet(c(-y), 0).unwrap().value().re - want).abs() < 1e-14);
    }

    #[test]
    fn complex_centers_agree() {
        let z = Complex64::new(-5.0, 2.0);
        let a = numerator_jet(z, 3).unwrap();
        let b = origin_series(z, 3).unwrap();
        for k in 0..=3 {
            assert!((a.coeff(k) - b[k]).norm() < 1e-9 * b[k].norm(), "k={k}");
        }
    }

    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn origin_coefficients_are_harmonic_over_factorial() {
        let j = numerator_jet(c(0.0), 20).unwrap();
        // Exact H_m / m! as a reduced fraction in i128.
        let (mut num, mut den) = (0i128, 1i128);
        let mut fact = 1i128;
        for m in 1..=20i128 {
            num = num * m + den;
            den *= m;
            let g = gcd(num, den);
            num /= g;
            den /= g;
            fact *= m;
            let want = num as f64 / (den as f64 * fact as f64);
            let got = j.coeff(m as usize).re;
            assert!((got / want - 1.0).abs() < 4.0 * f64::EPSILON, "m={m} {got} {want}");
        }
        assert_eq!(j.coeff(0), c(0.0));
    }

    #[test]
    fn exp_and_poly_sources() {
        let e = ExpNumerator.jet(c(1.0), 3).unwrap();
        assert!((e.coeff(3).re - 1f64.exp() / 6.0).abs() < 1e-15);
        let p = PolyTimes { roots: vec![(c(2.0), 2)], inner: &ExpNumerator };
        // (p-2)^2 e^p at 0 -> 4 + (4 - 4) p + ...
        let j = p.jet(c(0.0), 2).unwrap();
        assert!((j.coeff(0).re - 4.0).abs() < 1e-15);
        assert!(j.coeff(1).norm() < 1e-15);
        assert!((j.coeff(2).re - (2.0 - 4.0 + 1.0)).abs() < 1e-15);
    }
}
