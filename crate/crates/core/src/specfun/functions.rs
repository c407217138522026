use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quad;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_4;

/// Laguerre polynomials `L_0(x) ..= L_k(x)` by three-term recurrence.
pub fn laguerre_all(k: usize, x: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(Complex64::new(1.0, 0.0));
    if k >= 1 {
        out.push(1.0 - x);
    }
    for m in 1..k {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - x) * out[m] - mf * out[m - 1]) / (mf + 1.0);
        out.push(next);
    }
    out
}

pub fn laguerre(k: usize, x: Complex64) -> Complex64 {
    laguerre_all(k, x)[k]
}

/// Modified Laguerre polynomials `L~_0 ..= L~_k`: the Laguerre recurrence
/// seeded with `L~_0 = 0`, `L~_1 = -1`.
pub fn modified_laguerre_all(k: usize, x: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    if k >= 1 {
        out.push(Complex64::new(-1.0, 0.0));
    }
    for m in 1..k {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - x) * out[m] - mf * out[m - 1]) / (mf + 1.0);
        out.push(next);
    }
    out
}

pub fn modified_laguerre(k: usize, x: Complex64) -> Complex64 {
    modified_laguerre_all(k, x)[k]
}

/// Exponential integral `E_1(x) = Gamma(0, x)` for real `x > 0`.
pub fn gamma_inc0(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Gamma(0, x) needs finite x > 0, got {x}")));
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(-EULER_GAMMA - x.ln() + sum);
    }
    // Modified Lentz on the continued fraction.
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h * (-x).exp());
        }
    }
    Err(Error::Convergence(format!("E1 continued fraction at x = {x}")))
}

fn ln_factorial(k: u32) -> f64 {
    statrs::function::factorial::ln_factorial(k as u64)
}

/// Tricomi confluent hypergeometric `U(a, b, x)` for integer `a >= 1`,
/// integer `b` and real `x > 0`.
pub fn tricomi_u(a: i64, b: i64, x: f64) -> Result<f64> {
    if a < 1 {
        return invalid(format!("tricomi_u needs a >= 1, got a = {a}"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("tricomi_u needs finite x > 0, got {x}")));
    }
    if b <= 0 {
        // Kummer transformation U(a,b,x) = x^{1-b} U(a-b+1, 2-b, x).
        return Ok(x.powi((1 - b) as i32) * tricomi_u(a - b + 1, 2 - b, x)?);
    }
    if b >= a + 1 {
        // Terminating: x^{-a} sum_k (a)_k (b-a-1)!/(b-a-1-k)!/k! x^{-k}, all terms positive.
        let top = b - a - 1;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..top {
            term *= (a + k) as f64 * (top - k) as f64 / ((k + 1) as f64 * x);
            sum += term;
        }
        return Ok(sum * x.powi(-(a as i32)));
    }
    if x >= 200.0 + 20.0 * (a + b.abs()) as f64 {
        // Asymptotic series, truncated at the smallest term.
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..200 {
            let next = term * (a + k) as f64 * (a - b + 1 + k) as f64 / ((k + 1) as f64 * -x);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum * x.powi(-(a as i32)));
    }
    // U = x^{-a}/Gamma(a) int_0^inf e^{-u} u^{a-1} (1 + u/x)^{b-a-1} du.
    let expo = (b - a - 1) as i32;
    let lg = ln_factorial((a - 1) as u32);
    let v = quad::integrate_to_infinity(
        |u| {
            if u <= 0.0 {
                return Complex64::new(if a == 1 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -u + (a - 1) as f64 * u.ln() + expo as f64 * (u / x).ln_1p() - lg;
            Complex64::new(ln.exp(), 0.0)
        },
        0.0,
        1e-300,
        1e-14,
    )?;
    Ok(v.re * x.powi(-(a as i32)))
}

/// Modified Bessel `I_0(x)`.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 700.0 {
        return f64::INFINITY;
    }
    bessel_i0_scaled(ax) * ax.exp()
}

/// `e^{-|x|} I_0(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= 40.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        return sum * (-x).exp();
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf * x);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Harmonic numbers `H_0 ..= H_m`.
pub fn harmonic_all(m: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    h.push(0.0);
    for k in 1..=m {
        acc += 1.0 / k as f64;
        h.push(acc);
    }
    h
}

/// `n!` as f64 (infinite past 170).
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn laguerre_values() {
        // L_3(x) = (-x^3 + 9x^2 - 18x + 6)/6
        let x = 1.7;
        let want = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
        assert!((laguerre(3, c(x)).re - want).abs() < 1e-14);
    }

    #[test]
    fn modified_laguerre_seeds() {
        let v = modified_laguerre_all(4, c(0.3));
        assert_eq!(v[0], c(0.0));
        assert_eq!(v[1], c(-1.0));
        let h = modified_laguerre_all(3, c(0.0));
        assert!((h[2].re + 1.5).abs() < 1e-15);
        assert!((h[3].re + 11.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn laguerre_small_values() {
        assert_eq!(laguerre(0, c(4.2)), c(1.0));
        assert!((laguerre(1, c(-2.0)).re - 3.0).abs() < 1e-15);
        assert!((laguerre(2, c(-1.0)).re - 3.5).abs() < 1e-15);
    }

    // e^x E1(x) L_k(-x) + L~_k(-x) evaluated at 60 digits. In binary64 the
    // right side cancels by up to ~1e13 at x = 20, k = 12, so the split is
    // evaluated in f64 only where it is well conditioned.
    const SPLIT: [(usize, f64, f64); 42] = [
        (0, 0.05, 2.5944303497606133216),
        (0, 0.4, 1.0478280084560064329),
        (0, 1.0, 0.59634736232319407434),
        (0, 3.3, 0.24236103273851717984),
        (0, 9.0, 0.10086195558064092906),
        (0, 20.0, 0.047718545495960841699),
        (1, 0.05, 1.7241518672486439877),
        (1, 0.4, 0.46695921183840900603),
        (1, 1.0, 0.19269472464638814868),
        (1, 3.3, 0.042152440775623873324),
        (1, 9.0, 0.0086195558064092906239),
        (1, 20.0, 0.002089455415177675674),
        (2, 0.05, 1.3321164226738754204),
        (2, 0.4, 0.26991665589729209381),
        (2, 1.0, 0.087215768131179260194),
        (2, 3.3, 0.011599672073956611049),
        (2, 9.0, 0.0012863570481352792125),
        (2, 20.0, 0.00016946452656284940111),
        (3, 0.05, 1.0929614000019276326),
        (3, 0.4, 0.17454383938951976483),
        (3, 1.0, 0.045968386498099754599),
        (3, 3.3, 0.0039907988875307083539),
        (3, 9.0, 0.00025662902035844257548),
        (3, 20.0, 0.000019234111238627893277),
        (5, 0.05, 0.80396632239982139964),
        (5, 0.4, 0.086845917069952077957),
        (5, 1.0, 0.016275184597150324428),
        (5, 3.3, 0.00068568146658875799843),
        (5, 9.0, 0.000016990646909565152947),
        (5, 20.0, 4.5747545298481236313e-7),
        (8, 0.05, 0.56699217975354063429),
        (8, 0.4, 0.038277257435323707425),
        (8, 1.0, 0.0047442047335384326808),
        (8, 3.3, 0.00008192851923942372211),
        (8, 9.0, 6.0509268715858729069e-7),
        (8, 20.0, 4.2290768202913484936e-9),
        (12, 0.05, 0.39455174231491920077),
        (12, 0.4, 0.015985460020613410273),
        (12, 1.0, 0.0012606899947256539201),
        (12, 3.3, 8.1326598770681817344e-6),
        (12, 9.0, 1.5364604726267362785e-8),
        (12, 20.0, 2.2478423399889694875e-11),
    ];

    #[test]
    fn tricomi_matches_laguerre_split() {
        for &(k, x, want) in SPLIT.iter() {
            let lhs = factorial(k) * tricomi_u(k as i64 + 1, 1, x).unwrap();
            assert!((lhs / want - 1.0).abs() < 1e-9, "k={k} x={x} {lhs} {want}");
            if x <= 1.0 {
                let rhs = x.exp() * gamma_inc0(x).unwrap() * laguerre(k, c(-x)).re + modified_laguerre(k, c(-x)).re;
                assert!((rhs / want - 1.0).abs() < 1e-9, "split k={k} x={x} {rhs} {want}");
            }
        }
    }

    #[test]
    fn tricomi_contiguous_relation() {
        // U(a,b,x) - a U(a+1,b,x) - U(a,b-1,x) = 0
        for &(a, b, x) in &[(1, 1, 0.3), (2, 1, 2.5), (2, 3, 7.0), (1, -2, 1.5), (3, 2, 35.0)] {
            let r = tricomi_u(a, b, x).unwrap() - a as f64 * tricomi_u(a + 1, b, x).unwrap() - tricomi_u(a, b - 1, x).unwrap();
            let s = tricomi_u(a, b, x).unwrap().abs();
            assert!(r.abs() < 1e-11 * s, "a={a} b={b} x={x} r={r}");
        }
    }

    #[test]
    fn bessel_values() {
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i0(10.0) / 2_815.716_628_466_254_5 - 1.0).abs() < 1e-14);
        let a = bessel_i0_scaled(39.999);
        let b = bessel_i0_scaled(40.001);
        assert!((a / b - 1.0).abs() < 1e-4);
    }
}
