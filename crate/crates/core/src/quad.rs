//! Adaptive Gauss-Kronrod and Gauss-Laguerre quadrature.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive G7/K15 on `[a, b]`. Stops when the summed error estimate is
/// below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Complex64> {
    const MAX_PANELS: usize = 4000;
    let (v, e) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {err:.3e} (|I| = {:.3e})",
                total.norm()
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if !(mid > pa && mid < pb) {
            return Err(Error::Accuracy(format!("quadrature panel collapsed near {mid}")));
        }
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Real-valued convenience wrapper over [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|c| c.re)
}

/// `int_a^inf f` through `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Complex64> {
    integrate(
        |t| {
            if t >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == Complex64::new(0.0, 0.0) {
                v
            } else {
                v / (s * s)
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

// Tensor G7/K15 on one rectangle; point evaluations run in parallel.
fn gk15_2d<F: Fn(f64, f64) -> Result<f64> + Sync>(f: &F, r: Rect) -> Result<(f64, f64)> {
    let (cx, hx) = (0.5 * (r.x0 + r.x1), 0.5 * (r.x1 - r.x0));
    let (cy, hy) = (0.5 * (r.y0 + r.y1), 0.5 * (r.y1 - r.y0));
    // Nodes -XGK[0..7], 0, XGK[0..7] mirrored, with Kronrod and Gauss weights.
    let mut nodes = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        nodes[j] = (-XGK[j], WGK[j], g);
        nodes[14 - j] = (XGK[j], WGK[j], g);
    }
    nodes[7] = (0.0, WGK[7], WG[3]);
    let vals = (0..225)
        .into_par_iter()
        .map(|k| {
            let (a, wka, wga) = nodes[k / 15];
            let (b, wkb, wgb) = nodes[k % 15];
            let v = f(cx + hx * a, cy + hy * b)?;
            Ok((v * wka * wkb, v * wga * wgb))
        })
        .collect::<Result<Vec<_>>>()?;
    let (k, g) = vals.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    Ok((k * hx * hy, ((k - g) * hx * hy).abs()))
}

/// Globally adaptive cubature of a real function over a rectangle, starting
/// from an `initial x initial` split and bisecting the worst panel along its
/// longer side until the summed error is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate_2d<F: Fn(f64, f64) -> Result<f64> + Sync>(
    f: F,
    domain: Rect,
    initial: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let m = initial.max(1);
    let dx = (domain.x1 - domain.x0) / m as f64;
    let dy = (domain.y1 - domain.y0) / m as f64;
    let mut panels = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let r = Rect {
                x0: domain.x0 + i as f64 * dx,
                x1: domain.x0 + (i + 1) as f64 * dx,
                y0: domain.y0 + j as f64 * dy,
                y1: domain.y0 + (j + 1) as f64 * dy,
            };
            let (v, e) = gk15_2d(&f, r)?;
            panels.push((r, v, e));
        }
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.1).sum();
        let err: f64 = panels.iter().map(|p| p.2).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::Accuracy(format!("2-D cubature stalled at error {err:.3e} (|I| = {:.3e})", total.abs())));
        }
        let (idx, _) = panels.iter().enumerate().max_by(|x, y| x.1 .2.total_cmp(&y.1 .2)).expect("non-empty");
        let (r, _, _) = panels.swap_remove(idx);
        let halves = if r.x1 - r.x0 >= r.y1 - r.y0 {
            let mid = 0.5 * (r.x0 + r.x1);
            [Rect { x1: mid, ..r }, Rect { x0: mid, ..r }]
        } else {
            let mid = 0.5 * (r.y0 + r.y1);
            [Rect { y1: mid, ..r }, Rect { y0: mid, ..r }]
        };
        for h in halves {
            let (v, e) = gk15_2d(&f, h)?;
            panels.push((h, v, e));
        }
    }
}

/// Nodes and weights of an `n`-point Gauss-Laguerre rule (weight `e^{-x}`).
#[derive(Debug)]
pub struct LaguerreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static RULES: OnceLock<Mutex<HashMap<usize, Arc<LaguerreRule>>>> = OnceLock::new();

/// Cached Gauss-Laguerre rule, built by Golub-Welsch on first request.
pub fn laguerre_rule(n: usize) -> Arc<LaguerreRule> {
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("rule cache poisoned").get(&n) {
        return r.clone();
    }
    let rule = Arc::new(golub_welsch_laguerre(n));
    cache.lock().expect("rule cache poisoned").insert(n, rule.clone());
    rule
}

// Jacobi matrix of the Laguerre weight: diagonal 2k+1, off-diagonal k.
// Implicit QL (tqli) tracking only the first eigenvector components.
fn golub_welsch_laguerre(n: usize) -> LaguerreRule {
    let mut d: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64).collect();
    let mut e: Vec<f64> = (0..n).map(|k| (k + 1) as f64).collect();
    e[n - 1] = 0.0;
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60 * n.max(30), "Golub-Welsch did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    LaguerreRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}
