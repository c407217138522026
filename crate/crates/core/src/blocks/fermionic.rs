use num_complex::Complex64;

use super::BlockValue;
use crate::error::{invalid, Error, Result};
use crate::hyperdual::Scalar;
use crate::model::StructuredEnsemble;
use crate::quad::laguerre_rule;
use crate::specfun::{bessel_i0_scaled, factorial};

/// `(prod m_i!)^{-1} int_0^inf e^{-rho} prod (rho + n a_i)^{m_i} d rho`, exact.
/// Zero when any `m_i < 0`.
pub fn fermionic_poly<T: Scalar>(alpha_zz: &[T], m: &[i64], n: f64) -> T {
    if m.iter().any(|&k| k < 0) {
        return T::constant(Complex64::new(0.0, 0.0));
    }
    let mut poly = vec![T::real(1.0)];
    let mut norm = 1.0;
    for (a, &k) in alpha_zz.iter().zip(m) {
        let shift = *a * n;
        for _ in 0..k {
            let mut next = vec![T::real(0.0); poly.len() + 1];
            for (j, c) in poly.iter().enumerate() {
                next[j] = next[j] + *c * shift;
                next[j + 1] = next[j + 1] + *c;
            }
            poly = next;
        }
        norm *= factorial(k as usize);
    }
    let mut acc = T::real(0.0);
    let mut kfact = 1.0;
    for (k, c) in poly.iter().enumerate() {
        if k > 0 {
            kfact *= k as f64;
        }
        acc = acc + *c * kfact;
    }
    acc * (1.0 / norm)
}

fn check_len(ensemble: &StructuredEnsemble, m: &[i64]) -> Result<()> {
    if m.len() != ensemble.groups().len() {
        return invalid(format!("multiplicity vector has {} entries, ensemble has {} groups", m.len(), ensemble.groups().len()));
    }
    Ok(())
}

fn alpha_zz(ensemble: &StructuredEnsemble, z: Complex64) -> Vec<Complex64> {
    ensemble.groups().iter().map(|g| g.alpha(z.conj(), z)).collect()
}

/// Regularized fermionic block at `w = 0`.
pub fn fermionic_reg(ensemble: &StructuredEnsemble, z: Complex64, m: &[i64]) -> Result<BlockValue> {
    check_len(ensemble, m)?;
    let v = fermionic_poly(&alpha_zz(ensemble, z), m, ensemble.n_inv_var());
    Ok(BlockValue { value: v, truncation_order: 0, max_pole_order: 0 })
}

/// Fermionic block with regulator `|w| > 0`, by Gauss-Laguerre quadrature.
pub fn fermionic_unreg(ensemble: &StructuredEnsemble, z: Complex64, w_mod: f64, m: &[i64]) -> Result<BlockValue> {
    check_len(ensemble, m)?;
    if !(w_mod >= 0.0) || !w_mod.is_finite() {
        return invalid(format!("w_mod must be finite and >= 0, got {w_mod}"));
    }
    if m.iter().any(|&k| k < 0) {
        return Ok(BlockValue { value: Complex64::new(0.0, 0.0), truncation_order: 0, max_pole_order: 0 });
    }
    if w_mod == 0.0 {
        return fermionic_reg(ensemble, z, m);
    }
    let n = ensemble.n_inv_var();
    let shifts: Vec<Complex64> = alpha_zz(ensemble, z).iter().map(|a| a * n).collect();
    let norm: f64 = m.iter().map(|&k| factorial(k as usize)).product();
    let a = n * w_mod * w_mod;
    let integrate = |nodes: usize| -> Complex64 {
        let rule = laguerre_rule(nodes);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            if w == 0.0 {
                continue;
            }
            let arg = 2.0 * (a * x).sqrt();
            let weight = bessel_i0_scaled(arg) * (arg - a).exp();
            let poly: Complex64 = shifts.iter().zip(m).map(|(s, &k)| (x + s).powu(k as u32)).product();
            acc += poly * (w * weight);
        }
        acc / norm
    };
    let mut nodes = 32;
    let mut prev = integrate(nodes);
    while nodes < 4096 {
        nodes *= 2;
        let cur = integrate(nodes);
        if (cur - prev).norm() <= 1e-10 * cur.norm() {
            return Ok(BlockValue { value: cur, truncation_order: nodes, max_pole_order: 0 });
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!("fermionic quadrature did not settle with 4096 nodes (|w| = {w_mod})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::laguerre;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn one_group_first_moment() {
        let a = c(0.7, 0.0);
        assert!((fermionic_poly(&[a], &[1], 3.0) - (1.0 + 3.0 * a)).norm() < 1e-15);
        assert_eq!(fermionic_poly(&[a, a], &[2, -1], 3.0), c(0.0, 0.0));
    }

    #[test]
    fn ginibre_truncated_exponential() {
        let n = 4.0;
        let z = c(0.6, -0.3);
        let x = n * z.norm_sqr();
        let ens = StructuredEnsemble::ginibre(7, n).unwrap();
        let mut prev = fermionic_reg(&ens, z, &[0]).unwrap().value;
        assert!((prev - 1.0).norm() < 1e-15);
        for k in 1..=7i64 {
            let cur = fermionic_reg(&ens, z, &[k]).unwrap().value;
            let step = x.powi(k as i32) / factorial(k as usize);
            assert!((cur - prev - step).norm() < 1e-13 * cur.norm(), "k={k}");
            prev = cur;
        }
    }

    #[test]
    fn regulator_limits() {
        let ens = StructuredEnsemble::ginibre(2, 2.0).unwrap();
        let a = fermionic_unreg(&ens, c(0.0, 0.0), 1.0, &[1]).unwrap().value;
        assert!((a.re - laguerre(1, c(-2.0, 0.0)).re).abs() < 1e-9);
        let b = fermionic_unreg(&ens, c(0.0, 0.0), 0.8, &[0]).unwrap().value;
        assert!((b.re - 1.0).abs() < 1e-9);
        for m in 0..5i64 {
            let w = 0.7;
            let got = fermionic_unreg(&ens, c(0.0, 0.0), w, &[m]).unwrap().value.re;
            let want = laguerre(m as usize, c(-2.0 * w * w, 0.0)).re;
            assert!((got / want - 1.0).abs() < 1e-9, "m={m}");
        }
        let z = c(0.3, 0.2);
        let r = fermionic_reg(&ens, z, &[2]).unwrap().value;
        assert_eq!(fermionic_unreg(&ens, z, 0.0, &[2]).unwrap().value, r);
    }

    #[test]
    fn real_sources_give_conjugate_symmetric_blocks() {
        let ens = StructuredEnsemble::from_runs(
            &[(c(-1.0, 0.0), 2), (c(0.5, 0.0), 2)],
            &[(1.0, 2), (0.8, 2)],
            &[(1.0, 4)],
            None,
        )
        .unwrap();
        for z in [c(0.3, 0.7), c(-1.2, -0.4), c(2.0, 1.5)] {
            let a = fermionic_reg(&ens, z, &[2, 1]).unwrap().value;
            let b = fermionic_reg(&ens, z.conj(), &[2, 1]).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-14 * a.norm());
        }
    }
}
