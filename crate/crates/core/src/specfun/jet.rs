use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Truncated Taylor series `sum_k c_k (p - center)^k`, `k <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    center: Complex64,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn new(center: Complex64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("jet needs at least one coefficient");
        }
        Ok(Jet { center, coeffs })
    }

    pub fn constant(center: Complex64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { center, coeffs }
    }

    /// The identity function `p` expanded at `center`.
    pub fn variable(center: Complex64, order: usize) -> Self {
        let mut j = Jet::constant(center, center, order);
        if order >= 1 {
            j.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    fn check(&self, other: &Jet) -> Result<()> {
        if self.center != other.center || self.order() != other.order() {
            return invalid(format!(
                "jet mismatch: center {} order {} vs center {} order {}",
                self.center,
                self.order(),
                other.center,
                other.order()
            ));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(Jet { center: self.center, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(Jet { center: self.center, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(Jet { center: self.center, coeffs: mul_truncated(&self.coeffs, &other.coeffs, self.order()) })
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet { center: self.center, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn reciprocal(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if c0 == Complex64::new(0.0, 0.0) {
            return Err(Error::SingularJet);
        }
        let inv0 = 1.0 / c0;
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        out[0] = inv0;
        for k in 1..out.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * out[k - j];
            }
            out[k] = -acc * inv0;
        }
        Ok(Jet { center: self.center, coeffs: out })
    }

    /// Re-expand `f(a + b q)` as a jet in `q` around `q0` where
    /// `a + b q0 = center`.
    pub fn compose_linear(&self, b: Complex64, q0: Complex64) -> Jet {
        let mut scale = Complex64::new(1.0, 0.0);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * scale;
                scale *= b;
                v
            })
            .collect();
        Jet { center: q0, coeffs }
    }

    /// Evaluate the truncated series at `p`.
    pub fn eval(&self, p: Complex64) -> Complex64 {
        let t = p - self.center;
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }
}

/// Truncated product of two coefficient sequences up to degree `order`.
pub(crate) fn mul_truncated(a: &[Complex64], b: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        if *ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet add mismatch")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet sub mismatch")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet mul mismatch")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn jet(cs: &[f64]) -> Jet {
        Jet::new(c(0.0), cs.iter().map(|&x| c(x)).collect()).unwrap()
    }

    #[test]
    fn product_and_reciprocal() {
        let p = &jet(&[1.0, 1.0, 0.0]) * &jet(&[1.0, -1.0, 0.0]);
        assert_eq!(p.coeffs(), &[c(1.0), c(0.0), c(-1.0)]);
        let r = jet(&[2.0, 1.0]).reciprocal().unwrap();
        assert_eq!(r.coeffs(), &[c(0.5), c(-0.25)]);
        assert!(matches!(jet(&[0.0, 1.0]).reciprocal(), Err(Error::SingularJet)));
    }

    #[test]
    fn mismatched_jets_are_rejected() {
        let a = jet(&[1.0, 2.0]);
        let b = Jet::new(c(1.0), vec![c(1.0), c(2.0)]).unwrap();
        assert!(a.try_mul(&b).is_err());
        assert!(a.try_add(&jet(&[1.0])).is_err());
    }

    fn arb_jet() -> impl Strategy<Value = Jet> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6).prop_map(|v| {
            let mut cs: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            cs[0] += Complex64::new(3.0, 0.0);
            Jet::new(c(0.0), cs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mul_reciprocal_round_trip(a in arb_jet(), b in arb_jet()) {
            let back = &(&a * &b) * &b.reciprocal().unwrap();
            for k in 0..=a.order() {
                prop_assert!((back.coeff(k) - a.coeff(k)).norm() < 1e-12 * (1.0 + a.coeff(k).norm()));
            }
        }

        #[test]
        fn mul_commutative_associative(a in arb_jet(), b in arb_jet(), d in arb_jet()) {
            let ab = &a * &b;
            let ba = &b * &a;
            let l = &ab * &d;
            let r = &a * &(&b * &d);
            for k in 0..=a.order() {
                prop_assert!((ab.coeff(k) - ba.coeff(k)).norm() < 1e-13 * (1.0 + ab.coeff(k).norm()));
                prop_assert!((l.coeff(k) - r.coeff(k)).norm() < 1e-12 * (1.0 + l.coeff(k).norm()));
            }
        }
    }
}
