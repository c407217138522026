//! Scalars for the generating-function evaluators.
//!
//! The evaluators are written once over [`Scalar`]. Plain [`Complex64`]
//! gives values; [`HyperDual`] carries two independent infinitesimals
//! `e1`, `e2` with `e1^2 = e2^2 = 0`, so the `e1 e2` coefficient of a result
//! is an exact mixed second derivative. The density pipeline seeds `e1` on
//! the conjugate slots and `e2` on `v`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Send
    + Sync
    + std::fmt::Debug
{
    fn constant(c: Complex64) -> Self;

    fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    fn value(&self) -> Complex64;

    fn sqrt(self) -> Self;

    fn powi(self, k: u32) -> Self {
        let mut out = Self::real(1.0);
        for _ in 0..k {
            out = out * self;
        }
        out
    }

    /// Lifts a smooth function of several arguments. `value` is `f` at the
    /// base point; `grad(i)` and `hess(i, j)` are its first and second
    /// partials there and are only called when the arguments carry
    /// infinitesimal parts.
    fn compose(
        args: &[Self],
        value: Complex64,
        grad: &mut dyn FnMut(usize) -> Complex64,
        hess: &mut dyn FnMut(usize, usize) -> Complex64,
    ) -> Self;

    /// Single-argument form of [`Scalar::compose`].
    fn lift(
        self,
        value: Complex64,
        d1: impl FnOnce() -> Complex64,
        d2: impl FnOnce() -> Complex64,
    ) -> Self {
        let mut d1 = Some(d1);
        let mut d2 = Some(d2);
        let mut g1 = None;
        let mut g2 = None;
        Self::compose(
            &[self],
            value,
            &mut |_| *g1.get_or_insert_with(|| (d1.take().unwrap())()),
            &mut |_, _| *g2.get_or_insert_with(|| (d2.take().unwrap())()),
        )
    }
}

impl Scalar for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }

    fn value(&self) -> Complex64 {
        *self
    }

    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }

    fn compose(
        _args: &[Self],
        value: Complex64,
        _grad: &mut dyn FnMut(usize) -> Complex64,
        _hess: &mut dyn FnMut(usize, usize) -> Complex64,
    ) -> Self {
        value
    }
}

/// `re + e1 * d1 + e2 * d2 + e1 e2 * d12` over complex coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual {
    pub re: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d12: Complex64,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl HyperDual {
    pub fn new(re: Complex64, d1: Complex64, d2: Complex64, d12: Complex64) -> Self {
        Self { re, d1, d2, d12 }
    }

    /// `x + e1`.
    pub fn seed1(x: Complex64) -> Self {
        Self::new(x, Complex64::new(1.0, 0.0), ZERO, ZERO)
    }

    /// `x + e2`.
    pub fn seed2(x: Complex64) -> Self {
        Self::new(x, ZERO, Complex64::new(1.0, 0.0), ZERO)
    }

    fn is_constant(&self) -> bool {
        self.d1 == ZERO && self.d2 == ZERO && self.d12 == ZERO
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.d1 + o.d1, self.d2 + o.d2, self.d12 + o.d12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.d1 - o.d1, self.d2 - o.d2, self.d12 - o.d12)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.d1, -self.d2, -self.d12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            self.re * o.d1 + self.d1 * o.re,
            self.re * o.d2 + self.d2 * o.re,
            self.re * o.d12 + self.d12 * o.re + self.d1 * o.d2 + self.d2 * o.d1,
        )
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.re * k, self.d1 * k, self.d2 * k, self.d12 * k)
    }
}

impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let recip = o.lift(inv, || -inv * inv, || 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Scalar for HyperDual {
    fn constant(c: Complex64) -> Self {
        Self::new(c, ZERO, ZERO, ZERO)
    }

    fn value(&self) -> Complex64 {
        self.re
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.lift(s, || 0.5 / s, || -0.25 / (s * s * s))
    }

    fn compose(
        args: &[Self],
        value: Complex64,
        grad: &mut dyn FnMut(usize) -> Complex64,
        hess: &mut dyn FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut out = Self::constant(value);
        for (i, a) in args.iter().enumerate() {
            if a.is_constant() {
                continue;
            }
            let g = grad(i);
            out.d1 += g * a.d1;
            out.d2 += g * a.d2;
            out.d12 += g * a.d12;
        }
        for (i, a) in args.iter().enumerate() {
            if a.d1 == ZERO {
                continue;
            }
            for (j, b) in args.iter().enumerate() {
                if b.d2 == ZERO {
                    continue;
                }
                out.d12 += hess(i, j) * a.d1 * b.d2;
            }
        }
        out
    }
}
