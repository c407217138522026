//! Dense complex matrices: eigenvalues by Hessenberg reduction and shifted
//! QR, and LU with partial pivoting.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const MAX_DIM: usize = 256;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { n, data }
    }

    /// Builds from row-major entries; rejects non-square or non-finite input.
    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("expected {} entries for a {n}x{n} matrix, got {}", n * n, data.len()));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("matrix has non-finite entries");
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::new(self)
    }

    pub fn determinant(&self) -> Complex64 {
        match self.lu() {
            Ok(lu) => lu.determinant(),
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Inverse together with the 1-norm condition number.
    pub fn inverse(&self) -> Result<(ComplexMatrix, f64)> {
        let inv = self.lu()?.inverse();
        let cond = self.norm_one() * inv.norm_one();
        Ok((inv, cond))
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eigenvalues(self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

/// `PA = LU` with unit lower `L` stored below the diagonal.
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn new(m: &ComplexMatrix) -> Result<Self> {
        let n = m.n;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&a, &b| lu[(a, k)].norm().total_cmp(&lu[(b, k)].norm())).unwrap();
            if lu[(p, k)].norm() == 0.0 {
                return Err(Error::NearSingular(f64::INFINITY));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn determinant(&self) -> Complex64 {
        (0..self.lu.n).fold(Complex64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.lu.n;
        let mut inv = ComplexMatrix::zeros(n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

/// Unitary reduction to upper Hessenberg form by Householder reflections.
fn hessenberg(h: &mut ComplexMatrix) {
    let n = h.n;
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * norm;
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= vnorm);
        // H <- (I - 2vv*) H
        for j in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vi * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| h[(i, k + 1 + t)] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// All eigenvalues with multiplicity, in the order they deflate.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = m.n;
    if n == 0 || n > MAX_DIM {
        return invalid(format!("eigenvalues: dimension must lie in 1..={MAX_DIM}, got {n}"));
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    let mut out = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut rot: Vec<(Complex64, Complex64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            out.push(h[(0, 0)]);
            break;
        }
        // Find the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * scale || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 40 * n {
            return Err(Error::Convergence(format!("QR iteration stalled with {} eigenvalues left", hi + 1)));
        }
        let mu = if iter % 11 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        rot.clear();
        for k in lo..hi {
            let a = h[(k, k)];
            let b = h[(k + 1, k)];
            let r = a.norm().hypot(b.norm());
            let (c, s) = if r == 0.0 { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) } else { (a / r, b / r) };
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c.conj() * x + s.conj() * y;
                h[(k + 1, j)] = -s * x + c * y;
            }
            rot.push((c, s));
        }
        for (t, &(c, s)) in rot.iter().enumerate() {
            let k = lo + t;
            for i in lo..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s;
                h[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::sample_ginibre;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Greedy multiset matching; returns the worst pair distance.
    fn match_sets(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut left: Vec<Complex64> = b.to_vec();
        let mut worst: f64 = 0.0;
        for x in a {
            let (k, d) = left.iter().enumerate().map(|(k, y)| (k, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
            worst = worst.max(d);
            left.swap_remove(k);
        }
        worst
    }

    // Leverrier-Faddeev: coefficients of det(lambda I - M), leading first.
    fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
        let n = m.dim();
        let mut coeffs = vec![c(1.0, 0.0)];
        let mut mk = ComplexMatrix::zeros(n);
        for k in 1..=n {
            let mut next = m * &mk;
            for i in 0..n {
                next[(i, i)] += coeffs[k - 1];
            }
            let am = m * &next;
            coeffs.push(-am.trace() / k as f64);
            mk = next;
        }
        coeffs
    }

    fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
        let g = sample_ginibre(n, 1.0, seed);
        let mut q = ComplexMatrix::zeros(n);
        for j in 0..n {
            let mut v: Vec<Complex64> = (0..n).map(|i| g[(i, j)]).collect();
            for p in 0..j {
                let dot: Complex64 = (0..n).map(|i| q[(i, p)].conj() * v[i]).sum();
                for i in 0..n {
                    v[i] -= dot * q[(i, p)];
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                q[(i, j)] = v[i] / norm;
            }
        }
        q
    }

    #[test]
    fn diagonal_matrix() {
        let d = [c(1.0, 1.0), c(-2.0, 0.0), c(0.0, 0.5)];
        let ev = ComplexMatrix::from_diagonal(&d).eigenvalues().unwrap();
        assert!(match_sets(&ev, &d) < 1e-14);
    }

    #[test]
    fn nilpotent_block() {
        let m = ComplexMatrix::from_row_major(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let ev = m.eigenvalues().unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn characteristic_polynomial_vanishes() {
        for seed in 0..5 {
            let m = sample_ginibre(6, 0.5, seed);
            let p = char_poly(&m);
            let scale = m.norm_max().powi(6);
            for lam in m.eigenvalues().unwrap() {
                let val = p.iter().fold(c(0.0, 0.0), |acc, a| acc * lam + a);
                assert!(val.norm() <= 1e-8 * scale, "|p(lambda)| = {}", val.norm());
            }
        }
    }

    #[test]
    fn lu_inverse_and_determinant() {
        let m = sample_ginibre(5, 1.0, 3);
        let (inv, cond) = m.inverse().unwrap();
        let eye = &m * &inv;
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)] - want).norm() < 1e-12);
            }
        }
        assert!(cond >= 1.0);
        let upper = ComplexMatrix::from_fn(3, |i, j| if j >= i { c(1.0 + i as f64, j as f64) } else { c(0.0, 0.0) });
        assert!((upper.determinant() - c(1.0, 0.0) * c(2.0, 1.0) * c(3.0, 2.0)).norm() < 1e-13);
        assert!(ComplexMatrix::zeros(3).inverse().is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eigenvalues(&ComplexMatrix::zeros(0)).is_err());
        assert!(ComplexMatrix::from_row_major(2, vec![c(f64::NAN, 0.0); 4]).is_err());
        assert!(ComplexMatrix::from_row_major(2, vec![c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn large_matrix_converges() {
        let m = sample_ginibre(128, 128.0, 11);
        let ev = m.eigenvalues().unwrap();
        let tr: Complex64 = ev.iter().sum();
        assert!((tr - m.trace()).norm() < 1e-10 * 128.0 * m.norm_max());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_and_determinant(n in 1usize..=8, seed in any::<u64>(), shift in -3.0f64..3.0) {
            let mut m = sample_ginibre(n, 1.0, seed);
            for i in 0..n {
                m[(i, i)] += c(shift, 0.5 * shift);
            }
            let ev = m.eigenvalues().unwrap();
            prop_assert_eq!(ev.len(), n);
            let tr: Complex64 = ev.iter().sum();
            prop_assert!((tr - m.trace()).norm() <= 1e-10 * n as f64 * m.norm_max());
            let prod = ev.iter().fold(c(1.0, 0.0), |a, b| a * b);
            let det = m.determinant();
            prop_assert!((prod - det).norm() <= 1e-8 * det.norm().max(1e-300), "{} vs {}", prod, det);
        }

        #[test]
        fn similarity_invariance(n in 2usize..=8, seed in any::<u64>()) {
            let m = sample_ginibre(n, 1.0, seed);
            let u = random_unitary(n, seed.wrapping_add(1));
            let conj = &(&u.adjoint() * &m) * &u;
            let a = m.eigenvalues().unwrap();
            let b = conj.eigenvalues().unwrap();
            prop_assert!(match_sets(&a, &b) < 1e-8);
        }

        #[test]
        fn repeated_eigenvalues(n in 2usize..=6, seed in any::<u64>()) {
            // Jordan-free repeated spectrum: U diag(1,1,...,2) U*.
            let u = random_unitary(n, seed);
            let mut d = vec![c(1.0, 0.0); n];
            d[n - 1] = c(2.0, 0.0);
            let m = &(&u * &ComplexMatrix::from_diagonal(&d)) * &u.adjoint();
            let ev = m.eigenvalues().unwrap();
            prop_assert!(match_sets(&ev, &d) < 1e-8);
        }
    }

}
