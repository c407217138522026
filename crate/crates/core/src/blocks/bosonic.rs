use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;

use super::residue::ResidueEngine;
use super::BlockValue;
use crate::error::{invalid, Result};
use crate::hyperdual::Scalar;
use crate::model::StructuredEnsemble;
use crate::specfun::{factorial, tricomi_u, HarmonicNumerator, JetSource};

static HARMONIC: HarmonicNumerator = HarmonicNumerator;

/// Bosonic blocks `-prod (m_i - 1)! D(m)` for a fixed set of poles
/// `-n alpha_i`, where `D` is the residue sum of the numerator.
/// Derivatives with respect to the `alpha_i` come from raising pole orders.
pub struct BosonicSystem<'a> {
    n: f64,
    engine: ResidueEngine<'a>,
    cache: RefCell<HashMap<Vec<u32>, Complex64>>,
}

impl<'a> BosonicSystem<'a> {
    pub fn new(alpha_vv: &[Complex64], n: f64, numerator: &'a dyn JetSource) -> Self {
        let nodes = alpha_vv.iter().map(|a| -a * n).collect();
        BosonicSystem { n, engine: ResidueEngine::new(nodes, numerator), cache: RefCell::new(HashMap::new()) }
    }

    pub fn harmonic(alpha_vv: &[Complex64], n: f64) -> BosonicSystem<'static> {
        BosonicSystem::new(alpha_vv, n, &HARMONIC)
    }

    pub fn engine(&self) -> &ResidueEngine<'a> {
        &self.engine
    }

    fn d(&self, orders: &[u32]) -> Result<Complex64> {
        if let Some(v) = self.cache.borrow().get(orders) {
            return Ok(*v);
        }
        let v = self.engine.eval(orders)?;
        self.cache.borrow_mut().insert(orders.to_vec(), v);
        Ok(v)
    }

    /// Block value with the pole positions perturbed along `alpha`.
    pub fn block<T: Scalar>(&self, alpha: &[T], m: &[i64]) -> Result<T> {
        if m.len() != alpha.len() || m.len() != self.engine.nodes().len() {
            return invalid(format!("bosonic block: {} orders for {} poles", m.len(), self.engine.nodes().len()));
        }
        if m.iter().any(|&k| k < 0) {
            return Ok(T::real(0.0));
        }
        let orders: Vec<u32> = m.iter().map(|&k| k as u32).collect();
        let pref = -orders.iter().filter(|&&k| k > 0).map(|&k| factorial(k as usize - 1)).product::<f64>();
        let value = self.d(&orders)? * pref;
        let n = self.n;
        let mut err = None;
        let mut raised = |i: usize, j: Option<usize>| -> Complex64 {
            let mut o = orders.clone();
            o[i] += 1;
            if let Some(j) = j {
                o[j] += 1;
            }
            match self.d(&o) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let out = {
            let raised = std::cell::RefCell::new(&mut raised);
            let mut grad = |i: usize| -> Complex64 {
                if orders[i] == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                (raised.borrow_mut())(i, None) * (pref * -n * orders[i] as f64)
            };
            let mut hess = |i: usize, j: usize| -> Complex64 {
                if orders[i] == 0 || orders[j] == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let f = if i == j {
                    orders[i] as f64 * (orders[i] + 1) as f64
                } else {
                    orders[i] as f64 * orders[j] as f64
                };
                (raised.borrow_mut())(i, Some(j)) * (pref * n * n * f)
            };
            T::compose(alpha, value, &mut grad, &mut hess)
        };
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

/// Regularized bosonic block at `u = 0`. Poles closer than
/// `1e-12 (1 + |alpha|)` are merged into one pole of summed order.
pub fn bosonic_reg(ensemble: &StructuredEnsemble, v: Complex64, m: &[i64]) -> Result<BlockValue> {
    if m.len() != ensemble.groups().len() {
        return invalid(format!("multiplicity vector has {} entries, ensemble has {} groups", m.len(), ensemble.groups().len()));
    }
    if m.iter().any(|&k| k < 0) {
        return invalid("bosonic block needs non-negative multiplicities");
    }
    let alphas: Vec<Complex64> = ensemble.groups().iter().map(|g| g.alpha(v.conj(), v)).collect();
    let mut merged: Vec<(Complex64, u32)> = Vec::new();
    for (a, &k) in alphas.iter().zip(m) {
        if k == 0 {
            continue;
        }
        match merged.iter_mut().find(|(b, _)| (a - b).norm() < 1e-12 * (1.0 + a.norm())) {
            Some(slot) => slot.1 += k as u32,
            None => merged.push((*a, k as u32)),
        }
    }
    let pref = -m.iter().filter(|&&k| k > 0).map(|&k| factorial(k as usize - 1)).product::<f64>();
    if merged.is_empty() {
        return invalid("bosonic block needs at least one positive multiplicity");
    }
    let n = ensemble.n_inv_var();
    let nodes: Vec<Complex64> = merged.iter().map(|(a, _)| -a * n).collect();
    let orders: Vec<u32> = merged.iter().map(|p| p.1).collect();
    let engine = ResidueEngine::new(nodes, &HARMONIC);
    let value = engine.eval(&orders)? * pref;
    Ok(BlockValue {
        value,
        truncation_order: engine.max_series_terms(),
        max_pole_order: orders.iter().copied().max().unwrap_or(0) as usize,
    })
}

/// `(m - 1)! U(m, 1, n |u|^2)`: the unregularized single-group bosonic block
/// with `S = 0` at `v = 0`.
pub fn chgue_bosonic_check(m: u32, u_mod: f64, n_inv_var: f64) -> Result<f64> {
    if m == 0 {
        return invalid("chgue_bosonic_check needs m >= 1");
    }
    Ok(factorial(m as usize - 1) * tricomi_u(m as i64, 1, n_inv_var * u_mod * u_mod)?)
}
