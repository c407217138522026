//! Sums of residues `(1/2 pi i) oint g(p) / prod_j (p - p_j)^{o_j} dp` for
//! entire `g`, i.e. confluent divided differences of `g`.
//!
//! Nodes that sit close together (relative to their distance from the
//! origin) are grouped and handled by one series around the group centre,
//! which stays accurate when poles nearly collide.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::specfun::jet::mul_truncated;
use crate::specfun::{binomial, Jet, JetSource};

/// Distinct pole locations with their orders.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSystem {
    poles: Vec<(Complex64, u32)>,
}

impl PoleSystem {
    pub fn new(poles: Vec<(Complex64, u32)>) -> Result<Self> {
        if poles.is_empty() {
            return invalid("pole system needs at least one pole");
        }
        for (i, &(p, o)) in poles.iter().enumerate() {
            if o == 0 {
                return invalid(format!("pole {i} at {p} has order 0"));
            }
            if !(p.re.is_finite() && p.im.is_finite()) {
                return invalid(format!("pole {i} is not finite"));
            }
            if poles[..i].iter().any(|&(q, _)| q == p) {
                return invalid(format!("coincident poles at {p}; merge their orders first"));
            }
        }
        Ok(PoleSystem { poles })
    }

    pub fn poles(&self) -> &[(Complex64, u32)] {
        &self.poles
    }

    pub fn total_order(&self) -> u32 {
        self.poles.iter().map(|p| p.1).sum()
    }
}

/// Sum of all residues of `numerator / prod (p - p_j)^{o_j}`.
pub fn residue_sum(system: &PoleSystem, numerator: &dyn JetSource) -> Result<Complex64> {
    let nodes: Vec<Complex64> = system.poles.iter().map(|p| p.0).collect();
    let orders: Vec<u32> = system.poles.iter().map(|p| p.1).collect();
    ResidueEngine::new(nodes, numerator).eval(&orders)
}

#[derive(Debug)]
struct Cluster {
    members: Vec<usize>,
    center: Complex64,
}

/// Reusable evaluator for many order vectors over one fixed node set.
pub struct ResidueEngine<'a> {
    nodes: Vec<Complex64>,
    clusters: Vec<Cluster>,
    numerator: &'a dyn JetSource,
    jets: RefCell<Vec<Option<Jet>>>,
    merged: RefCell<Option<Box<ResidueEngine<'a>>>>,
    max_series: RefCell<usize>,
}

const SERIES_CAP: usize = 400;

fn link(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 0.5 * a.norm().min(b.norm()).max(4.0)
}

impl<'a> ResidueEngine<'a> {
    pub fn new(nodes: Vec<Complex64>, numerator: &'a dyn JetSource) -> Self {
        // Single-linkage grouping.
        let n = nodes.len();
        let mut label: Vec<usize> = (0..n).collect();
        fn root(label: &mut [usize], mut i: usize) -> usize {
            while label[i] != i {
                label[i] = label[label[i]];
                i = label[i];
            }
            i
        }
        for i in 0..n {
            for j in 0..i {
                if link(nodes[i], nodes[j]) {
                    let (a, b) = (root(&mut label, i), root(&mut label, j));
                    if a != b {
                        label[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let r = root(&mut label, i);
            if slot[r] == usize::MAX {
                slot[r] = clusters.len();
                clusters.push(Cluster { members: Vec::new(), center: Complex64::new(0.0, 0.0) });
            }
            clusters[slot[r]].members.push(i);
        }
        for c in &mut clusters {
            c.center = c.members.iter().map(|&i| nodes[i]).sum::<Complex64>() / c.members.len() as f64;
        }
        Self::with_clusters(nodes, clusters, numerator)
    }

    fn with_clusters(nodes: Vec<Complex64>, clusters: Vec<Cluster>, numerator: &'a dyn JetSource) -> Self {
        let k = clusters.len();
        ResidueEngine {
            nodes,
            clusters,
            numerator,
            jets: RefCell::new(vec![None; k]),
            merged: RefCell::new(None),
            max_series: RefCell::new(0),
        }
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Largest number of series terms used by any evaluation so far.
    pub fn max_series_terms(&self) -> usize {
        *self.max_series.borrow()
    }

    fn numerator_jet(&self, idx: usize, order: usize) -> Result<Jet> {
        let mut jets = self.jets.borrow_mut();
        if let Some(j) = &jets[idx] {
            if j.order() >= order {
                return Ok(j.clone());
            }
        }
        let have = jets[idx].as_ref().map_or(0, |j| j.order());
        let want = order.max(2 * have).max(8);
        let j = self.numerator.jet(self.clusters[idx].center, want)?;
        jets[idx] = Some(j.clone());
        Ok(j)
    }

    /// `(1/2 pi i) oint g / prod (p - node_j)^{orders_j}`; zero orders are ignored.
    pub fn eval(&self, orders: &[u32]) -> Result<Complex64> {
        if orders.len() != self.nodes.len() {
            return invalid(format!("{} orders for {} nodes", orders.len(), self.nodes.len()));
        }
        if orders.iter().all(|&o| o == 0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for ci in 0..self.clusters.len() {
            match self.cluster_term(ci, orders) {
                Ok(v) => total += v,
                Err(Error::Convergence(msg)) if self.clusters.len() > 1 => {
                    return self.merged_engine().eval(orders).map_err(|e| match e {
                        Error::Convergence(m2) => Error::Convergence(format!("{msg}; merged retry: {m2}")),
                        other => other,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(total)
    }

    fn merged_engine(&self) -> std::cell::Ref<'_, ResidueEngine<'a>> {
        if self.merged.borrow().is_none() {
            let center = self.nodes.iter().sum::<Complex64>() / self.nodes.len() as f64;
            let cl = Cluster { members: (0..self.nodes.len()).collect(), center };
            let eng = ResidueEngine::with_clusters(self.nodes.clone(), vec![cl], self.numerator);
            *self.merged.borrow_mut() = Some(Box::new(eng));
        }
        std::cell::Ref::map(self.merged.borrow(), |m| m.as_deref().expect("just set"))
    }

    fn cluster_term(&self, ci: usize, orders: &[u32]) -> Result<Complex64> {
        let cl = &self.clusters[ci];
        let c = cl.center;
        let k: usize = cl.members.iter().map(|&i| orders[i] as usize).sum();
        if k == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let offsets: Vec<(Complex64, u32)> =
            cl.members.iter().filter(|&&i| orders[i] > 0).map(|&i| (self.nodes[i] - c, orders[i])).collect();
        let spread = offsets.iter().map(|o| o.0.norm()).fold(0.0, f64::max);
        let externals: Vec<(Complex64, u32)> = (0..self.nodes.len())
            .filter(|i| orders[*i] > 0 && !cl.members.contains(i))
            .map(|i| (self.nodes[i], orders[i]))
            .collect();
        let reach = externals.iter().map(|e| (c - e.0).norm()).fold(c.norm().max(4.0), f64::min);
        let series = if spread == 0.0 {
            0
        } else {
            let q = spread / reach;
            if q >= 0.95 {
                return Err(Error::Convergence(format!("pole group at {c} too wide (ratio {q:.3})")));
            }
            (((1e-18f64).ln() / q.ln()).ceil() as usize + k).min(SERIES_CAP)
        };
        {
            let mut m = self.max_series.borrow_mut();
            *m = (*m).max(series);
        }
        let len = k - 1 + series;
        let g = self.numerator_jet(ci, len)?;
        let mut b: Vec<Complex64> = g.coeffs()[..=len].to_vec();
        for &(p, o) in &externals {
            let d = c - p;
            let inv = 1.0 / d;
            let base = inv.powu(o);
            let mut f = Vec::with_capacity(len + 1);
            let mut pw = base;
            for i in 0..=len {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                f.push(pw * binomial(o as usize + i - 1, i) * sign);
                pw *= inv;
            }
            b = mul_truncated(&b, &f, len);
        }
        // Complete homogeneous symmetric polynomials of the offsets.
        let mut h = vec![Complex64::new(0.0, 0.0); series + 1];
        h[0] = Complex64::new(1.0, 0.0);
        for &(t, o) in &offsets {
            for _ in 0..o {
                for s in 1..=series {
                    let prev = h[s - 1];
                    h[s] += t * prev;
                }
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut tail = 0.0f64;
        for s in 0..=series {
            let term = b[k - 1 + s] * h[s];
            sum += term;
            if s + 3 > series {
                tail = tail.max(term.norm());
            }
        }
        if series > 0 && tail > 1e-14 * sum.norm().max(f64::MIN_POSITIVE) && series == SERIES_CAP {
            return Err(Error::Convergence(format!(
                "pole group at {c} did not converge in {SERIES_CAP} terms (tail {tail:.2e}, sum {:.2e})",
                sum.norm()
            )));
        }
        Ok(sum)
    }
}
