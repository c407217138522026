//! Ensemble descriptions for `M = S + L X R` with diagonal structure.
//!
//! Diagonal matrices are carried in run-length form: a list of `(value,
//! multiplicity)` pairs. The analytic formulas only ever see the merged
//! groups, never an `N x N` matrix.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::hyperdual::Scalar;

/// Ordered list of positive group sizes `(n_1, ..., n_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityVector(Vec<usize>);

impl MultiplicityVector {
    pub fn new(groups: Vec<usize>) -> Result<Self> {
        if groups.is_empty() {
            return invalid("multiplicity vector must have at least one group");
        }
        if groups.iter().any(|&g| g == 0) {
            return invalid("multiplicities must be positive");
        }
        Ok(Self(groups))
    }

    pub fn groups(&self) -> &[usize] {
        &self.0
    }

    /// Number of groups, `d(n)`.
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Total size, `|n|`.
    pub fn length(&self) -> usize {
        self.0.iter().sum()
    }

    /// Interior group boundaries as cumulative positions in `1..N`.
    pub fn boundaries(&self) -> BTreeSet<usize> {
        let mut acc = 0;
        let mut out = BTreeSet::new();
        for &g in &self.0[..self.0.len() - 1] {
            acc += g;
            out.insert(acc);
        }
        out
    }

    fn from_boundaries(bounds: &BTreeSet<usize>, total: usize) -> Self {
        let mut groups = Vec::with_capacity(bounds.len() + 1);
        let mut prev = 0;
        for &b in bounds.iter().chain(std::iter::once(&total)) {
            groups.push(b - prev);
            prev = b;
        }
        Self(groups)
    }
}

impl fmt::Display for MultiplicityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Coarsest common refinement of three multiplicity vectors: a boundary
/// wherever at least one input has one.
pub fn merge_multiplicities(
    u: &MultiplicityVector,
    v: &MultiplicityVector,
    w: &MultiplicityVector,
) -> Result<MultiplicityVector> {
    let n = u.length();
    if v.length() != n || w.length() != n {
        return invalid(format!(
            "multiplicity vectors describe different sizes: |u|={}, |v|={}, |w|={}",
            n,
            v.length(),
            w.length()
        ));
    }
    let mut bounds = u.boundaries();
    bounds.extend(v.boundaries());
    bounds.extend(w.boundaries());
    Ok(MultiplicityVector::from_boundaries(&bounds, n))
}

/// One block of equal diagonal entries of `S`, `L` and `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Group {
    pub s: Complex64,
    pub l: f64,
    pub r: f64,
    pub m: usize,
}

impl Group {
    /// `(x_bar - conj(s)) (y - s) / (l r)^2` with `x_bar` supplied as an
    /// independent argument.
    pub fn alpha<T: Scalar>(&self, x_bar: T, y: T) -> T {
        let lr2 = (self.l * self.r).powi(2);
        (x_bar - T::constant(self.s.conj())) * (y - T::constant(self.s)) * (1.0 / lr2)
    }

    fn same_structure(&self, other: &Group) -> bool {
        self.s == other.s && self.l == other.l && self.r == other.r
    }
}

/// `(x_bar - s_bar)(y - s)/(l r)^2` evaluated at the physical `x_bar = conj(x)`.
pub fn alpha_pair(group: &Group, x: Complex64, y: Complex64) -> Complex64 {
    group.alpha(x.conj(), y)
}

/// Normal source `S`, diagonal covariances `L`, `R`, merged into maximal groups.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredEnsemble {
    groups: Vec<Group>,
    n_inv_var: f64,
    dim: usize,
}

impl StructuredEnsemble {
    /// Builds from explicit groups; adjacent groups with identical `(s, l, r)`
    /// are merged.
    pub fn new(groups: Vec<Group>, n_inv_var: f64) -> Result<Self> {
        if groups.is_empty() {
            return invalid("ensemble needs at least one group");
        }
        if !(n_inv_var > 0.0 && n_inv_var.is_finite()) {
            return invalid(format!("n_inv_var must be positive, got {n_inv_var}"));
        }
        let mut merged: Vec<Group> = Vec::with_capacity(groups.len());
        for g in groups {
            if g.m == 0 {
                return invalid("group multiplicity must be positive");
            }
            if !(g.l > 0.0 && g.r > 0.0) || !g.l.is_finite() || !g.r.is_finite() {
                return invalid(format!("covariances must be positive, got l={}, r={}", g.l, g.r));
            }
            if !(g.s.re.is_finite() && g.s.im.is_finite()) {
                return invalid("source values must be finite");
            }
            match merged.last_mut() {
                Some(last) if last.same_structure(&g) => last.m += g.m,
                _ => merged.push(g),
            }
        }
        let dim = merged.iter().map(|g| g.m).sum();
        Ok(Self {
            groups: merged,
            n_inv_var,
            dim,
        })
    }

    /// Builds from the run-length diagonals of `S`, `L` and `R`. `n_inv_var`
    /// defaults to `N`.
    pub fn from_runs(
        s_runs: &[(Complex64, usize)],
        l_runs: &[(f64, usize)],
        r_runs: &[(f64, usize)],
        n_inv_var: Option<f64>,
    ) -> Result<Self> {
        let u = MultiplicityVector::new(s_runs.iter().map(|r| r.1).collect())?;
        let v = MultiplicityVector::new(l_runs.iter().map(|r| r.1).collect())?;
        let w = MultiplicityVector::new(r_runs.iter().map(|r| r.1).collect())?;
        if let Some(&(l, _)) = l_runs.iter().find(|(l, _)| !(*l > 0.0)) {
            return invalid(format!("L entries must be positive, got {l}"));
        }
        if let Some(&(r, _)) = r_runs.iter().find(|(r, _)| !(*r > 0.0)) {
            return invalid(format!("R entries must be positive, got {r}"));
        }
        let merged = merge_multiplicities(&u, &v, &w)?;
        let n_total = merged.length();

        let lookup = |runs: &[(f64, usize)], pos: usize| -> f64 {
            let mut acc = 0;
            for &(val, m) in runs {
                acc += m;
                if pos < acc {
                    return val;
                }
            }
            unreachable!("position within validated length")
        };
        let lookup_c = |pos: usize| -> Complex64 {
            let mut acc = 0;
            for &(val, m) in s_runs {
                acc += m;
                if pos < acc {
                    return val;
                }
            }
            unreachable!("position within validated length")
        };

        let mut start = 0;
        let mut groups = Vec::with_capacity(merged.dimension());
        for &m in merged.groups() {
            groups.push(Group {
                s: lookup_c(start),
                l: lookup(l_runs, start),
                r: lookup(r_runs, start),
                m,
            });
            start += m;
        }
        Self::new(groups, n_inv_var.unwrap_or(n_total as f64))
    }

    /// `S = 0`, `L = R = 1`.
    pub fn ginibre(dim: usize, n_inv_var: f64) -> Result<Self> {
        Self::new(
            vec![Group {
                s: Complex64::new(0.0, 0.0),
                l: 1.0,
                r: 1.0,
                m: dim,
            }],
            n_inv_var,
        )
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn n_inv_var(&self) -> f64 {
        self.n_inv_var
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn multiplicities(&self) -> MultiplicityVector {
        MultiplicityVector(self.groups.iter().map(|g| g.m).collect())
    }

    /// True when every group has `l = r = 1`.
    pub fn has_unit_covariance(&self) -> bool {
        self.groups.iter().all(|g| g.l == 1.0 && g.r == 1.0)
    }

    /// Expanded diagonals `(s_j, l_j, r_j)` for `j = 0..N`.
    pub fn diagonals(&self) -> Vec<(Complex64, f64, f64)> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat((g.s, g.l, g.r)).take(g.m))
            .collect()
    }
}

/// Rank-one non-normal source `S = alpha |ket><bra|` with `L = R = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOneNonNormalEnsemble {
    alpha: Complex64,
    ket: usize,
    bra: usize,
    dim: usize,
    n_inv_var: f64,
}

impl RankOneNonNormalEnsemble {
    /// `ket` and `bra` are 1-based indices into `1..=dim`.
    pub fn new(alpha: Complex64, ket: usize, bra: usize, dim: usize, n_inv_var: Option<f64>) -> Result<Self> {
        if dim < 2 {
            return invalid("a rank-one off-diagonal source needs N >= 2");
        }
        if ket == 0 || bra == 0 || ket > dim || bra > dim {
            return invalid(format!("indices must lie in 1..={dim}, got ket={ket}, bra={bra}"));
        }
        if ket == bra {
            return invalid("ket and bra indices must differ (off-diagonal source)");
        }
        let n = n_inv_var.unwrap_or(dim as f64);
        if !(n > 0.0 && n.is_finite()) {
            return invalid(format!("n_inv_var must be positive, got {n}"));
        }
        Ok(Self {
            alpha,
            ket,
            bra,
            dim,
            n_inv_var: n,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }
    pub fn ket(&self) -> usize {
        self.ket
    }
    pub fn bra(&self) -> usize {
        self.bra
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n_inv_var(&self) -> f64 {
        self.n_inv_var
    }
}

/// Where a density profile is sampled.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanKind {
    Line {
        start: Complex64,
        end: Complex64,
        points: usize,
    },
    Grid {
        lower: Complex64,
        upper: Complex64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanGeometry {
    pub kind: ScanKind,
    /// Half-width of the strip (line) used for empirical estimation.
    pub strip_half_width: f64,
}

impl ScanGeometry {
    pub const DEFAULT_STRIP: f64 = 0.05;

    pub fn line(start: Complex64, end: Complex64, points: usize) -> Result<Self> {
        let g = Self {
            kind: ScanKind::Line { start, end, points },
            strip_half_width: Self::DEFAULT_STRIP,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn grid(lower: Complex64, upper: Complex64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            kind: ScanKind::Grid { lower, upper, nx, ny },
            strip_half_width: Self::DEFAULT_STRIP,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_strip(mut self, half_width: f64) -> Result<Self> {
        self.strip_half_width = half_width;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strip_half_width > 0.0) {
            return invalid("strip_half_width must be positive");
        }
        match &self.kind {
            ScanKind::Line { start, end, points } => {
                if *points < 2 {
                    return invalid("a line scan needs at least 2 points");
                }
                if start == end {
                    return invalid("line endpoints coincide");
                }
            }
            ScanKind::Grid { lower, upper, nx, ny } => {
                if *nx < 2 || *ny < 2 {
                    return invalid("a grid scan needs at least 2 points per axis");
                }
                if !(upper.re > lower.re && upper.im > lower.im) {
                    return invalid("grid upper corner must lie above and right of the lower corner");
                }
            }
        }
        Ok(())
    }

    /// Sample points. Line points are bin centres of `points` equal bins;
    /// grid points are cell centres, row-major from the lower corner.
    pub fn points(&self) -> Vec<Complex64> {
        match &self.kind {
            ScanKind::Line { start, end, points } => (0..*points)
                .map(|k| start + (end - start) * ((k as f64 + 0.5) / *points as f64))
                .collect(),
            ScanKind::Grid { lower, upper, nx, ny } => {
                let dx = (upper.re - lower.re) / *nx as f64;
                let dy = (upper.im - lower.im) / *ny as f64;
                let mut out = Vec::with_capacity(nx * ny);
                for iy in 0..*ny {
                    for ix in 0..*nx {
                        out.push(Complex64::new(
                            lower.re + (ix as f64 + 0.5) * dx,
                            lower.im + (iy as f64 + 0.5) * dy,
                        ));
                    }
                }
                out
            }
        }
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            ScanKind::Line { points, .. } => *points,
            ScanKind::Grid { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
