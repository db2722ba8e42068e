//! Finite measures, the constrained simplex `Sigma = { v in Delta : max(v) <= 1/3 + min(v) }`
//! and the Euclidean retraction onto it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the band `max(v) - min(v)` allowed in `Sigma`.
pub const SIGMA_GAP: f64 = 1.0 / 3.0;

/// Absolute tolerance on coordinate sums.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Coordinates above this value count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// A probability vector over `{0, .., dim-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMeasure {
    values: Vec<f64>,
}

impl ProbabilityMeasure {
    /// Validates nonnegativity and the unit sum (within [`SUM_TOLERANCE`]).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("probability measure over an empty set"));
        }
        if let Some(x) = values.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain(format!("negative or non-finite weight {x}")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { values })
    }

    /// Normalizes nonnegative weights. Fails on an all-zero or negative input.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("weights sum to zero"));
        }
        Ok(Self {
            values: weights.into_iter().map(|x| x / total).collect(),
        })
    }

    pub fn point_mass(i: usize, dim: usize) -> Result<Self> {
        Self::uniform_on(&[i], dim)
    }

    /// Uniform measure on `subset` (0-based indices).
    pub fn uniform_on(subset: &[usize], dim: usize) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::domain("uniform measure on an empty subset"));
        }
        let mut values = vec![0.0; dim];
        for &i in subset {
            if i >= dim {
                return Err(Error::domain(format!("index {i} outside 0..{dim}")));
            }
            if values[i] > 0.0 {
                return Err(Error::domain(format!("index {i} repeated in subset")));
            }
            values[i] = 1.0;
        }
        let size = subset.len() as f64;
        values.iter_mut().for_each(|x| *x /= size);
        Ok(Self { values })
    }

    /// The barycenter of the simplex.
    pub fn uniform(dim: usize) -> Self {
        Self {
            values: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .values
            .iter()
            .filter(|x| **x > 0.0)
            .map(|x| x * x.ln())
            .sum::<f64>()
    }

    /// `max_i |self_i - other_i|`.
    pub fn sup_distance(&self, other: &[f64]) -> f64 {
        sup_distance(&self.values, other)
    }
}

impl AsRef<[f64]> for ProbabilityMeasure {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A real vector whose coordinate sum is tracked: 0 for tangent vectors,
/// 1 for affine points of `T_1 Delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    values: Vec<f64>,
    total_mass: f64,
}

impl SignedMeasure {
    pub fn new(values: Vec<f64>) -> Self {
        let total_mass = values.iter().sum();
        Self { values, total_mass }
    }

    /// Builds a measure that must carry the given total mass.
    pub fn with_mass(values: Vec<f64>, total_mass: f64) -> Result<Self> {
        let actual: f64 = values.iter().sum();
        if (actual - total_mass).abs() > SUM_TOLERANCE * values.len().max(1) as f64 {
            return Err(Error::domain(format!(
                "coordinates sum to {actual}, expected total mass {total_mass}"
            )));
        }
        Ok(Self { values, total_mass })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl From<ProbabilityMeasure> for SignedMeasure {
    fn from(p: ProbabilityMeasure) -> Self {
        Self {
            values: p.values,
            total_mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaMembership {
    Outside,
    Boundary,
    Interior,
}

impl SigmaMembership {
    pub fn contains(self) -> bool {
        !matches!(self, SigmaMembership::Outside)
    }
}

/// The set `Sigma` for a fixed number of vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmaSet {
    dim: usize,
}

impl SigmaSet {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gap(&self) -> f64 {
        SIGMA_GAP
    }

    /// Classifies a probability vector. Boundary points either saturate the
    /// band or have a zero coordinate.
    pub fn membership(&self, v: &[f64]) -> SigmaMembership {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let total: f64 = v.iter().sum();
        if v.len() != self.dim || min < 0.0 || (total - 1.0).abs() > SUM_TOLERANCE {
            return SigmaMembership::Outside;
        }
        let spread = max - min;
        if spread > SIGMA_GAP + SUM_TOLERANCE {
            SigmaMembership::Outside
        } else if spread < SIGMA_GAP - SUM_TOLERANCE && min > SUPPORT_THRESHOLD {
            SigmaMembership::Interior
        } else {
            SigmaMembership::Boundary
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.membership(v).contains()
    }

    /// Euclidean projection onto `Sigma`; see [`project_to_sigma`].
    pub fn project(&self, v: &[f64]) -> ProbabilityMeasure {
        project_to_sigma(v)
    }
}

/// Shorthand for `SigmaSet::new(v.len()).membership(v)`.
pub fn in_sigma(v: &ProbabilityMeasure) -> SigmaMembership {
    SigmaSet::new(v.dim()).membership(v.values())
}

/// Samples `Dirichlet(1, .., 1)` conditioned on the interior of `Sigma`, by
/// rejection.
pub fn sample_sigma_interior<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ProbabilityMeasure {
    let sigma = SigmaSet::new(dim);
    loop {
        let w: Vec<f64> = (0..dim)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        let v: Vec<f64> = w.iter().map(|x| x / total).collect();
        if sigma.membership(&v) == SigmaMembership::Interior {
            return ProbabilityMeasure { values: v };
        }
    }
}

pub fn support_of(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x > SUPPORT_THRESHOLD)
        .map(|(i, _)| i)
        .collect()
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Exact Euclidean projection of `v` onto `Sigma`.
///
/// `Sigma` is the union over a floor `m >= 0` of the slabs
/// `{ w : sum w = 1, m <= w_i <= m + 1/3 }`, so the projection solves a QP in
/// `(w, m)` whose optimum is `w_i = clamp(v_i - tau, m, m + 1/3)`. Projection
/// onto a permutation-invariant convex set preserves the order of
/// coordinates, hence the clamped-low and clamped-high coordinates are a
/// prefix and a suffix of the sorted vector. Every (prefix, suffix, m free
/// or m = 0) active set is solved in closed form and the KKT-feasible
/// candidate is returned.
pub fn project_to_sigma(v: &[f64]) -> ProbabilityMeasure {
    let n = v.len();
    assert!(n > 0, "projection of an empty vector");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| v[i]).collect();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + sorted[i];
    }
    let total = prefix[n];
    let nf = n as f64;

    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (violation, objective, w)
    let mut consider = |w: Vec<f64>, violation: f64| {
        let objective: f64 = w.iter().zip(&sorted).map(|(a, b)| (a - b) * (a - b)).sum();
        let better = match &best {
            None => true,
            Some((bv, bo, _)) => {
                let feasible = violation <= 1e-12;
                let best_feasible = *bv <= 1e-12;
                match (feasible, best_feasible) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => objective < *bo,
                    (false, false) => violation < *bv,
                }
            }
        };
        if better {
            best = Some((violation, objective, w));
        }
    };

    for lower in 0..=n {
        for upper in 0..=(n - lower) {
            let free = n - lower - upper;
            let sum_low = prefix[lower];
            let sum_up = total - prefix[n - upper];
            let sum_free = prefix[n - upper] - prefix[lower];
            let j3 = upper as f64 * SIGMA_GAP;

            // Floor m strictly positive: stationarity in m balances the
            // multipliers of the two clamp families, which forces
            // tau = (sum v - 1) / n.
            if lower + upper > 0 {
                let tau = (total - 1.0) / nf;
                let m = (sum_low + sum_up - j3) / (lower + upper) as f64 - tau;
                let w = clamp_candidate(&sorted, lower, upper, tau, m);
                let mut viol = (-m).max(0.0);
                viol = viol.max(slab_violation(&sorted, lower, upper, tau, m));
                consider(w, viol);
            } else {
                let tau = (total - 1.0) / nf;
                let w: Vec<f64> = sorted.iter().map(|x| x - tau).collect();
                let spread = w[n - 1] - w[0];
                let viol = (spread - SIGMA_GAP).max(0.0).max((-w[0]).max(0.0));
                consider(w, viol);
            }

            // Floor pinned at m = 0.
            let tau = if free > 0 {
                (sum_free + j3 - 1.0) / free as f64
            } else if upper == 3 {
                sorted[n - upper] - SIGMA_GAP
            } else {
                continue;
            };
            let w = clamp_candidate(&sorted, lower, upper, tau, 0.0);
            let mut viol = slab_violation(&sorted, lower, upper, tau, 0.0);
            let lam: f64 = sorted[..lower].iter().map(|x| tau - x).sum();
            let nu: f64 = sorted[n - upper..]
                .iter()
                .map(|x| x - tau - SIGMA_GAP)
                .sum();
            viol = viol.max((nu - lam).max(0.0));
            let mass: f64 = w.iter().sum();
            viol = viol.max((mass - 1.0).abs());
            consider(w, viol);
        }
    }

    let (_, _, w_sorted) = best.expect("at least one candidate");
    let mut w = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        w[i] = w_sorted[k].max(0.0);
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    ProbabilityMeasure { values: w }
}

fn clamp_candidate(sorted: &[f64], lower: usize, upper: usize, tau: f64, m: f64) -> Vec<f64> {
    let n = sorted.len();
    sorted
        .iter()
        .enumerate()
        .map(|(k, x)| {
            if k < lower {
                m
            } else if k >= n - upper {
                m + SIGMA_GAP
            } else {
                x - tau
            }
        })
        .collect()
}

/// Largest violation of the active-set assumptions (primal and dual) for a
/// candidate `(tau, m)`.
fn slab_violation(sorted: &[f64], lower: usize, upper: usize, tau: f64, m: f64) -> f64 {
    let n = sorted.len();
    let mut viol: f64 = 0.0;
    for (k, x) in sorted.iter().enumerate() {
        let shifted = x - tau;
        if k < lower {
            viol = viol.max(shifted - m);
        } else if k >= n - upper {
            viol = viol.max(m + SIGMA_GAP - shifted);
        } else {
            viol = viol.max(m - shifted).max(shifted - m - SIGMA_GAP);
        }
    }
    viol
}
