//! Equilibria of `F(v) = -v + pi^V(v)` on `Sigma` and their stability.
//!
//! Besides the uniform measures `mu_K` on `K >= 3` vertices, for `alpha > 1`
//! there are two-level equilibria `v = (1 - p) mu_K + p mu_M` (`K < M`), with
//! `K` coordinates equal to `a`, `M - K` equal to `b < a` and the rest zero.
//! With `beta = (alpha - 1) / alpha` and `x = (a / b)^alpha - 1` they are the
//! positive roots of
//!
//! ```text
//! (1 + x)^beta (1 + 2 b1 x + b1 b2 x^2) = 1 + 2 a1 x + a1 a2 x^2,
//! a1 = K/(M-1), a2 = (K-1)/(M-2), b1 = (K-1)/(M-1), b2 = (K-2)/(M-2),
//! ```
//!
//! i.e. of `psi(x) = beta` with `psi(x) = (ln A(x) - ln B(x)) / ln(1 + x)`.
//! Everything below works in `s = ln x` so that roots as large as `e^1000`
//! are representable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{lyapunov_components, vector_field};
use crate::linalg::{complement_basis, least_squares, pow_alpha};
use crate::measures::{support_of, ProbabilityMeasure};

/// Lower end of the search range in `s = ln x`.
pub const LOG_X_MIN: f64 = -40.0;
/// Upper end of the search range in `s = ln x`.
pub const LOG_X_MAX: f64 = 1.0e4;
/// Eigenvalues and thresholds closer than this to the critical value are
/// reported as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;
/// Largest admissible `max |F(v)|` at an equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;

/// Constants of the `(K, M)` branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchFunction {
    pub k: usize,
    pub m: usize,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    /// `s = 1/(M-2)`.
    pub s: f64,
    /// `t = 1/(K-1)`, infinite for `K = 1`.
    pub t: f64,
    /// `lambda = (1/s + 1) t = 1/b1`, so that `x = lambda y`.
    pub lambda: f64,
}

impl BranchFunction {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if m < 4 || k == 0 || k >= m {
            return Err(Error::domain(format!(
                "need 1 <= K < M and M >= 4, got K = {k}, M = {m}"
            )));
        }
        let (kf, mf) = (k as f64, m as f64);
        let s = 1.0 / (mf - 2.0);
        let t = 1.0 / (kf - 1.0);
        Ok(Self {
            k,
            m,
            a1: kf / (mf - 1.0),
            a2: (kf - 1.0) / (mf - 2.0),
            b1: (kf - 1.0) / (mf - 1.0),
            b2: (kf - 2.0) / (mf - 2.0),
            s,
            t,
            lambda: (1.0 / s + 1.0) * t,
        })
    }

    /// `beta_M = psi(0+) = 2 / (M - 1)`.
    pub fn beta_m(&self) -> f64 {
        2.0 / (self.m as f64 - 1.0)
    }

    /// Shape of `psi` on `(0, inf)`.
    pub fn shape(&self) -> BranchShape {
        if self.k <= 2 {
            BranchShape::Increasing
        } else if 2 * self.k >= self.m {
            BranchShape::Decreasing
        } else {
            BranchShape::Unimodal
        }
    }

    /// `ln A(x)` at `x = e^s`.
    pub fn log_a(&self, s: f64) -> f64 {
        log_quadratic(self.a1, self.a2, s)
    }

    /// `ln B(x)` at `x = e^s`.
    pub fn log_b(&self, s: f64) -> f64 {
        log_quadratic(self.b1, self.b2, s)
    }

    /// `psi(e^s)`.
    pub fn psi_log(&self, s: f64) -> f64 {
        (self.log_a(s) - self.log_b(s)) / ln_1p_exp(s)
    }

    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("psi needs x > 0, got {x}")));
        }
        Ok(self.psi_log(x.ln()))
    }

    /// `phi(y) = psi(lambda y)`, the form used for `K >= 2`.
    pub fn phi(&self, y: f64) -> Result<f64> {
        if self.k < 2 {
            return Err(Error::domain("phi is defined for K >= 2; use phi_a1"));
        }
        if !(y > 0.0) {
            return Err(Error::domain(format!("phi needs y > 0, got {y}")));
        }
        Ok(self.psi_log(y.ln() + self.lambda.ln()))
    }

    /// `(1 + x)^beta B(x) / A(x) - 1`, evaluated in logs.
    pub fn root_residual(&self, s: f64, beta: f64) -> f64 {
        (beta * ln_1p_exp(s) + self.log_b(s) - self.log_a(s)).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchShape {
    /// `K in {1, 2}`: increases from `beta_M` to 1.
    Increasing,
    /// `K >= 3, K >= M/2`: decreases from `beta_M` to 0.
    Decreasing,
    /// `3 <= K < M/2`: rises from `beta_M` to `beta_{K,M}`, then decays to 0.
    Unimodal,
}

/// `ln(1 + e^s)`.
fn ln_1p_exp(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// `ln(1 + 2 c x + c d x^2)` at `x = e^s`, without overflow for large `s`.
fn log_quadratic(c: f64, d: f64, s: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    if s <= 0.0 {
        let x = s.exp();
        return (2.0 * c * x + c * d * x * x).ln_1p();
    }
    let e = (-s).exp();
    if c * d > 0.0 {
        2.0 * s + (e * e + 2.0 * c * e + c * d).ln()
    } else if d == 0.0 {
        s + (e + 2.0 * c).ln()
    } else {
        let x = s.exp();
        (1.0 + 2.0 * c * x + c * d * x * x).ln()
    }
}

/// `phi_{a1}(x) = ln(1 + 2 a1 x) / ln(1 + x)` with `a1 = 1/(M-1)`: the
/// `K = 1` branch function.
pub fn phi_a1(x: f64, m: usize) -> Result<f64> {
    BranchFunction::new(1, m)?.psi(x)
}

/// `phi(y)` for the `(K, M)` branch, `K >= 2`.
pub fn phi(y: f64, branch: &BranchFunction) -> Result<f64> {
    branch.phi(y)
}

/// `psi(x)` for the `(K, M)` branch.
pub fn branch_ratio(x: f64, branch: &BranchFunction) -> Result<f64> {
    branch.psi(x)
}

pub fn beta_of_alpha(alpha: f64) -> f64 {
    (alpha - 1.0) / alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaThreshold {
    pub beta_m: f64,
    /// `sup psi`, only for `3 <= K < M/2`.
    pub beta_km: Option<f64>,
    /// `ln` of the maximizer of `psi`, when `beta_km` is present.
    pub log_argmax: Option<f64>,
}

/// Golden-section maximization of `psi` in `s`, seeded by a coarse scan.
fn maximize_psi(branch: &BranchFunction) -> (f64, f64) {
    let (lo, hi, n) = (-20.0, 700.0, 2881);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let val = branch.psi_log(lo + h * i as f64);
        if val > best {
            best = val;
            best_i = i;
        }
    }
    let mut a = lo + h * (best_i as f64 - 1.0);
    let mut b = lo + h * (best_i as f64 + 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (branch.psi_log(c), branch.psi_log(d));
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = branch.psi_log(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = branch.psi_log(d);
        }
    }
    let s = (a + b) / 2.0;
    (s, branch.psi_log(s))
}

pub fn beta_threshold(k: usize, m: usize) -> Result<BetaThreshold> {
    let branch = BranchFunction::new(k, m)?;
    let (beta_km, log_argmax) = if branch.shape() == BranchShape::Unimodal {
        let (s, val) = maximize_psi(&branch);
        (Some(val), Some(s))
    } else {
        (None, None)
    };
    Ok(BetaThreshold {
        beta_m: branch.beta_m(),
        beta_km,
        log_argmax,
    })
}

/// Number of two-level equilibria with profile `(K, M)` (up to
/// permutation), read off the shape of `psi`: `psi` starts at `beta_M`, so a
/// level `beta` is crossed on each monotone piece whose range contains it.
pub fn count_d(k: usize, m: usize, alpha: f64) -> Result<usize> {
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!(
            "alpha must be at least 1, got {alpha}"
        )));
    }
    let beta = beta_of_alpha(alpha);
    let branch = BranchFunction::new(k, m)?;
    let beta_m = branch.beta_m();
    if beta <= 0.0 {
        return Ok(0);
    }
    Ok(match branch.shape() {
        BranchShape::Increasing => usize::from(beta > beta_m),
        BranchShape::Decreasing => usize::from(beta < beta_m),
        BranchShape::Unimodal => {
            let beta_km = beta_threshold(k, m)?.beta_km.expect("unimodal branch");
            if beta <= beta_m {
                1
            } else if beta < beta_km {
                2
            } else if beta == beta_km {
                1
            } else {
                0
            }
        }
    })
}

/// Bisection for `psi(e^s) = beta` on `[lo, hi]`, assuming one sign change.
fn bisect(branch: &BranchFunction, beta: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let g = |s: f64| branch.psi_log(s) - beta;
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `ln x` of every root of `psi(x) = beta`, increasing.
///
/// At `beta = beta_M` the piece starting at `x = 0+` only touches the level
/// in the limit, which is the uniform measure on `M` vertices, so it is
/// skipped.
pub fn branch_roots(branch: &BranchFunction, beta: f64) -> Vec<f64> {
    let mut pieces = match branch.shape() {
        BranchShape::Increasing | BranchShape::Decreasing => vec![(LOG_X_MIN, LOG_X_MAX)],
        BranchShape::Unimodal => {
            let (s, _) = maximize_psi(branch);
            vec![(LOG_X_MIN, s), (s, LOG_X_MAX)]
        }
    };
    if (beta - branch.beta_m()).abs() <= 1e-12 {
        pieces.remove(0);
    }
    pieces
        .into_iter()
        .filter_map(|(lo, hi)| bisect(branch, beta, lo, hi))
        .filter(|s| *s > LOG_X_MIN + 1.0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum EquilibriumKind {
    Uniform { k: usize },
    TwoLevel { k: usize, m: usize },
}

impl EquilibriumKind {
    pub fn label(&self) -> &'static str {
        match self {
            EquilibriumKind::Uniform { .. } => "uniform",
            EquilibriumKind::TwoLevel { .. } => "two-level",
        }
    }

    /// `(K, M)`, with `M = K` for uniform measures.
    pub fn profile(&self) -> (usize, usize) {
        match *self {
            EquilibriumKind::Uniform { k } => (k, k),
            EquilibriumKind::TwoLevel { k, m } => (k, m),
        }
    }
}

/// One equilibrium, represented by its canonical vector: the high level on
/// `0..K`, the low level on `K..M`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub kind: EquilibriumKind,
    pub vector: ProbabilityMeasure,
    pub alpha: f64,
    pub beta: f64,
    pub high: f64,
    /// Equal to `high` for uniform measures.
    pub low: f64,
    /// `(a/b)^alpha - 1`; 0 for uniform measures.
    pub x: f64,
    pub log_x: f64,
    /// Weight of `mu_M` in `(1 - p) mu_K + p mu_M`; 1 for uniform measures.
    pub p: f64,
    /// Number of equilibria obtained by permuting vertices.
    pub orbit_size: u64,
    /// `max |F(v)|`.
    pub residual: f64,
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn residual_of(v: &[f64], alpha: f64) -> Result<f64> {
    Ok(vector_field(v, alpha)?
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs())))
}

pub fn uniform_equilibrium(k: usize, n: usize, alpha: f64) -> Result<EquilibriumRecord> {
    if k < 3 || k > n {
        return Err(Error::domain(format!(
            "uniform equilibria need 3 <= K <= N, got K = {k}"
        )));
    }
    let support: Vec<usize> = (0..k).collect();
    let vector = ProbabilityMeasure::uniform_on(&support, n)?;
    let residual = residual_of(vector.values(), alpha)?;
    Ok(EquilibriumRecord {
        kind: EquilibriumKind::Uniform { k },
        vector,
        alpha,
        beta: beta_of_alpha(alpha),
        high: 1.0 / k as f64,
        low: 1.0 / k as f64,
        x: 0.0,
        log_x: f64::NEG_INFINITY,
        p: 1.0,
        orbit_size: binomial(n, k),
        residual,
    })
}

/// Two-level equilibria with profile `(K, M)` on `K_n`, filtered by
/// `max v <= 1/3`.
pub fn solve_branch_equilibria(
    k: usize,
    m: usize,
    alpha: f64,
    n: usize,
) -> Result<Vec<EquilibriumRecord>> {
    if m > n {
        return Err(Error::domain(format!("M = {m} exceeds N = {n}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!(
            "alpha must be at least 1, got {alpha}"
        )));
    }
    let branch = BranchFunction::new(k, m)?;
    let beta = beta_of_alpha(alpha);
    if beta <= 0.0 {
        return Ok(Vec::new());
    }
    let (kf, mf) = (k as f64, m as f64);
    let mut out = Vec::new();
    for s in branch_roots(&branch, beta) {
        let rho = (ln_1p_exp(s) / alpha).exp();
        let b = 1.0 / (kf * rho + mf - kf);
        let a = rho * b;
        if a > 1.0 / 3.0 + 1e-15 {
            continue;
        }
        let mut values = vec![0.0; n];
        values[..k].iter_mut().for_each(|x| *x = a);
        values[k..m].iter_mut().for_each(|x| *x = b);
        let vector = ProbabilityMeasure::from_weights(values)?;
        let residual = residual_of(vector.values(), alpha)?;
        out.push(EquilibriumRecord {
            kind: EquilibriumKind::TwoLevel { k, m },
            vector,
            alpha,
            beta,
            high: a,
            low: b,
            x: s.exp(),
            log_x: s,
            p: mf * b,
            orbit_size: binomial(n, m) * binomial(m, k),
            residual,
        });
    }
    Ok(out)
}

/// Every equilibrium of `F` on `K_n` up to permutation: uniform measures on
/// `3..=n` vertices, then the two-level branches by increasing `M` and `K`.
pub fn enumerate_equilibria(n: usize, alpha: f64) -> Result<Vec<EquilibriumRecord>> {
    if n < 4 {
        return Err(Error::domain(format!("N must be at least 4, got {n}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!(
            "alpha must be at least 1, got {alpha}"
        )));
    }
    let mut out = Vec::new();
    for k in 3..=n {
        out.push(uniform_equilibrium(k, n, alpha)?);
    }
    if alpha > 1.0 {
        for m in 4..=n {
            for k in 1..m {
                out.extend(solve_branch_equilibria(k, m, alpha, n)?);
            }
        }
    }
    Ok(out)
}

/// Jacobian of `G(v) = -v + pi^V(v)`, with `pi^V` given by its closed form
/// on all of the positive orthant. Column `i` is `dG/dv_i`.
///
/// `G` is homogeneous of degree 0 plus `-v`, so `DG v = -v`; the restriction
/// to the tangent space `sum u = 0` is the differential of `F`.
pub fn jacobian(v: &[f64], alpha: f64) -> Result<DMatrix<f64>> {
    let n = v.len();
    let c = lyapunov_components(v, alpha);
    if !(c.h > 0.0) {
        return Err(Error::domain(
            "H(v) = 0: support of v has at most two points",
        ));
    }
    let hr = c.reduced(v);
    let pi: Vec<f64> = (0..n).map(|k| c.powers[k] * c.h_i[k] / c.h).collect();
    Ok(DMatrix::from_fn(n, n, |j, i| {
        let d = pow_alpha(v[i], alpha - 1.0);
        if i == j {
            -1.0 + alpha * hr[i] / c.h - 3.0 * alpha * pi[i] * hr[i] / c.h
        } else {
            2.0 * alpha * d * c.powers[j] * c.pair(i, j) / c.h - 3.0 * alpha * pi[j] * hr[i] / c.h
        }
    }))
}

/// `DF(v)` at an equilibrium, as the Jacobian of the extension `G`.
pub fn differential_df(v: &EquilibriumRecord) -> Result<DMatrix<f64>> {
    if v.residual > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotEquilibrium {
            residual: v.residual,
        });
    }
    jacobian(v.vector.values(), v.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }

    fn of(max_eigenvalue: f64) -> Self {
        if max_eigenvalue > MARGINAL_TOLERANCE {
            Stability::Unstable
        } else if max_eigenvalue >= -MARGINAL_TOLERANCE {
            Stability::Marginal
        } else {
            Stability::Stable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Tangent directions inside the support.
    Support,
    /// Directions `e_i - v` with `v_i = 0`.
    OffSupport,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Support => "support",
            Direction::OffSupport => "off-support",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenGroup {
    pub value: f64,
    pub multiplicity: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Eigenvalues of `DF(v)` on the tangent space, grouped.
    pub eigenvalues: Vec<EigenGroup>,
    pub classification: Stability,
    /// Largest entry of the antisymmetric part of the symmetrized support
    /// block (zero in exact arithmetic).
    pub asymmetry: f64,
    /// Tangent eigenvector of the largest eigenvalue when it is positive.
    pub unstable_direction: Option<Vec<f64>>,
    /// Two-level equilibria: `lambda(v) = beta K (K-1) x^2 + 2K[beta(M-2) - 1] x
    /// + (M-2)[beta(M-1) - 2]`.
    pub lambda_factor: Option<f64>,
    /// Two-level equilibria with `M - K >= 2`: the eigenvalue of the
    /// directions `e_i - e_j` between two low vertices.
    pub low_block_eigenvalue: Option<f64>,
}

impl StabilityReport {
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.eigenvalues {
            out.extend(std::iter::repeat_n(g.value, g.multiplicity));
        }
        out
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|g| g.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn group(mut values: Vec<(f64, Direction)>) -> Vec<EigenGroup> {
    values.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
    let mut out: Vec<EigenGroup> = Vec::new();
    for (v, d) in values {
        match out.last_mut() {
            Some(g) if g.direction == d && (g.value - v).abs() <= 1e-9 * (1.0 + v.abs()) => {
                g.value += (v - g.value) / (g.multiplicity + 1) as f64;
                g.multiplicity += 1;
            }
            _ => out.push(EigenGroup {
                value: v,
                multiplicity: 1,
                direction: d,
            }),
        }
    }
    out
}

/// Spectrum of `DF(v)` on the tangent space and the resulting stability.
///
/// `DF(v)` is self-adjoint for `<u, w>_{1/v}` on the support, so the support
/// block is symmetrized by `diag(v)^{-1/2}`; the radial direction `v`
/// (eigenvalue -1 of the extension, not tangent) is removed with a
/// Householder complement. Off the support the Jacobian is triangular and
/// each `e_i - v` contributes its diagonal entry.
pub fn classify_stability(record: &EquilibriumRecord) -> Result<StabilityReport> {
    let jac = differential_df(record)?;
    let v = record.vector.values();
    let n = v.len();
    let support = support_of(v);
    let ks = support.len();
    let sqrt_v = DVector::from_iterator(ks, support.iter().map(|&i| v[i].sqrt()));
    let block = DMatrix::from_fn(ks, ks, |r, c| {
        jac[(support[r], support[c])] * sqrt_v[c] / sqrt_v[r]
    });
    let asymmetry = (&block - block.transpose())
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs()))
        / 2.0;
    let sym = (&block + block.transpose()) / 2.0;
    let basis = complement_basis(&(&sqrt_v / sqrt_v.norm()));
    let reduced = basis.transpose() * &sym * &basis;
    let eig = SymmetricEigen::try_new(reduced, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigen-solver did not converge".into()))?;
    let mut values: Vec<(f64, Direction)> = eig
        .eigenvalues
        .iter()
        .map(|x| (*x, Direction::Support))
        .collect();
    for i in (0..n).filter(|i| !support.contains(i)) {
        values.push((jac[(i, i)], Direction::OffSupport));
    }
    let eigenvalues = group(values);
    let max_eig = eigenvalues
        .iter()
        .map(|g| g.value)
        .fold(f64::NEG_INFINITY, f64::max);

    let unstable_direction = if max_eig > MARGINAL_TOLERANCE {
        let support_max = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut dir = vec![0.0; n];
        if (support_max - max_eig).abs() <= 1e-12 * (1.0 + max_eig.abs()) {
            let idx = (0..eig.eigenvalues.len())
                .max_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]))
                .expect("support block is nonempty");
            let y = &basis * eig.eigenvectors.column(idx);
            for (r, &i) in support.iter().enumerate() {
                dir[i] = y[r] * sqrt_v[r];
            }
        } else {
            let i = (0..n)
                .filter(|i| !support.contains(i))
                .max_by(|a, b| jac[(*a, *a)].total_cmp(&jac[(*b, *b)]))
                .expect("off-support eigenvalue");
            // Eigenvector of the triangular Jacobian for the off-support
            // diagonal entry, projected to the tangent space.
            dir[i] = 1.0;
            let mu = jac[(i, i)];
            let rhs = DVector::from_iterator(ks, support.iter().map(|&j| -jac[(j, i)]));
            let sub = DMatrix::from_fn(ks, ks, |r, c| {
                jac[(support[r], support[c])] - if r == c { mu } else { 0.0 }
            });
            if let Some(sol) = sub.lu().solve(&rhs) {
                for (r, &j) in support.iter().enumerate() {
                    dir[j] = sol[r];
                }
            }
            let total: f64 = dir.iter().sum();
            let vs: f64 = v.iter().sum();
            dir.iter_mut()
                .zip(v)
                .for_each(|(d, x)| *d -= total * x / vs);
        }
        Some(dir)
    } else {
        None
    };

    let (lambda_factor, low_block_eigenvalue) = match record.kind {
        EquilibriumKind::TwoLevel { k, m } => {
            let (kf, mf, beta, x) = (k as f64, m as f64, record.beta, record.x);
            let lambda = beta * kf * (kf - 1.0) * x * x
                + 2.0 * kf * (beta * (mf - 2.0) - 1.0) * x
                + (mf - 2.0) * (beta * (mf - 1.0) - 2.0);
            let low = if m - k >= 2 {
                let (i, j) = (k, k + 1);
                Some(((jac[(i, i)] - jac[(i, j)]) - (jac[(j, i)] - jac[(j, j)])) / 2.0)
            } else {
                None
            };
            (Some(lambda), low)
        }
        EquilibriumKind::Uniform { .. } => (None, None),
    };

    Ok(StabilityReport {
        classification: Stability::of(max_eig),
        eigenvalues,
        asymmetry,
        unstable_direction,
        lambda_factor,
        low_block_eigenvalue,
    })
}

/// Closed-form spectrum of `DF` at the uniform measure on `K` of `N`
/// vertices: `(support eigenvalue, off-support eigenvalue)`, of
/// multiplicities `K - 1` and `N - K`.
pub fn uniform_spectrum(k: usize, alpha: f64) -> (f64, f64) {
    let kf = k as f64;
    if alpha == 1.0 {
        (-2.0 / (kf - 1.0), 2.0 / (kf - 2.0))
    } else {
        (-1.0 + alpha * (kf - 3.0) / (kf - 1.0), -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoboundaryResult {
    pub obstructed: bool,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
}

/// Tests whether `Vf(i, j) = f(j) = C + g(i) - g(j)` can hold for all
/// `i != j` in `support`. A positive residual means no such `C`, `g` exist.
pub fn coboundary_check(support: &[usize], f: &[f64]) -> Result<CoboundaryResult> {
    let s = support.len();
    if s < 2 {
        return Err(Error::domain("support needs at least two vertices"));
    }
    if support.iter().any(|&i| i >= f.len()) {
        return Err(Error::domain("support index outside the vector"));
    }
    let rows = s * (s - 1);
    let mut a = DMatrix::zeros(rows, s + 1);
    let mut b = DVector::zeros(rows);
    let mut r = 0;
    for (pi, _) in support.iter().enumerate() {
        for (pj, &j) in support.iter().enumerate() {
            if pi == pj {
                continue;
            }
            a[(r, 0)] = 1.0;
            a[(r, 1 + pi)] += 1.0;
            a[(r, 1 + pj)] -= 1.0;
            b[r] = f[j];
            r += 1;
        }
    }
    let (_, residual) = least_squares(&a, &b)?;
    let scale = support.iter().fold(1.0f64, |m, &i| m.max(f[i].abs()));
    Ok(CoboundaryResult {
        obstructed: residual > 1e-9 * scale,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_constants() {
        let b = BranchFunction::new(3, 7).unwrap();
        assert!((b.lambda - 1.0 / b.b1).abs() < 1e-15);
        assert!(0.0 < b.s && b.s <= b.t && b.t <= 1.0);
        assert!((b.beta_m() - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(b.shape(), BranchShape::Unimodal);
        assert_eq!(
            BranchFunction::new(4, 7).unwrap().shape(),
            BranchShape::Decreasing
        );
        assert!(BranchFunction::new(4, 4).is_err());
    }

    #[test]
    fn phi_a1_limits() {
        for m in [4, 5, 8] {
            let bm = 2.0 / (m as f64 - 1.0);
            assert!((phi_a1(1e-9, m).unwrap() - bm).abs() < 1e-8);
            assert!((phi_a1(1e200, m).unwrap() - 1.0).abs() < 1e-2);
        }
        assert!(phi_a1(0.0, 4).is_err());
    }

    #[test]
    fn log_quadratic_matches_direct() {
        for &(c, d) in &[(0.5f64, 0.25f64), (0.2, 0.0), (0.0, -0.5)] {
            for &x in &[1e-6f64, 0.3, 2.0, 1e5] {
                let direct = (1.0 + 2.0 * c * x + c * d * x * x).ln();
                assert!((log_quadratic(c, d, f64::ln(x)) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(7, 0), 1);
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn alpha_one_has_only_uniform_equilibria() {
        let eq = enumerate_equilibria(5, 1.0).unwrap();
        let orbits: Vec<u64> = eq.iter().map(|e| e.orbit_size).collect();
        assert_eq!(orbits, vec![10, 5, 1]);
        assert!(eq.iter().all(|e| e.residual < 1e-15));
    }

    #[test]
    fn k1_m4_alpha2_is_empty() {
        assert!(solve_branch_equilibria(1, 4, 2.0, 6).unwrap().is_empty());
        assert_eq!(count_d(1, 4, 2.0).unwrap(), 0);
    }

    #[test]
    fn no_roots_exactly_at_beta_m() {
        // alpha = 2 gives beta = 1/2 = beta_5.
        for k in 1..5 {
            assert!(solve_branch_equilibria(k, 5, 2.0, 6).unwrap().is_empty());
        }
        assert_eq!(solve_branch_equilibria(3, 7, 1.5, 7).unwrap().len(), 1);
    }

    #[test]
    fn two_roots_just_above_beta_m() {
        let beta = 1.0 / 3.0 + 0.01;
        let alpha = 1.0 / (1.0 - beta);
        let roots = solve_branch_equilibria(3, 7, alpha, 7).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(count_d(3, 7, alpha).unwrap(), 2);
        for r in &roots {
            assert!(r.residual < 1e-12, "{}", r.residual);
        }
    }

    #[test]
    fn uniform_spectra() {
        for &(k, alpha) in &[(4usize, 2.0), (3, 3.0), (5, 1.0), (6, 1.5)] {
            let rec = uniform_equilibrium(k, 8, alpha).unwrap();
            let rep = classify_stability(&rec).unwrap();
            let (s, o) = uniform_spectrum(k, alpha);
            let support: Vec<&EigenGroup> = rep
                .eigenvalues
                .iter()
                .filter(|g| g.direction == Direction::Support)
                .collect();
            assert_eq!(support.len(), 1);
            assert!((support[0].value - s).abs() < 1e-12);
            assert_eq!(support[0].multiplicity, k - 1);
            let off: Vec<&EigenGroup> = rep
                .eigenvalues
                .iter()
                .filter(|g| g.direction == Direction::OffSupport)
                .collect();
            assert!((off[0].value - o).abs() < 1e-12);
            assert_eq!(off[0].multiplicity, 8 - k);
        }
    }

    #[test]
    fn non_equilibrium_is_rejected() {
        let mut rec = uniform_equilibrium(4, 6, 2.0).unwrap();
        rec.residual = 1e-3;
        assert!(matches!(
            differential_df(&rec),
            Err(Error::NotEquilibrium { .. })
        ));
    }

    #[test]
    fn coboundary() {
        let support = [0, 1, 2, 3];
        let flat = coboundary_check(&support, &[0.5, 0.5, 0.5, 0.5, 9.0]).unwrap();
        assert!(!flat.obstructed && flat.residual < 1e-12);
        let bent = coboundary_check(&support, &[0.3, -0.1, -0.1, -0.1, 0.0]).unwrap();
        assert!(bent.obstructed);
    }
}
