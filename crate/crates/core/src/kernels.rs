//! Markov kernels on oriented edges of the complete graph: the VRNBW kernel
//! `P(v)`, the reinforcement matrix `V`, stationary measures, the
//! pseudo-inverse `Q(v)` and its limit at the three-point corners of `Sigma`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::lyapunov_components;
use crate::linalg::{inverse, max_abs, norm1, pow_alpha};
use crate::measures::{support_of, ProbabilityMeasure};

/// Bijection between oriented edges `(i, j)`, `i != j`, of `K_n` and
/// `0..n(n-1)`. Edges are ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedEdges {
    n: usize,
}

impl OrientedEdges {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn encode(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.n && j < self.n);
        i * (self.n - 1) + if j < i { j } else { j - 1 }
    }

    #[inline]
    pub fn decode(&self, idx: usize) -> (usize, usize) {
        let i = idx / (self.n - 1);
        let r = idx % (self.n - 1);
        (i, if r < i { r } else { r + 1 })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).map(|e| self.decode(e))
    }
}

/// A row-stochastic matrix. Rows are source states.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeKernel {
    matrix: DMatrix<f64>,
}

impl EdgeKernel {
    /// Checks squareness, nonnegativity and unit row sums (1e-12).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::domain("kernel must be a nonempty square matrix"));
        }
        for (r, row) in matrix.row_iter().enumerate() {
            if row.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::domain(format!("row {r} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("row {r} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    /// `P f` for a function `f` on states.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(f))
            .iter()
            .copied()
            .collect()
    }

    /// `mu P` for a measure `mu` on states.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        (DVector::from_column_slice(mu).transpose() * &self.matrix)
            .iter()
            .copied()
            .collect()
    }
}

/// `V((i,j), k) = 1_{j = k}`, an `n(n-1) x n` matrix.
pub fn reinforcement_matrix(n: usize) -> DMatrix<f64> {
    let edges = OrientedEdges::new(n);
    let mut v = DMatrix::zeros(edges.len(), n);
    for (e, (_, j)) in edges.iter().enumerate() {
        v[(e, j)] = 1.0;
    }
    v
}

/// `(V a)(i, j) = a(j)`.
pub fn lift_vertex_function(a: &[f64]) -> Vec<f64> {
    OrientedEdges::new(a.len())
        .iter()
        .map(|(_, j)| a[j])
        .collect()
}

/// The VRNBW kernel `P(v)((i,j),(j,k)) = v_k^alpha / sum_{k' != i,j} v_{k'}^alpha`.
pub fn build_vrnbw_kernel(v: &ProbabilityMeasure, alpha: f64) -> Result<EdgeKernel> {
    let n = v.dim();
    if n < 4 {
        return Err(Error::domain(format!(
            "complete graph needs n >= 4, got {n}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let w: Vec<f64> = v.values().iter().map(|x| pow_alpha(*x, alpha)).collect();
    let edges = OrientedEdges::new(n);
    let mut m = DMatrix::zeros(edges.len(), edges.len());
    for (e, (i, j)) in edges.iter().enumerate() {
        // Summed directly rather than as total - w_i - w_j so that the row
        // sum is 1 to rounding.
        let denom: f64 = (0..n).filter(|k| *k != i && *k != j).map(|k| w[k]).sum();
        if denom <= 0.0 {
            return Err(Error::domain(format!(
                "no admissible target from edge ({i},{j}): support of v has at most two points"
            )));
        }
        for k in (0..n).filter(|k| *k != i && *k != j) {
            m[(e, edges.encode(j, k))] = w[k] / denom;
        }
    }
    Ok(EdgeKernel { matrix: m })
}

/// Result of the recurrence analysis of a kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    /// A single recurrent class (transient states may exist).
    Indecomposable {
        recurrent: Vec<usize>,
    },
    Decomposable {
        classes: Vec<Vec<usize>>,
    },
}

impl Decomposition {
    pub fn is_indecomposable(&self) -> bool {
        matches!(self, Decomposition::Indecomposable { .. })
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        match self {
            Decomposition::Indecomposable { recurrent } => vec![recurrent.clone()],
            Decomposition::Decomposable { classes } => classes.clone(),
        }
    }
}

/// Recurrent classes of the digraph of positive entries. A state is recurrent
/// when every state it reaches leads back to it.
pub fn indecomposability_check(p: &EdgeKernel) -> Decomposition {
    let n = p.dim();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p.matrix[(i, j)] > 0.0).collect())
        .collect();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(x) = stack.pop() {
                for &y in &succ[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        })
        .collect();
    let recurrent: Vec<bool> = (0..n)
        .map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if recurrent[i] && !assigned[i] {
            let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            class.iter().for_each(|&j| assigned[j] = true);
            classes.push(class);
        }
    }
    if classes.len() == 1 {
        Decomposition::Indecomposable {
            recurrent: classes.pop().unwrap(),
        }
    } else {
        Decomposition::Decomposable { classes }
    }
}

/// The invariant measure `pi(v)` on oriented edges and its vertex marginal
/// `pi^V(v) = pi(v) V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPair {
    pub edge: ProbabilityMeasure,
    pub vertex: ProbabilityMeasure,
}

/// `pi_{ij} = v_i^a v_j^a H_{ij} / H` and `pi^V_k = v_k^a H_k / H`.
///
/// At a three-point corner the formula is the continuous extension of the
/// invariant measure (the kernel itself has two recurrent classes there).
pub fn stationary_closed_form(v: &ProbabilityMeasure, alpha: f64) -> Result<StationaryPair> {
    let n = v.dim();
    if n < 4 {
        return Err(Error::domain(format!(
            "complete graph needs n >= 4, got {n}"
        )));
    }
    let c = lyapunov_components(v.values(), alpha);
    if !(c.h > 0.0) {
        return Err(Error::domain(
            "H(v) = 0: support of v has at most two points",
        ));
    }
    let edges = OrientedEdges::new(n);
    let edge: Vec<f64> = edges
        .iter()
        .map(|(i, j)| c.powers[i] * c.powers[j] * c.pair(i, j) / c.h)
        .collect();
    let vertex: Vec<f64> = (0..n).map(|k| c.powers[k] * c.h_i[k] / c.h).collect();
    Ok(StationaryPair {
        edge: ProbabilityMeasure::from_weights(edge)?,
        vertex: ProbabilityMeasure::from_weights(vertex)?,
    })
}

/// Vertex marginal of an edge measure, `(pi V)_k = sum_i pi_{ik}`.
pub fn vertex_marginal(edge_measure: &[f64], n: usize) -> Vec<f64> {
    let edges = OrientedEdges::new(n);
    let mut out = vec![0.0; n];
    for (e, (_, j)) in edges.iter().enumerate() {
        out[j] += edge_measure[e];
    }
    out
}

/// Solves `pi P = pi`, `sum pi = 1` by replacing the last equation of
/// `(P^T - I) pi = 0` with the normalization.
pub fn stationary_solve(p: &EdgeKernel) -> Result<ProbabilityMeasure> {
    if let Decomposition::Decomposable { classes } = indecomposability_check(p) {
        return Err(Error::Decomposable { classes });
    }
    let n = p.dim();
    let mut a = p.matrix.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("stationary system".into()))?;
    if let Some(x) = pi.iter().find(|x| **x < -1e-12) {
        return Err(Error::Singular(format!(
            "stationary solve produced a negative weight {x:e}"
        )));
    }
    ProbabilityMeasure::from_weights(pi.iter().map(|x| x.max(0.0)).collect())
}

/// The pseudo-inverse `Q` of `I - P`: `Q 1 = 0` and
/// `Q (I - P) = (I - P) Q = I - Pi`.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// 1-norm condition number of `I - P + Pi`.
    pub condition: f64,
}

/// Residuals of the three defining identities, in max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PseudoInverseResiduals {
    pub annihilates_constants: f64,
    pub left: f64,
    pub right: f64,
}

impl PseudoInverseResiduals {
    pub fn max(&self) -> f64 {
        self.annihilates_constants.max(self.left).max(self.right)
    }
}

impl PseudoInverse {
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(g))
            .iter()
            .copied()
            .collect()
    }

    pub fn residuals(&self, p: &EdgeKernel, pi: &ProbabilityMeasure) -> PseudoInverseResiduals {
        let n = p.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let big_pi = projector(pi);
        let i_minus_p = &id - &p.matrix;
        let target = &id - &big_pi;
        let ones = DVector::from_element(n, 1.0);
        PseudoInverseResiduals {
            annihilates_constants: (&self.matrix * ones).amax(),
            left: max_abs(&(&self.matrix * &i_minus_p - &target)),
            right: max_abs(&(&i_minus_p * &self.matrix - &target)),
        }
    }
}

/// The matrix whose rows all equal `pi`.
fn projector(pi: &ProbabilityMeasure) -> DMatrix<f64> {
    let n = pi.dim();
    DMatrix::from_fn(n, n, |_, c| pi.get(c))
}

/// `Q = (I - P + Pi)^{-1} - Pi`.
pub fn pseudo_inverse(p: &EdgeKernel, pi: &ProbabilityMeasure) -> Result<PseudoInverse> {
    let n = p.dim();
    if pi.dim() != n {
        return Err(Error::domain("stationary measure has the wrong dimension"));
    }
    let big_pi = projector(pi);
    let m = DMatrix::<f64>::identity(n, n) - &p.matrix + &big_pi;
    let m_norm = norm1(&m);
    let inv = inverse(m, "I - P + Pi")?;
    let condition = m_norm * norm1(&inv);
    Ok(PseudoInverse {
        matrix: inv - big_pi,
        condition,
    })
}

/// Convenience: `Q(v) V a` for a function `a` on vertices, computed from the
/// kernel. At a three-point corner, where `Q(v)` is undefined, the
/// continuous extension from [`TaylorLimitBundle`] is returned instead.
pub fn deviation(v: &ProbabilityMeasure, alpha: f64, a: &[f64]) -> Result<Vec<f64>> {
    let support = support_of(v.values());
    if support.len() == 3 {
        let corner = [support[0], support[1], support[2]];
        return taylor_limit_at_corner(corner, a);
    }
    let p = build_vrnbw_kernel(v, alpha)?;
    let pi = stationary_closed_form(v, alpha)?;
    let q = pseudo_inverse(&p, &pi.edge)?;
    Ok(q.apply(&lift_vertex_function(a)))
}

/// The cyclic shift `J` with `(J x)_i = x_{i+1}`.
pub fn cyclic_shift() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
}

/// Limits of `Q(v) g`, `g(i, j) = a(j)`, as `v` tends to the uniform measure
/// on `{0, 1, 2}`, arranged in blocks:
///
/// * `x1 = (f(2,0), f(0,1), f(1,2))` and `x2 = (f(1,0), f(2,1), f(0,2))`, the
///   two 3-cycles;
/// * `y[l] = (f(i, l))_i` and `z[l] = (f(l, i))_i` for `i < 3 <= l`;
/// * `t[l]`, the common value of `f(m, l)` for `m, l >= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorLimitBundle {
    pub h: Vector3<f64>,
    pub hbar: f64,
    pub j: Matrix3<f64>,
    pub l1: Matrix3<f64>,
    pub l2: Matrix3<f64>,
    pub x1: Vector3<f64>,
    pub x2: Vector3<f64>,
    pub y: Vec<Vector3<f64>>,
    pub z: Vec<Vector3<f64>>,
    pub t: Vec<f64>,
}

impl TaylorLimitBundle {
    /// `h = (a(0), a(1), a(2))`, `a_tail = (a(3), .., a(n-1))`.
    pub fn new(h: [f64; 3], a_tail: &[f64]) -> Self {
        let h = Vector3::from(h);
        let hbar = h.mean();
        let j = cyclic_shift();
        let j2 = j * j;
        let l1 = (j + 2.0 * j2) / 3.0;
        let l2 = (2.0 * j + j2) / 3.0;
        let ones = Vector3::repeat(1.0);
        let x1 = -(l1 * h) + ones * hbar;
        let x2 = -(l2 * h) + ones * hbar;
        let y = a_tail
            .iter()
            .map(|al| -h / 4.0 + ones * (al - 0.75 * hbar))
            .collect();
        let z = a_tail.iter().map(|_| (h - ones * hbar) / 2.0).collect();
        let t = a_tail.iter().map(|al| al - hbar).collect();
        Self {
            h,
            hbar,
            j,
            l1,
            l2,
            x1,
            x2,
            y,
            z,
            t,
        }
    }

    pub fn vertices(&self) -> usize {
        3 + self.t.len()
    }

    /// The limit as a function on oriented edges of `K_n`, canonical labels.
    pub fn edge_vector(&self) -> Vec<f64> {
        let n = self.vertices();
        let edges = OrientedEdges::new(n);
        edges
            .iter()
            .map(|(i, j)| match (i < 3, j < 3) {
                (true, true) => {
                    // (i, i+1 mod 3) lies on the first cycle.
                    if j == (i + 1) % 3 {
                        self.x1[j]
                    } else {
                        self.x2[j]
                    }
                }
                (true, false) => self.y[j - 3][i],
                (false, true) => self.z[i - 3][j],
                (false, false) => self.t[j - 3],
            })
            .collect()
    }
}

/// Relabeling that sends `corner` (increasing) to `0, 1, 2` and the other
/// vertices, in increasing order, to `3..n`. `perm[old] = new`.
pub fn corner_relabeling(corner: [usize; 3], n: usize) -> Result<Vec<usize>> {
    let mut c = corner;
    c.sort_unstable();
    if c[0] == c[1] || c[1] == c[2] || c[2] >= n {
        return Err(Error::domain(format!(
            "invalid corner {corner:?} for n = {n}"
        )));
    }
    let mut perm = vec![0; n];
    for (new, &old) in c.iter().enumerate() {
        perm[old] = new;
    }
    let mut next = 3;
    for (old, p) in perm.iter_mut().enumerate() {
        if !c.contains(&old) {
            *p = next;
            next += 1;
        }
    }
    Ok(perm)
}

/// Limit of `Q(v) V a` at the uniform measure on `corner`, in the original
/// edge labels.
pub fn taylor_limit_at_corner(corner: [usize; 3], a: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n < 4 {
        return Err(Error::domain(format!(
            "complete graph needs n >= 4, got {n}"
        )));
    }
    let perm = corner_relabeling(corner, n)?;
    let mut canonical = vec![0.0; n];
    for (old, &new) in perm.iter().enumerate() {
        canonical[new] = a[old];
    }
    let bundle =
        TaylorLimitBundle::new([canonical[0], canonical[1], canonical[2]], &canonical[3..]);
    let limit = bundle.edge_vector();
    let edges = OrientedEdges::new(n);
    Ok(edges
        .iter()
        .map(|(i, j)| limit[edges.encode(perm[i], perm[j])])
        .collect())
}

/// The point with `eps_i = eps * u_i / sum u` on the corner and
/// `eps_l = eps * w_l / sum w` off it, i.e. `v_i = (1 - eps_i)/3` and
/// `v_l = eps_l / 3`. `u` has 3 entries, `w` has `n - 3`, all positive.
pub fn corner_perturbation(
    corner: [usize; 3],
    n: usize,
    eps: f64,
    u: &[f64],
    w: &[f64],
) -> Result<ProbabilityMeasure> {
    if u.len() != 3 || w.len() + 3 != n || u.iter().chain(w).any(|x| !(*x > 0.0)) {
        return Err(Error::domain(
            "perturbation weights must be positive, 3 and n - 3 of them",
        ));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let perm = corner_relabeling(corner, n)?;
    let (su, sw): (f64, f64) = (u.iter().sum(), w.iter().sum());
    let values = (0..n)
        .map(|old| {
            let new = perm[old];
            if new < 3 {
                (1.0 - eps * u[new] / su) / 3.0
            } else {
                eps * w[new - 3] / sw / 3.0
            }
        })
        .collect();
    ProbabilityMeasure::from_weights(values)
}

/// Deviations of `pi(v)` from its expansion near the nearest three-point
/// corner, with `eps_i = 1 - 3 v_i` on the corner and `eps_l = 3 v_l` off it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionResidual {
    pub corner: [usize; 3],
    /// `sum_i eps_i` over the corner.
    pub epsilon: f64,
    /// `max |pi_ij - (1/6 - S/3)|` over corner pairs, `S = sum_l eps_l^alpha`.
    pub pi_ij: f64,
    /// `max |pi_il / (eps_l^alpha / 3) - 1|`.
    pub pi_il_relative: f64,
    /// `max pi_lm` over pairs off the corner.
    pub pi_lm: f64,
}

pub fn stationary_expansion_check(v: &ProbabilityMeasure, alpha: f64) -> Result<ExpansionResidual> {
    let n = v.dim();
    if support_of(v.values()).len() <= 3 {
        return Err(Error::domain(
            "v lies on a three-point corner; use the limit bundle",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| v.get(*b).total_cmp(&v.get(*a)));
    let mut corner = [order[0], order[1], order[2]];
    corner.sort_unstable();
    let in_corner = |i: usize| corner.contains(&i);
    let epsilon: f64 = corner.iter().map(|&i| 1.0 - 3.0 * v.get(i)).sum();
    let s: f64 = (0..n)
        .filter(|l| !in_corner(*l))
        .map(|l| pow_alpha(3.0 * v.get(l), alpha))
        .sum();
    let pi = stationary_closed_form(v, alpha)?;
    let edges = OrientedEdges::new(n);
    let mut out = ExpansionResidual {
        corner,
        epsilon,
        pi_ij: 0.0,
        pi_il_relative: 0.0,
        pi_lm: 0.0,
    };
    for (e, (i, j)) in edges.iter().enumerate() {
        let p = pi.edge.get(e);
        match (in_corner(i), in_corner(j)) {
            (true, true) => out.pi_ij = out.pi_ij.max((p - (1.0 / 6.0 - s / 3.0)).abs()),
            (true, false) => {
                let lead = pow_alpha(3.0 * v.get(j), alpha) / 3.0;
                if lead > 0.0 {
                    out.pi_il_relative = out.pi_il_relative.max((p / lead - 1.0).abs());
                }
            }
            (false, true) => {}
            (false, false) => out.pi_lm = out.pi_lm.max(p),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> ProbabilityMeasure {
        ProbabilityMeasure::uniform(n)
    }

    #[test]
    fn edge_index_roundtrip() {
        for n in 4..9 {
            let e = OrientedEdges::new(n);
            for idx in 0..e.len() {
                let (i, j) = e.decode(idx);
                assert_ne!(i, j);
                assert_eq!(e.encode(i, j), idx);
            }
        }
    }

    #[test]
    fn uniform_kernel_has_half_transitions() {
        let p = build_vrnbw_kernel(&uniform(4), 1.0).unwrap();
        let e = OrientedEdges::new(4);
        for (from, (i, j)) in e.iter().enumerate() {
            for (to, (j2, k)) in e.iter().enumerate() {
                let expected = if j2 == j && k != i { 0.5 } else { 0.0 };
                assert_eq!(p.get(from, to), expected);
            }
        }
    }

    #[test]
    fn corner_kernel_is_deterministic_on_the_corner() {
        let v = ProbabilityMeasure::uniform_on(&[0, 1, 2], 4).unwrap();
        let p = build_vrnbw_kernel(&v, 2.0).unwrap();
        let e = OrientedEdges::new(4);
        assert_eq!(p.get(e.encode(0, 1), e.encode(1, 2)), 1.0);
        assert_eq!(p.get(e.encode(1, 0), e.encode(0, 2)), 1.0);
    }

    #[test]
    fn two_point_support_is_rejected() {
        let v = ProbabilityMeasure::uniform_on(&[0, 1], 4).unwrap();
        assert!(build_vrnbw_kernel(&v, 1.0).is_err());
        assert!(stationary_closed_form(&v, 1.0).is_err());
    }

    #[test]
    fn corner_splits_into_two_cycles() {
        let v = ProbabilityMeasure::uniform_on(&[0, 1, 2], 4).unwrap();
        let p = build_vrnbw_kernel(&v, 1.0).unwrap();
        let e = OrientedEdges::new(4);
        let mut classes = indecomposability_check(&p).classes();
        for c in classes.iter_mut() {
            c.sort_unstable();
        }
        classes.sort();
        let mut a = vec![e.encode(0, 1), e.encode(1, 2), e.encode(2, 0)];
        let mut b = vec![e.encode(1, 0), e.encode(0, 2), e.encode(2, 1)];
        a.sort_unstable();
        b.sort_unstable();
        let mut expected = vec![a, b];
        expected.sort();
        assert_eq!(classes, expected);
        assert!(matches!(
            stationary_solve(&p),
            Err(Error::Decomposable { .. })
        ));
    }

    #[test]
    fn identity_kernel_has_one_class_per_state() {
        let p = EdgeKernel::from_matrix(DMatrix::identity(5, 5)).unwrap();
        assert_eq!(indecomposability_check(&p).classes().len(), 5);
    }

    #[test]
    fn two_cycle_is_uniform() {
        let p =
            EdgeKernel::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let pi = stationary_solve(&p).unwrap();
        assert_eq!(pi.values(), &[0.5, 0.5]);
    }

    #[test]
    fn uniform_stationary_is_flat() {
        for alpha in [1.0, 2.5] {
            let pair = stationary_closed_form(&uniform(4), alpha).unwrap();
            assert!(pair
                .edge
                .values()
                .iter()
                .all(|x| (x - 1.0 / 12.0).abs() < 1e-15));
            assert!(pair
                .vertex
                .values()
                .iter()
                .all(|x| (x - 0.25).abs() < 1e-15));
            let solved =
                stationary_solve(&build_vrnbw_kernel(&uniform(4), alpha).unwrap()).unwrap();
            assert!(solved.sup_distance(pair.edge.values()) < 1e-14);
        }
    }

    #[test]
    fn closed_form_vertex_marginal_matches_edge_measure() {
        let v = ProbabilityMeasure::new(vec![0.3, 0.25, 0.2, 0.15, 0.1]).unwrap();
        let pair = stationary_closed_form(&v, 1.7).unwrap();
        let marginal = vertex_marginal(pair.edge.values(), 5);
        assert!(pair.vertex.sup_distance(&marginal) < 1e-15);
    }

    #[test]
    fn pseudo_inverse_identities() {
        let v = ProbabilityMeasure::new(vec![0.3, 0.25, 0.2, 0.15, 0.1]).unwrap();
        let p = build_vrnbw_kernel(&v, 2.0).unwrap();
        let pi = stationary_solve(&p).unwrap();
        let q = pseudo_inverse(&p, &pi).unwrap();
        assert!(q.residuals(&p, &pi).max() < 1e-12);
        let qg = q.apply(&lift_vertex_function(&[2.0; 5]));
        assert!(qg.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn bundle_of_constant_vanishes() {
        let b = TaylorLimitBundle::new([1.5; 3], &[1.5, 1.5]);
        assert!(b.edge_vector().iter().all(|x| x.abs() < 1e-15));
        let j = b.j;
        assert_eq!(j * j * j, Matrix3::identity());
    }

    #[test]
    fn relabeling_is_order_preserving() {
        assert_eq!(
            corner_relabeling([4, 1, 2], 6).unwrap(),
            vec![3, 0, 1, 4, 2, 5]
        );
        assert!(corner_relabeling([1, 1, 2], 6).is_err());
    }

    #[test]
    fn deviation_switches_to_limit_at_corner() {
        let v = ProbabilityMeasure::uniform_on(&[0, 1, 2], 4).unwrap();
        let a = [1.0, 0.0, 0.0, 0.0];
        let at_corner = deviation(&v, 1.0, &a).unwrap();
        let near = ProbabilityMeasure::new(vec![
            (1.0 - 3e-6) / 3.0,
            (1.0 - 2e-6) / 3.0,
            (1.0 - 1e-6) / 3.0,
            2e-6,
        ])
        .unwrap();
        let approx = deviation(&near, 1.0, &a).unwrap();
        assert!(sup(&at_corner, &approx) < 1e-4);
    }

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}
