//! Brute-force oracles shared by the integration tests. Everything here is
//! computed from triple sums over distinct vertices, without the factored
//! forms used by the library.

#![allow(dead_code)]

use rand::Rng;

pub fn weights(v: &[f64], alpha: f64) -> Vec<f64> {
    // Even extension to negative coordinates for alpha > 1, so that central
    // differences at a zero coordinate see the vanishing derivative.
    v.iter()
        .map(|&x| if alpha == 1.0 { x } else { x.abs().powf(alpha) })
        .collect()
}

/// `sum over distinct i, j, k of w_i w_j w_k`.
pub fn h_brute(v: &[f64], alpha: f64) -> f64 {
    let w = weights(v, alpha);
    let n = w.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k {
                    s += w[i] * w[j] * w[k];
                }
            }
        }
    }
    s
}

/// Vertex marginal of the invariant measure: `w_k` times the sum of
/// `w_i w_j` over ordered pairs of distinct vertices other than `k`,
/// normalized.
pub fn pi_vertex_brute(v: &[f64], alpha: f64) -> Vec<f64> {
    let w = weights(v, alpha);
    let n = w.len();
    let raw: Vec<f64> = (0..n)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j && i != k && j != k {
                        s += w[i] * w[j];
                    }
                }
            }
            w[k] * s
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `-v + pi^V(v)` on the positive orthant, with no normalization of `v`.
pub fn field_brute(v: &[f64], alpha: f64) -> Vec<f64> {
    pi_vertex_brute(v, alpha)
        .into_iter()
        .zip(v)
        .map(|(p, x)| p - x)
        .collect()
}

/// Central-difference Jacobian, `jac[i][j] = d field_i / d v_j`.
pub fn fd_jacobian(v: &[f64], alpha: f64, h: f64) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut plus = v.to_vec();
        let mut minus = v.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (field_brute(&plus, alpha), field_brute(&minus, alpha));
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

pub fn fd_gradient(v: &[f64], alpha: f64, h: f64) -> Vec<f64> {
    (0..v.len())
        .map(|j| {
            let mut plus = v.to_vec();
            let mut minus = v.to_vec();
            plus[j] += h;
            minus[j] -= h;
            (h_brute(&plus, alpha) - h_brute(&minus, alpha)) / (2.0 * h)
        })
        .collect()
}

/// Level `beta` at which the two-level point with weights `1` on `K` and
/// `1 / (1 + x)` on `M - K` vertices balances: the ratio of the vertex
/// marginals, high over low, must equal `(1 + x)^{1 - beta}`.
pub fn branch_level(k: usize, m: usize, x: f64) -> f64 {
    let low = 1.0 / (1.0 + x);
    let mut w = vec![1.0; k];
    w.extend(std::iter::repeat_n(low, m - k));
    let pair_sum = |skip: usize| {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j && i != skip && j != skip {
                    s += w[i] * w[j];
                }
            }
        }
        s
    };
    (pair_sum(k) / pair_sum(0)).ln() / x.ln_1p()
}

pub fn random_unit_box<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_positive<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..1.0)).collect()
}
