use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `x^alpha` with the convention `0^0 = 1`.
#[inline]
pub fn pow_alpha(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        x.powf(alpha)
    }
}

pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))
}

/// Orthonormal basis (as columns) of the complement of the unit vector `w`,
/// taken from the Householder reflection that sends `w` to a coordinate axis.
pub fn complement_basis(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut u = w.clone();
    let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let unorm2 = u.norm_squared();
    let mut h = DMatrix::<f64>::identity(n, n);
    if unorm2 > 0.0 {
        h -= (&u * u.transpose()) * (2.0 / unorm2);
    }
    h.columns(1, n - 1).into_owned()
}

/// Least-squares solution of `a x = b` and the Euclidean norm of its
/// residual.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}
