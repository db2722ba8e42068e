//! The mean-field vector field `F(v) = -v + pi^V(mu(v))`, its flow, and the
//! strict Lyapunov function `H(v) = sum_{i,j,k distinct} v_i^a v_j^a v_k^a`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::stationary_closed_form;
use crate::linalg::pow_alpha;
use crate::measures::{project_to_sigma, ProbabilityMeasure, SigmaSet};

/// The factored pieces of `H`:
/// `H_ij = sum_{k != i,j} v_k^a`, `H_i = sum_{j != i} v_j^a H_ij`,
/// `H = sum_i v_i^a H_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovComponents {
    pub alpha: f64,
    /// `v_i^alpha`.
    pub powers: Vec<f64>,
    /// `H_ij`, zero on the diagonal.
    pub h_ij: DMatrix<f64>,
    pub h_i: Vec<f64>,
    pub h: f64,
}

impl LyapunovComponents {
    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.h_ij[(i, j)]
    }

    /// `h_i = v_i^{alpha-1} H_i`, so that `dH/dv_i = 3 alpha h_i`.
    pub fn reduced(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.h_i)
            .map(|(x, hi)| pow_alpha(*x, self.alpha - 1.0) * hi)
            .collect()
    }
}

/// O(n^2) evaluation through `H_ij = T - w_i - w_j`.
pub fn lyapunov_components(v: &[f64], alpha: f64) -> LyapunovComponents {
    let n = v.len();
    let powers: Vec<f64> = v.iter().map(|x| pow_alpha(*x, alpha)).collect();
    let total: f64 = powers.iter().sum();
    let h_ij = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (total - powers[i] - powers[j]).max(0.0)
        }
    });
    let h_i: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| powers[j] * h_ij[(i, j)])
                .sum()
        })
        .collect();
    let h = powers.iter().zip(&h_i).map(|(w, hi)| w * hi).sum();
    LyapunovComponents {
        alpha,
        powers,
        h_ij,
        h_i,
        h,
    }
}

pub fn lyapunov(v: &[f64], alpha: f64) -> f64 {
    lyapunov_components(v, alpha).h
}

/// `dH/dv_i = 3 alpha v_i^{alpha-1} H_i(v)`.
pub fn lyapunov_gradient(v: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if alpha < 1.0 && v.contains(&0.0) {
        return Err(Error::domain(
            "gradient of H is singular at zero coordinates when alpha < 1",
        ));
    }
    let c = lyapunov_components(v, alpha);
    Ok(c.reduced(v).into_iter().map(|h| 3.0 * alpha * h).collect())
}

/// `F(v) = -v + pi^V(mu(v))`. The input must sum to 1; the output sums to 0.
pub fn vector_field(v: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("state sums to {total}, expected 1")));
    }
    let sigma = SigmaSet::new(v.len());
    let retracted = if sigma.contains(v) {
        ProbabilityMeasure::new(v.to_vec())?
    } else {
        project_to_sigma(v)
    };
    let pi = stationary_closed_form(&retracted, alpha)?;
    Ok(v.iter()
        .zip(pi.vertex.values())
        .map(|(x, p)| p - x)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub step_size: f64,
    pub integrator: Integrator,
    pub max_time: f64,
    /// Integration stops once `max |F| < tolerance`.
    pub tolerance: f64,
    /// Record every `record_every` steps (the first and last states are
    /// always recorded).
    pub record_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-2,
            integrator: Integrator::Rk4,
            max_time: 50.0,
            tolerance: 1e-10,
            record_every: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !(self.tolerance > 0.0) || !(self.max_time > 0.0) {
            return Err(Error::Config(
                "flow step size, tolerance and max time must be positive".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub lyapunov: Vec<f64>,
    pub field_norms: Vec<f64>,
    /// Steps after which the state was renormalized to unit mass.
    pub renormalizations: usize,
    pub converged: bool,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, y| m.max(y.abs()))
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// Fixed-step integration of `dv/dt = F(v)` from `v0`.
pub fn integrate_flow(v0: &[f64], alpha: f64, config: &FlowConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let dt = config.step_size;
    let max_steps = (config.max_time / dt).ceil() as usize;
    let mut v = v0.to_vec();
    let mut f = vector_field(&v, alpha)?;
    let mut rec = TrajectoryRecord {
        times: vec![0.0],
        states: vec![v.clone()],
        lyapunov: vec![lyapunov(&v, alpha)],
        field_norms: vec![sup_norm(&f)],
        renormalizations: 0,
        converged: sup_norm(&f) < config.tolerance,
    };
    let mut step = 0;
    while !rec.converged && step < max_steps {
        v = match config.integrator {
            Integrator::Euler => axpy(&v, dt, &f),
            Integrator::Rk4 => {
                let k1 = &f;
                let k2 = vector_field(&axpy(&v, dt / 2.0, k1), alpha)?;
                let k3 = vector_field(&axpy(&v, dt / 2.0, &k2), alpha)?;
                let k4 = vector_field(&axpy(&v, dt, &k3), alpha)?;
                v.iter()
                    .enumerate()
                    .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            v.iter_mut().for_each(|x| *x /= total);
            rec.renormalizations += 1;
        }
        step += 1;
        f = vector_field(&v, alpha)?;
        let norm = sup_norm(&f);
        rec.converged = norm < config.tolerance;
        if step % config.record_every == 0 || rec.converged || step == max_steps {
            rec.times.push(step as f64 * dt);
            rec.lyapunov.push(lyapunov(&v, alpha));
            rec.field_norms.push(norm);
            rec.states.push(v.clone());
        }
    }
    Ok(rec)
}
