//! Vertex-reinforced non-backtracking random walks (VRNBW) on complete graphs.
//!
//! The walk moves on the oriented edges of a graph: from `(X_{n-1}, X_n)` it
//! jumps to a neighbour of `X_n` other than `X_{n-1}`, chosen with weight
//! `(1 + Z_n(k))^alpha` where `Z_n(k)` counts previous visits. The occupation
//! measure `v_n` is a stochastic approximation of the ODE `dv/dt = F(v)` with
//! `F(v) = -v + pi^V(v)`, and this crate provides both sides:
//!
//! * [`walk`] simulates the process (complete and general graphs) and runs
//!   seeded Monte Carlo localization experiments;
//! * [`measures`] and [`kernels`] hold the constrained simplex, the edge
//!   kernel `P(v)`, its stationary measures and its pseudo-inverse `Q(v)`;
//! * [`flow`] integrates the mean-field flow and evaluates the Lyapunov
//!   function `H`;
//! * [`equilibria`] enumerates all equilibria and classifies their
//!   stability;
//! * [`experiment`] drives all of the above from a configuration and writes
//!   CSV / JSON reports (the `vrnbw` binary is a thin wrapper over it).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibria;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod kernels;
mod linalg;
pub mod measures;
pub mod walk;

pub use error::{Error, Result};
pub use measures::{ProbabilityMeasure, SigmaMembership, SigmaSet, SignedMeasure};
