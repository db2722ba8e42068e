//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! nonzero status if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vrnbw::equilibria::{
    beta_threshold, classify_stability, count_d, differential_df, uniform_equilibrium, Direction,
};
use vrnbw::flow::{integrate_flow, lyapunov, lyapunov_gradient, vector_field, FlowConfig};
use vrnbw::kernels::{
    build_vrnbw_kernel, corner_perturbation, deviation, pseudo_inverse, stationary_closed_form,
    stationary_expansion_check, stationary_solve, taylor_limit_at_corner,
};
use vrnbw::measures::{sample_sigma_interior, sup_distance};
use vrnbw::walk::{
    cycle_following_frequency, init_walk_unchecked, monte_carlo_localization,
    path_formation_lower_bound, run_rng, Graph, LocalizationConfig,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn closed_form_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut pi_err, mut q_err, mut marginal_err) = (0.0f64, 0.0f64, 0.0f64);
    for alpha in [1.0, 1.5, 2.0, 4.0] {
        for i in 0..1000 {
            let n = 4 + i % 5;
            let v = sample_sigma_interior(n, &mut rng);
            let p = build_vrnbw_kernel(&v, alpha).unwrap();
            let solved = stationary_solve(&p).unwrap();
            let closed = stationary_closed_form(&v, alpha).unwrap();
            pi_err = pi_err.max(closed.edge.sup_distance(solved.values()));
            marginal_err = marginal_err.max(sup_distance(
                closed.vertex.values(),
                &common::pi_vertex_brute(v.values(), alpha),
            ));
            let q = pseudo_inverse(&p, &closed.edge).unwrap();
            q_err = q_err.max(q.residuals(&p, &closed.edge).max());
        }
    }
    outcome(
        pi_err <= 1e-10 && marginal_err <= 1e-10 && q_err <= 1e-9,
        format!("max |pi_closed - pi_solve| = {pi_err:.1e}, vertex marginal vs triple sum {marginal_err:.1e}, Q identities {q_err:.1e}"),
    )
}

fn occupation_bound() -> Outcome {
    let mut violations = 0usize;
    let mut inconsistent = 0usize;
    for n in [4, 6, 8] {
        for alpha in [1.0, 2.0, 4.0] {
            let (v, bad): (Vec<usize>, Vec<usize>) = (0..100u64)
                .into_par_iter()
                .map(|r| {
                    let mut st =
                        init_walk_unchecked(Graph::complete(n), alpha, run_rng(900, r), None)
                            .unwrap();
                    let mut count = 0;
                    while st.step_count() < 100_000 {
                        st.step().unwrap();
                        let max_num = *st.occupation_numerators().iter().max().unwrap();
                        if 3 * max_num > st.step_count() + 5 {
                            count += 1;
                        }
                    }
                    let total: u64 = st.counts().iter().sum();
                    (count, usize::from(total != st.step_count()))
                })
                .unzip();
            violations += v.iter().sum::<usize>();
            inconsistent += bad.iter().sum::<usize>();
        }
    }
    outcome(
        violations == 0 && inconsistent == 0,
        format!("{violations} violations over 9 x 100 runs of 1e5 steps, {inconsistent} count mismatches"),
    )
}

fn phase_transition() -> Outcome {
    let loc = |alpha, n, steps, runs| {
        monte_carlo_localization(&LocalizationConfig {
            alpha,
            n,
            steps,
            runs,
            window: 1000,
            seed: 31,
        })
        .unwrap()
    };
    let strong = loc(4.0, 6, 100_000, 200);
    let s3 = strong.frequency(3);
    let s4plus: f64 = (4..=6).map(|k| strong.frequency(k)).sum();

    let mid = loc(2.0, 6, 100_000, 200);
    let (m3, m4, m6) = (mid.frequency(3), mid.frequency(4), mid.frequency(6));

    let weak = loc(1.0, 5, 1_000_000, 20);
    let near_uniform = weak
        .outcomes
        .iter()
        .filter(|o| o.error.is_none() && o.sup_dev_uniform <= 0.02)
        .count() as f64
        / 20.0;

    let bound_ok = [&strong, &mid, &weak]
        .iter()
        .all(|r| r.outcomes.iter().all(|o| o.bound_ok && o.error.is_none()));
    outcome(
        s3 >= 0.95 && s4plus <= 0.05 && m3 >= 0.05 && m4 >= 0.05 && m6 <= 0.02
            && near_uniform >= 0.9 && bound_ok,
        format!(
            "alpha 4: |S|=3 {s3:.3}, |S|>=4 {s4plus:.3}; alpha 2: |S|=3 {m3:.3}, |S|=4 {m4:.3}, |S|=6 {m6:.3}; alpha 1: near uniform {near_uniform:.2}"
        ),
    )
}

fn stability_formulas() -> Outcome {
    let (mut spectrum_err, mut fd_err) = (0.0f64, 0.0f64);
    let mut direction_ok = true;
    for k in 3..=8usize {
        let n = k + 2;
        for alpha in [1.0, 1.5, 2.0, 3.0, 4.0, 5.0] {
            let kf = k as f64;
            let (on, off) = if alpha == 1.0 {
                (-2.0 / (kf - 1.0), 2.0 / (kf - 2.0))
            } else {
                (-1.0 + alpha * (kf - 3.0) / (kf - 1.0), -1.0)
            };
            let rec = uniform_equilibrium(k, n, alpha).unwrap();
            let report = classify_stability(&rec).unwrap();

            let mut expected: Vec<f64> = std::iter::repeat_n(on, k - 1)
                .chain(std::iter::repeat_n(off, n - k))
                .collect();
            expected.sort_by(f64::total_cmp);
            let got = report.all_eigenvalues();
            if got.len() != expected.len() {
                spectrum_err = f64::INFINITY;
                continue;
            }
            for (g, e) in got.iter().zip(&expected) {
                spectrum_err = spectrum_err.max((g - e).abs());
            }
            for g in &report.eigenvalues {
                let target = match g.direction {
                    Direction::Support => on,
                    Direction::OffSupport => off,
                };
                direction_ok &= (g.value - target).abs() <= 1e-9;
            }

            let jac = differential_df(&rec).unwrap();
            let fd = common::fd_jacobian(rec.vector.values(), alpha, 1e-6);
            for i in 0..n {
                for j in 0..n {
                    fd_err = fd_err.max((jac[(i, j)] - fd[i][j]).abs());
                }
            }
        }
    }
    outcome(
        spectrum_err <= 1e-9 && fd_err <= 1e-6 && direction_ok,
        format!(
            "spectrum vs closed forms {spectrum_err:.1e}, Jacobian vs finite differences {fd_err:.1e}"
        ),
    )
}

fn count_table() -> Outcome {
    let cells = [(1, 4), (2, 5), (3, 6), (3, 7), (3, 8), (4, 7)];
    let xs: Vec<f64> = (0..10_000)
        .map(|i| 10f64.powf(-8.0 + 308.0 * i as f64 / 9_999.0))
        .collect();
    let (mut checked, mut oracle_mismatch, mut table_mismatch, mut windows) = (0, 0, 0, 0);
    let mut max_gap = 0.0f64;
    for (k, m) in cells {
        let levels: Vec<f64> = xs.iter().map(|&x| common::branch_level(k, m, x)).collect();
        let beta_m = 2.0 / (m as f64 - 1.0);
        let threshold = beta_threshold(k, m).unwrap();
        let mut betas: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
        if let Some(b) = threshold.beta_km {
            betas.push(0.5 * (beta_m + b));
            let scan_max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max_gap = max_gap.max((scan_max - b).abs());
        }
        for beta in betas {
            let alpha = 1.0 / (1.0 - beta);
            let got = count_d(k, m, alpha).unwrap();
            let crossings = levels
                .windows(2)
                .filter(|w| (w[0] - beta).signum() != (w[1] - beta).signum())
                .count();
            let table = if k <= 2 {
                usize::from(beta > beta_m)
            } else if 2 * k >= m {
                usize::from(beta <= beta_m)
            } else {
                let b = threshold.beta_km.unwrap();
                if beta <= beta_m {
                    1
                } else if beta < b {
                    2
                } else {
                    0
                }
            };
            if got == 2 {
                windows += 1;
            }
            oracle_mismatch += usize::from(got != crossings);
            table_mismatch += usize::from(got != table);
            checked += 1;
        }
    }
    outcome(
        oracle_mismatch == 0 && table_mismatch == 0 && windows > 0 && max_gap < 1e-4,
        format!(
            "{checked} (cell, beta) pairs: {oracle_mismatch} scan mismatches, {table_mismatch} case-table mismatches, {windows} in the two-root window, beta_KM vs scan max {max_gap:.1e}"
        ),
    )
}

fn lyapunov_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphas = [1.0, 1.5, 2.0, 3.0, 4.0];
    let (mut nonpositive, mut tested) = (0usize, 0usize);
    let (mut grad_err, mut value_err) = (0.0f64, 0.0f64);
    for i in 0..10_000 {
        let n = 4 + i % 5;
        let alpha = alphas[rng.random_range(0..alphas.len())];
        let v = sample_sigma_interior(n, &mut rng);
        let f = vector_field(v.values(), alpha).unwrap();
        if f.iter().fold(0.0f64, |m, x| m.max(x.abs())) < 1e-8 {
            continue;
        }
        tested += 1;
        let g = lyapunov_gradient(v.values(), alpha).unwrap();
        let dot: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
        nonpositive += usize::from(dot.is_nan() || dot <= 0.0);
        let hb = common::h_brute(v.values(), alpha);
        value_err = value_err.max((lyapunov(v.values(), alpha) - hb).abs() / hb);
        if i % 10 == 0 {
            let fd = common::fd_gradient(v.values(), alpha, 1e-6);
            let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            grad_err = grad_err.max(sup_distance(&g, &fd) / scale);
        }
    }

    let cfg = FlowConfig::default();
    let (mut decreases, mut worst_drop) = (0usize, 0.0f64);
    for t in 0..100 {
        let n = 4 + t % 5;
        let alpha = [1.0, 1.5, 2.0, 3.0][t % 4];
        let v0 = sample_sigma_interior(n, &mut rng);
        let traj = integrate_flow(v0.values(), alpha, &cfg).unwrap();
        for w in traj.lyapunov.windows(2) {
            let drop = w[0] - w[1];
            worst_drop = worst_drop.max(drop);
            decreases += usize::from(drop > 1e-10);
        }
    }
    outcome(
        nonpositive == 0 && tested > 9_000 && grad_err <= 1e-6 && value_err <= 1e-12 && decreases == 0,
        format!(
            "<grad H, F> <= 0 at {nonpositive} of {tested} points, gradient vs FD {grad_err:.1e} (rel), H vs triple sum {value_err:.1e}, {decreases} steps with H dropping > 1e-10 over 100 RK4 runs (largest drop {worst_drop:.1e})"
        ),
    )
}

struct TaylorOrders {
    q_order: f64,
    q_worst: f64,
    non_monotone: usize,
    pi_lm_slack: f64,
}

fn corners(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn taylor_orders(alpha: f64) -> TaylorOrders {
    let eps = [1e-2, 1e-3, 1e-4];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut q_order, mut q_worst, mut pi_lm_slack) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    let mut non_monotone = 0;
    for n in [4, 5, 6] {
        for corner in corners(n) {
            for _ in 0..20 {
                let a = common::random_unit_box(n, &mut rng);
                let u = common::random_positive(3, &mut rng);
                let w = common::random_positive(n - 3, &mut rng);
                let limit = taylor_limit_at_corner(corner, &a).unwrap();
                let mut q_err = [0.0; 3];
                let mut pi_lm = [0.0; 3];
                for (e, &eps) in eps.iter().enumerate() {
                    let v = corner_perturbation(corner, n, eps, &u, &w).unwrap();
                    q_err[e] = sup_distance(&deviation(&v, alpha, &a).unwrap(), &limit);
                    pi_lm[e] = stationary_expansion_check(&v, alpha).unwrap().pi_lm;
                }
                q_worst = q_worst.max(q_err[2]);
                // Least-squares slope of log error against log eps over the
                // three decades; any increase between neighbours fails.
                let monotone = q_err[0] > q_err[1] && q_err[1] > q_err[2];
                non_monotone += usize::from(!monotone);
                let slope = (q_err[0] / q_err[2]).log10() / 2.0;
                q_order = q_order.min(if monotone { slope } else { f64::NEG_INFINITY });
                for e in 0..2 {
                    if n >= 5 {
                        let order = (pi_lm[e] / pi_lm[e + 1]).log10();
                        pi_lm_slack = pi_lm_slack.min(order - (alpha + 0.8));
                    }
                }
            }
        }
    }
    TaylorOrders {
        q_order,
        q_worst,
        non_monotone,
        pi_lm_slack,
    }
}

fn taylor_limits() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 1.5, 2.0] {
        let t = taylor_orders(alpha);
        pass &= t.q_order >= 0.8 && t.pi_lm_slack >= 0.0;
        parts.push(format!(
            "alpha {alpha}: Q order {:.2}, pi_lm order - (alpha + 0.8) = {:.2}",
            t.q_order, t.pi_lm_slack
        ));
    }
    outcome(pass, parts.join("; "))
}

fn path_bound() -> Outcome {
    let graph = Graph::complete(4);
    let cycle = [0, 1, 2];
    let b = path_formation_lower_bound(&graph, &cycle, 2.0, 1_000_000).unwrap();
    // Direct product: each of the 3 cycle vertices has one off-cycle
    // neighbour of weight 1 against the cycle vertex's (1 + k)^2.
    let mut direct = 1.0 / 12.0;
    for k in 1..=1_000_000u64 {
        let w = ((1 + k) as f64).powi(2);
        direct *= (w / (w + 1.0)).powi(3);
    }
    let product_err = (direct - b.truncated).abs() / direct;
    let mc = cycle_following_frequency(&graph, &cycle, 2.0, 50, 100_000, 2).unwrap();
    let sigma = (b.truncated * (1.0 - b.truncated) / mc.runs as f64).sqrt();
    outcome(
        b.lower > 0.0 && b.tail_gap < 1e-4 && b.tail < 1e-4 && product_err < 1e-9
            && mc.frequency >= b.truncated - 3.0 * sigma,
        format!(
            "truncated {:.6}, lower {:.6}, tail gap {:.1e}, direct product rel err {product_err:.1e}, 50 loops in {:.5} of {} runs",
            b.truncated, b.lower, b.tail_gap, mc.frequency, mc.runs
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "closed form vs linear solve and Q identities",
            closed_form_agreement,
        ),
        ("occupation bound at every step", occupation_bound),
        ("phase transition in the support size", phase_transition),
        ("spectrum at uniform equilibria", stability_formulas),
        ("two-level equilibrium counts", count_table),
        ("strict Lyapunov function", lyapunov_property),
        ("limits of Q at three-point corners", taylor_limits),
        ("path-formation lower bound", path_bound),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }

    // Outside the accepted range: the corner limit at alpha = 3, where the
    // kernel becomes too ill-conditioned at eps = 1e-4.
    let t = taylor_orders(3.0);
    println!(
        "INFO limits of Q at three-point corners, alpha 3: {} of 680 cases not decreasing, worst error at eps 1e-4 {:.1e}",
        t.non_monotone, t.q_worst
    );

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
