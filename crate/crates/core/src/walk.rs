//! Simulation of the vertex-reinforced non-backtracking walk.
//!
//! From the oriented edge `(X_{n-1}, X_n)` the walk moves to a neighbour `k`
//! of `X_n` other than `X_{n-1}` with probability proportional to
//! `W(Z_n(k)) = (1 + Z_n(k))^alpha`, where `Z_n(k)` counts the visits to `k`
//! among `X_1, .., X_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::pow_alpha;
use crate::measures::sup_distance;

/// A simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    complete: bool,
}

impl Graph {
    pub fn complete(n: usize) -> Self {
        Self {
            adjacency: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
            complete: true,
        }
    }

    /// Builds a graph from undirected edges. Duplicates are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a},{b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Config(format!("self-loop at {a}")));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        adjacency.iter_mut().for_each(|l| l.sort_unstable());
        let complete = adjacency.iter().all(|l| l.len() + 1 == n);
        Ok(Self {
            adjacency,
            complete,
        })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }
}

/// Deterministic generator for run `run` of an experiment with base seed
/// `seed`. Each run owns its seed `seed + run`, so adding runs never changes
/// earlier ones.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(run))
}

#[derive(Debug, Clone)]
pub struct WalkState {
    graph: Graph,
    alpha: f64,
    prev: usize,
    current: usize,
    step: u64,
    counts: Vec<u64>,
    /// `W(counts[i])`, refreshed on every visit.
    weights: Vec<f64>,
    last_visit: Vec<u64>,
    max_count: u64,
    tail: Vec<usize>,
    rng: ChaCha8Rng,
}

const TAIL_LEN: usize = 32;

/// Starts a walk: `X_0 = start` (uniform if absent), `X_1` uniform among the
/// neighbours of `X_0`. Complete graphs need `n >= 4`, other graphs minimum
/// degree 2.
pub fn init_walk(graph: Graph, alpha: f64, seed: u64, start: Option<usize>) -> Result<WalkState> {
    if graph.is_complete() && graph.vertices() < 4 {
        return Err(Error::Config(format!(
            "complete graph needs at least 4 vertices, got {}",
            graph.vertices()
        )));
    }
    if graph.min_degree() < 2 {
        return Err(Error::Config(format!(
            "minimum degree is {}, the walk could be trapped",
            graph.min_degree()
        )));
    }
    init_walk_unchecked(graph, alpha, run_rng(seed, 0), start)
}

/// [`init_walk`] without the degree check, with an explicit generator.
pub fn init_walk_unchecked(
    graph: Graph,
    alpha: f64,
    mut rng: ChaCha8Rng,
    start: Option<usize>,
) -> Result<WalkState> {
    let n = graph.vertices();
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("invalid alpha {alpha}")));
    }
    let x0 = match start {
        Some(s) if s >= n => return Err(Error::Config(format!("start {s} outside 0..{n}"))),
        Some(s) => s,
        None => rng.random_range(0..n),
    };
    if graph.degree(x0) == 0 {
        return Err(Error::DeadEnd {
            vertex: x0,
            step: 0,
            tail: vec![x0],
        });
    }
    let x1 = graph.neighbours(x0)[rng.random_range(0..graph.degree(x0))];
    let mut counts = vec![0; n];
    counts[x1] = 1;
    let mut last_visit = vec![0; n];
    last_visit[x1] = 1;
    let weights = counts.iter().map(|c| w(*c, alpha)).collect();
    Ok(WalkState {
        graph,
        alpha,
        prev: x0,
        current: x1,
        step: 1,
        counts,
        weights,
        last_visit,
        max_count: 1,
        tail: vec![x0, x1],
        rng,
    })
}

#[inline]
fn w(count: u64, alpha: f64) -> f64 {
    pow_alpha(1.0 + count as f64, alpha)
}

impl WalkState {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// `(X_{n-1}, X_n)`.
    pub fn edge(&self) -> (usize, usize) {
        (self.prev, self.current)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Steps at which each vertex was last visited (0 if never).
    pub fn last_visits(&self) -> &[u64] {
        &self.last_visit
    }

    /// The last few visited vertices, oldest first.
    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    /// `v_n(i) = (1 + Z_n(i)) / (n + N)`.
    pub fn occupation(&self) -> Vec<f64> {
        let denom = (self.step + self.vertices() as u64) as f64;
        self.counts.iter().map(|c| (1 + c) as f64 / denom).collect()
    }

    /// Numerators `(n + N) v_n(i) = 1 + Z_n(i)`.
    pub fn occupation_numerators(&self) -> Vec<u64> {
        self.counts.iter().map(|c| 1 + c).collect()
    }

    pub fn vertices(&self) -> usize {
        self.graph.vertices()
    }

    /// `max v_n <= (n + 5) / (3 (n + N))`, checked in integers as
    /// `3 (1 + max Z_n) <= n + 5`.
    pub fn occupation_bound_holds(&self) -> bool {
        3 * (1 + self.max_count) <= self.step + 5
    }

    /// The law of `X_{n+1}` given the current state, as `(vertex, prob)`.
    pub fn next_step_law(&self) -> Vec<(usize, f64)> {
        let cands: Vec<usize> = self
            .graph
            .neighbours(self.current)
            .iter()
            .copied()
            .filter(|&k| k != self.prev)
            .collect();
        let total: f64 = cands.iter().map(|&k| self.weights[k]).sum();
        cands
            .into_iter()
            .map(|k| (k, self.weights[k] / total))
            .collect()
    }

    /// Samples `X_{n+1}` without changing the state.
    pub fn sample_next(&mut self) -> Result<usize> {
        let neighbours = self.graph.neighbours(self.current);
        let mut total = 0.0;
        let mut last = None;
        for &k in neighbours {
            if k != self.prev {
                total += self.weights[k];
                last = Some(k);
            }
        }
        let Some(last) = last else {
            return Err(Error::DeadEnd {
                vertex: self.current,
                step: self.step,
                tail: self.tail.clone(),
            });
        };
        let mut u = self.rng.random::<f64>() * total;
        for &k in neighbours {
            if k != self.prev {
                u -= self.weights[k];
                if u < 0.0 {
                    return Ok(k);
                }
            }
        }
        Ok(last)
    }

    /// Advances the walk by one step and returns the new vertex.
    pub fn step(&mut self) -> Result<usize> {
        let next = self.sample_next()?;
        self.step += 1;
        self.prev = self.current;
        self.current = next;
        let c = &mut self.counts[next];
        *c += 1;
        self.max_count = self.max_count.max(*c);
        self.weights[next] = w(*c, self.alpha);
        self.last_visit[next] = self.step;
        if self.tail.len() == TAIL_LEN {
            self.tail.remove(0);
        }
        self.tail.push(next);
        Ok(next)
    }

    /// Vertices visited during the last `window` steps. A window longer than
    /// the run returns every visited vertex.
    pub fn detect_support(&self, window: u64) -> Vec<usize> {
        (0..self.vertices())
            .filter(|&i| self.counts[i] > 0 && self.step - self.last_visit[i] < window)
            .collect()
    }
}

/// `P(v_n)((X_{n-1}, X_n), (X_n, k))` for every `k`, built from the VRNBW
/// kernel formula `v_k^alpha / sum v_{k'}^alpha` rather than from the counts.
pub fn kernel_row_complete(state: &WalkState) -> Vec<(usize, f64)> {
    let v = state.occupation();
    let (i, j) = state.edge();
    let n = v.len();
    let denom: f64 = (0..n)
        .filter(|k| *k != i && *k != j)
        .map(|k| pow_alpha(v[k], state.alpha))
        .sum();
    (0..n)
        .filter(|k| *k != i && *k != j)
        .map(|k| (k, pow_alpha(v[k], state.alpha) / denom))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub step: u64,
    pub vertex: usize,
    pub counts: Vec<u64>,
    pub occupation: Vec<f64>,
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub snapshots: Vec<Snapshot>,
    /// Steps at which the occupation bound failed (should stay empty on
    /// complete graphs).
    pub bound_violations: Vec<u64>,
}

impl WalkState {
    fn snapshot(&self, window: u64) -> Snapshot {
        Snapshot {
            step: self.step,
            vertex: self.current,
            counts: self.counts.clone(),
            occupation: self.occupation(),
            support: self.detect_support(window),
        }
    }
}

/// Advances `n_steps` steps, checking the occupation bound after every step
/// and recording a snapshot every `record_every` steps.
pub fn run(
    state: &mut WalkState,
    n_steps: u64,
    record_every: u64,
    window: u64,
) -> Result<TrajectorySummary> {
    if n_steps == 0 || record_every == 0 {
        return Err(Error::Config(
            "steps and record interval must be positive".into(),
        ));
    }
    let mut summary = TrajectorySummary {
        snapshots: Vec::new(),
        bound_violations: Vec::new(),
    };
    let check = state.graph.is_complete();
    for s in 1..=n_steps {
        state.step()?;
        if check && !state.occupation_bound_holds() {
            summary.bound_violations.push(state.step);
        }
        if s % record_every == 0 || s == n_steps {
            summary.snapshots.push(state.snapshot(window));
        }
    }
    Ok(summary)
}

/// Default support window, `max(10 N, 500)` steps.
pub fn default_window(n: usize) -> u64 {
    (10 * n as u64).max(500)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationConfig {
    pub alpha: f64,
    pub n: usize,
    pub steps: u64,
    pub runs: usize,
    pub window: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub support: Vec<usize>,
    /// `max_i |v_n(i) - mu_S(i)|` for the detected support `S`.
    pub sup_dev: f64,
    /// Distance to the barycenter of the whole simplex.
    pub sup_dev_uniform: f64,
    pub bound_ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub config: LocalizationConfig,
    pub outcomes: Vec<RunOutcome>,
}

impl LocalizationReport {
    /// `histogram()[k]` is the number of successful runs with `|S| = k`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.config.n + 1];
        for o in self.outcomes.iter().filter(|o| o.error.is_none()) {
            h[o.support.len()] += 1;
        }
        h
    }

    /// Fraction of all runs whose detected support has `size` vertices.
    pub fn frequency(&self, size: usize) -> f64 {
        self.histogram().get(size).copied().unwrap_or(0) as f64 / self.outcomes.len() as f64
    }
}

/// One localization run on `K_n`.
pub fn localization_run(cfg: &LocalizationConfig, run: usize) -> RunOutcome {
    let seed = cfg.seed.wrapping_add(run as u64);
    let mut outcome = RunOutcome {
        run,
        seed,
        support: Vec::new(),
        sup_dev: f64::NAN,
        sup_dev_uniform: f64::NAN,
        bound_ok: true,
        error: None,
    };
    let result = (|| -> Result<()> {
        let mut state = init_walk_unchecked(
            Graph::complete(cfg.n),
            cfg.alpha,
            run_rng(cfg.seed, run as u64),
            None,
        )?;
        for _ in 1..cfg.steps {
            state.step()?;
            outcome.bound_ok &= state.occupation_bound_holds();
        }
        let v = state.occupation();
        let support = state.detect_support(cfg.window);
        let mut target = vec![0.0; cfg.n];
        for &i in &support {
            target[i] = 1.0 / support.len() as f64;
        }
        outcome.sup_dev = sup_distance(&v, &target);
        outcome.sup_dev_uniform = sup_distance(&v, &vec![1.0 / cfg.n as f64; cfg.n]);
        outcome.support = support;
        Ok(())
    })();
    if let Err(e) = result {
        outcome.error = Some(e.to_string());
    }
    outcome
}

/// Runs `cfg.runs` independent walks of `cfg.steps` steps in parallel. Run
/// failures are recorded in their outcome and do not stop the experiment.
pub fn monte_carlo_localization(cfg: &LocalizationConfig) -> Result<LocalizationReport> {
    if cfg.n < 4 {
        return Err(Error::Config(format!(
            "n must be at least 4, got {}",
            cfg.n
        )));
    }
    if cfg.runs == 0 || cfg.steps == 0 || cfg.window == 0 {
        return Err(Error::Config(
            "runs, steps and window must be positive".into(),
        ));
    }
    if !(cfg.alpha >= 1.0) {
        return Err(Error::Config(format!(
            "alpha must be at least 1, got {}",
            cfg.alpha
        )));
    }
    let outcomes = (0..cfg.runs)
        .into_par_iter()
        .map(|r| localization_run(cfg, r))
        .collect();
    Ok(LocalizationReport {
        config: cfg.clone(),
        outcomes,
    })
}

/// Lower bound on the probability that the walk started at `X_0 = i_L`
/// follows the cycle `(i_1, .., i_L)` forever.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBound {
    /// Exact probability of the first loop `X_1 = i_1, .., X_L = i_L`.
    pub first_loop: f64,
    /// `first_loop * prod_{k <= k_max} prod_l W(k) / (W(k) + a_l)`.
    pub truncated: f64,
    /// `truncated * exp(-tail)`, a certified lower bound.
    pub lower: f64,
    /// Upper bound on `sum_{k > k_max} sum_l a_l / W(k)`.
    pub tail: f64,
    /// `1 - exp(-tail)`, the relative width of `[lower, truncated]`.
    pub tail_gap: f64,
    pub diagnostic: Option<String>,
}

fn check_cycle(graph: &Graph, cycle: &[usize]) -> Result<()> {
    let l = cycle.len();
    if l < 3 {
        return Err(Error::domain("cycle needs at least three vertices"));
    }
    let n = graph.vertices();
    for (pos, &v) in cycle.iter().enumerate() {
        if v >= n || cycle[..pos].contains(&v) {
            return Err(Error::domain(format!(
                "invalid or repeated cycle vertex {v}"
            )));
        }
    }
    for pos in 0..l {
        let v = cycle[pos];
        let before = cycle[(pos + l - 1) % l];
        let after = cycle[(pos + 1) % l];
        if !graph.adjacent(v, before) || !graph.adjacent(v, after) {
            return Err(Error::domain(format!("cycle is not a path through {v}")));
        }
        let chords = graph
            .neighbours(v)
            .iter()
            .filter(|u| cycle.contains(u) && **u != before && **u != after)
            .count();
        if chords > 0 {
            return Err(Error::domain(format!(
                "vertex {v} has a neighbour on the cycle besides its two cycle neighbours"
            )));
        }
    }
    Ok(())
}

pub fn path_formation_lower_bound(
    graph: &Graph,
    cycle: &[usize],
    alpha: f64,
    k_max: u64,
) -> Result<PathBound> {
    check_cycle(graph, cycle)?;
    let l = cycle.len();
    let deg = |pos: usize| graph.degree(cycle[pos % l]) as f64;
    // From X_0 = i_L every neighbour has weight W(0); afterwards the previous
    // vertex is excluded and the target still has no visits.
    let mut first_loop = 1.0 / deg(l - 1);
    for pos in 0..l - 1 {
        first_loop /= deg(pos) - 1.0;
    }
    if alpha <= 1.0 {
        return Ok(PathBound {
            first_loop,
            truncated: 0.0,
            lower: 0.0,
            tail: f64::INFINITY,
            tail_gap: 1.0,
            diagnostic: Some(format!(
                "sum of 1/W(k) diverges for alpha = {alpha}: the cycle is left almost surely"
            )),
        });
    }
    let a: Vec<f64> = (0..l).map(|p| deg(p) - 2.0).collect();
    let a_sum: f64 = a.iter().sum();
    let mut log_prod = 0.0;
    for k in 1..=k_max {
        let wk = pow_alpha(1.0 + k as f64, alpha);
        log_prod -= a.iter().map(|al| (al / wk).ln_1p()).sum::<f64>();
    }
    let truncated = first_loop * log_prod.exp();
    // sum_{k > K} (1 + k)^{-alpha} <= int_K^inf (1 + x)^{-alpha} dx.
    let tail = a_sum * (1.0 + k_max as f64).powf(1.0 - alpha) / (alpha - 1.0);
    Ok(PathBound {
        first_loop,
        truncated,
        lower: truncated * (-tail).exp(),
        tail,
        tail_gap: -(-tail).exp_m1(),
        diagnostic: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleFollowing {
    pub runs: usize,
    pub successes: usize,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
}

/// Fraction of walks started at `X_0 = i_L` whose first `loops` turns all
/// follow `cycle` in order.
pub fn cycle_following_frequency(
    graph: &Graph,
    cycle: &[usize],
    alpha: f64,
    loops: usize,
    runs: usize,
    seed: u64,
) -> Result<CycleFollowing> {
    check_cycle(graph, cycle)?;
    let l = cycle.len();
    let successes: Result<Vec<bool>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut st = init_walk_unchecked(
                graph.clone(),
                alpha,
                run_rng(seed, r as u64),
                Some(cycle[l - 1]),
            )?;
            if st.current != cycle[0] {
                return Ok(false);
            }
            for s in 1..loops * l {
                if st.step()? != cycle[s % l] {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect();
    let successes = successes?.into_iter().filter(|x| *x).count();
    let p = successes as f64 / runs as f64;
    Ok(CycleFollowing {
        runs,
        successes,
        frequency: p,
        std_error: (p * (1.0 - p) / runs as f64).sqrt(),
    })
}
