//! Configuration-driven experiments writing CSV (or JSON) reports plus a
//! JSON run manifest. The `vrnbw` binary is a thin wrapper around
//! [`run_experiment`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{classify_stability, enumerate_equilibria, EquilibriumRecord};
use crate::error::{Error, Result};
use crate::flow::{integrate_flow, FlowConfig};
use crate::kernels::{
    corner_perturbation, deviation, stationary_expansion_check, taylor_limit_at_corner,
};
use crate::measures::sample_sigma_interior;
use crate::walk::{
    cycle_following_frequency, default_window, init_walk, monte_carlo_localization,
    path_formation_lower_bound, run, run_rng, Graph, LocalizationConfig,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "VRNBW_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    #[default]
    Localize,
    Sweep,
    Flow,
    Equilibria,
    Stability,
    TaylorCheck,
    PathBound,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Localize => "localize",
            Mode::Sweep => "sweep",
            Mode::Flow => "flow",
            Mode::Equilibria => "equilibria",
            Mode::Stability => "stability",
            Mode::TaylorCheck => "taylor-check",
            Mode::PathBound => "path-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub alpha: f64,
    /// Grid used by `sweep`.
    pub alphas: Vec<f64>,
    pub steps: u64,
    pub runs: usize,
    /// Support window; `max(10 n, 500)` when absent.
    pub window: Option<u64>,
    pub seed: u64,
    /// Snapshot interval for `simulate`.
    pub record_every: u64,
    /// Output directory; falls back to `$VRNBW_OUTPUT_DIR`, then `out`.
    pub output: Option<PathBuf>,
    pub format: Format,
    pub flow: FlowConfig,
    /// Number of random initial conditions for `flow`.
    pub trajectories: usize,
    /// Perturbation sizes for `taylor-check`.
    pub epsilons: Vec<f64>,
    /// Random test functions per corner for `taylor-check`.
    pub vectors: usize,
    pub cycle: Vec<usize>,
    pub k_max: u64,
    /// Loops the walk must complete in the `path-bound` Monte Carlo.
    pub loops: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Localize,
            n: 6,
            alpha: 2.0,
            alphas: vec![1.0, 1.5, 2.0, 3.0, 4.0],
            steps: 100_000,
            runs: 100,
            window: None,
            seed: 0,
            record_every: 1_000,
            output: None,
            format: Format::Csv,
            flow: FlowConfig::default(),
            trajectories: 10,
            epsilons: vec![1e-2, 1e-3, 1e-4],
            vectors: 20,
            cycle: vec![0, 1, 2],
            k_max: 1_000_000,
            loops: 50,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads TOML or JSON, chosen by extension (`.json`, otherwise TOML).
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        }
    }

    pub fn window(&self) -> u64 {
        self.window.unwrap_or_else(|| default_window(self.n))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(config_err(format!("n must be at least 4, got {}", self.n)));
        }
        let alphas: Vec<f64> = if self.mode == Mode::Sweep {
            if self.alphas.is_empty() {
                return Err(config_err("sweep needs a nonempty alpha grid"));
            }
            self.alphas.clone()
        } else {
            vec![self.alpha]
        };
        if let Some(a) = alphas.iter().find(|a| !(**a >= 1.0) || !a.is_finite()) {
            return Err(config_err(format!(
                "alpha must be finite and at least 1, got {a}"
            )));
        }
        if self.steps == 0 || self.runs == 0 || self.record_every == 0 || self.window() == 0 {
            return Err(config_err(
                "steps, runs, window and record_every must be positive",
            ));
        }
        match self.mode {
            Mode::Flow => {
                self.flow.validate()?;
                if self.trajectories == 0 {
                    return Err(config_err("trajectories must be positive"));
                }
            }
            Mode::TaylorCheck => {
                if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || self.epsilons.is_empty()
                {
                    return Err(config_err("epsilons must be a nonempty list in (0, 1)"));
                }
                if self.vectors == 0 {
                    return Err(config_err("vectors must be positive"));
                }
            }
            Mode::PathBound => {
                if self.loops == 0 || self.k_max == 0 {
                    return Err(config_err("loops and k_max must be positive"));
                }
                if self.cycle.iter().any(|&v| v >= self.n) {
                    return Err(config_err("cycle vertex outside 0..n"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// `(3 alpha - 1) / (alpha - 1)`, infinite at `alpha = 1`: supports of size
/// `3 <= K < bound` can carry the limit.
pub fn admissible_bound(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        f64::INFINITY
    } else {
        (3.0 * alpha - 1.0) / (alpha - 1.0)
    }
}

pub fn is_admissible(k: usize, alpha: f64) -> bool {
    k >= 3 && (k as f64) < admissible_bound(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub crate_version: &'static str,
    pub wall_time_secs: f64,
    pub files: Vec<PathBuf>,
    /// Per-run failures that did not abort the experiment.
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SimulateRow {
    pub seed: u64,
    pub step: u64,
    pub vertex: usize,
    pub occupation: f64,
    pub visits: u64,
}

#[derive(Debug, Serialize)]
pub struct LocalizeRow {
    pub seed: u64,
    #[serde(rename = "S_size")]
    pub s_size: usize,
    pub sup_dev_from_uniform: f64,
    pub max_v_bound_ok: bool,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub frequency: f64,
    pub admissible: bool,
}

#[derive(Debug, Serialize)]
pub struct FlowTrajectoryRow {
    pub trajectory: usize,
    pub time: f64,
    pub lyapunov: f64,
    pub field_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct FlowStateRow {
    pub trajectory: usize,
    pub time: f64,
    pub vertex: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct EquilibriumRow {
    pub kind: &'static str,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub orbit_size: u64,
    pub p: f64,
    pub high: f64,
    pub low: f64,
    pub x: f64,
    pub residual: f64,
    /// `value:multiplicity` pairs joined by `;`, increasing.
    pub eigenvalues: String,
    pub classification: &'static str,
}

#[derive(Debug, Serialize)]
pub struct StabilityRow {
    pub kind: &'static str,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub direction: &'static str,
    pub classification: &'static str,
}

#[derive(Debug, Serialize)]
pub struct TaylorRow {
    pub corner: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub q_error: f64,
    pub pi_ij_residual: f64,
    pub pi_il_residual: f64,
    pub pi_lm_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct PathBoundRow {
    pub n: usize,
    pub alpha: f64,
    pub cycle: String,
    pub k_max: u64,
    pub first_loop: f64,
    pub truncated: f64,
    pub lower: f64,
    pub tail_gap: f64,
    pub mc_loops: usize,
    pub mc_runs: usize,
    pub mc_frequency: f64,
}

/// Writes `rows` as `<dir>/<stem>.csv` or `<stem>.json`.
pub fn write_rows<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    rows: &[T],
) -> Result<PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            fs::write(&path, serde_json::to_string_pretty(rows)?)?;
            Ok(path)
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    format: Format,
    files: Vec<PathBuf>,
    failures: Vec<String>,
}

impl Outputs<'_> {
    fn write<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        let p = write_rows(self.dir, stem, self.format, rows)?;
        self.files.push(p);
        Ok(())
    }
}

fn joined(items: &[usize], sep: &str) -> String {
    items
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut state = init_walk(Graph::complete(cfg.n), cfg.alpha, cfg.seed, None)?;
    let summary = run(&mut state, cfg.steps, cfg.record_every, cfg.window())?;
    for step in &summary.bound_violations {
        out.failures
            .push(format!("occupation bound violated at step {step}"));
    }
    let rows: Vec<SimulateRow> = summary
        .snapshots
        .iter()
        .flat_map(|s| {
            (0..cfg.n).map(move |i| SimulateRow {
                seed: cfg.seed,
                step: s.step,
                vertex: i,
                occupation: s.occupation[i],
                visits: s.counts[i],
            })
        })
        .collect();
    out.write("simulate", &rows)
}

fn localization(cfg: &ExperimentConfig, alpha: f64) -> Result<crate::walk::LocalizationReport> {
    monte_carlo_localization(&LocalizationConfig {
        alpha,
        n: cfg.n,
        steps: cfg.steps,
        runs: cfg.runs,
        window: cfg.window(),
        seed: cfg.seed,
    })
}

fn localize(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let report = localization(cfg, cfg.alpha)?;
    for o in &report.outcomes {
        if let Some(e) = &o.error {
            out.failures
                .push(format!("run {} (seed {}): {e}", o.run, o.seed));
        }
    }
    let rows: Vec<LocalizeRow> = report
        .outcomes
        .iter()
        .filter(|o| o.error.is_none())
        .map(|o| LocalizeRow {
            seed: o.seed,
            s_size: o.support.len(),
            sup_dev_from_uniform: o.sup_dev,
            max_v_bound_ok: o.bound_ok,
        })
        .collect();
    out.write("localize", &rows)
}

/// Per-alpha localization frequencies over `|S| in 3..=n`, annotated with
/// the admissible band `3 <= K < (3 alpha - 1)/(alpha - 1)`.
pub fn alpha_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let report = localization(cfg, alpha)?;
        for k in 3..=cfg.n {
            rows.push(SweepRow {
                alpha,
                n: cfg.n,
                k,
                frequency: report.frequency(k),
                admissible: is_admissible(k, alpha),
            });
        }
    }
    Ok(rows)
}

fn flow(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let records: Vec<_> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|t| {
            let mut rng = run_rng(cfg.seed, t as u64);
            let v0 = sample_sigma_interior(cfg.n, &mut rng);
            integrate_flow(v0.values(), cfg.alpha, &cfg.flow)
        })
        .collect::<Result<_>>()?;
    let mut traj = Vec::new();
    let mut states = Vec::new();
    for (t, rec) in records.iter().enumerate() {
        for (s, &time) in rec.times.iter().enumerate() {
            traj.push(FlowTrajectoryRow {
                trajectory: t,
                time,
                lyapunov: rec.lyapunov[s],
                field_norm: rec.field_norms[s],
            });
            for (vertex, &value) in rec.states[s].iter().enumerate() {
                states.push(FlowStateRow {
                    trajectory: t,
                    time,
                    vertex,
                    value,
                });
            }
        }
    }
    out.write("flow_trajectory", &traj)?;
    out.write("flow_states", &states)
}

/// 12 significant digits, with values below 1e-12 printed as 0.
fn short_float(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r.abs() < 1e-12 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn profile(rec: &EquilibriumRecord) -> (usize, usize) {
    rec.kind.profile()
}

fn equilibria(cfg: &ExperimentConfig, out: &mut Outputs, with_stability: bool) -> Result<()> {
    let records = enumerate_equilibria(cfg.n, cfg.alpha)?;
    let mut eq_rows = Vec::new();
    let mut st_rows = Vec::new();
    for rec in &records {
        let rep = classify_stability(rec)?;
        let (k, m) = profile(rec);
        let eigenvalues = rep
            .eigenvalues
            .iter()
            .map(|g| format!("{}:{}", short_float(g.value), g.multiplicity))
            .collect::<Vec<_>>()
            .join(";");
        eq_rows.push(EquilibriumRow {
            kind: rec.kind.label(),
            k,
            m,
            orbit_size: rec.orbit_size,
            p: rec.p,
            high: rec.high,
            low: rec.low,
            x: rec.x,
            residual: rec.residual,
            eigenvalues,
            classification: rep.classification.label(),
        });
        for g in &rep.eigenvalues {
            st_rows.push(StabilityRow {
                kind: rec.kind.label(),
                k,
                m,
                eigenvalue: g.value,
                multiplicity: g.multiplicity,
                direction: g.direction.label(),
                classification: rep.classification.label(),
            });
        }
    }
    if with_stability {
        out.write("stability", &st_rows)
    } else {
        out.write("equilibria", &eq_rows)
    }
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

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// For every corner of `K_n` and every `eps`, the largest deviation of
/// `Q(v) V a` from its corner limit over `cfg.vectors` random `a`, and the
/// expansion residuals of `pi(v)`.
pub fn taylor_rows(cfg: &ExperimentConfig) -> Result<Vec<TaylorRow>> {
    let n = cfg.n;
    let jobs: Vec<(usize, [usize; 3])> = corners(n).into_iter().enumerate().collect();
    let per_corner: Vec<Vec<TaylorRow>> = jobs
        .into_par_iter()
        .map(|(ci, corner)| {
            let mut rng = run_rng(cfg.seed, ci as u64);
            let u: Vec<f64> = (0..3).map(|_| 0.5 + rng.random::<f64>()).collect();
            let w: Vec<f64> = (0..n - 3).map(|_| 0.5 + rng.random::<f64>()).collect();
            let tests: Vec<Vec<f64>> = (0..cfg.vectors)
                .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let limits: Vec<Vec<f64>> = tests
                .iter()
                .map(|a| taylor_limit_at_corner(corner, a))
                .collect::<Result<_>>()?;
            cfg.epsilons
                .iter()
                .map(|&eps| {
                    let v = corner_perturbation(corner, n, eps, &u, &w)?;
                    let mut q_error: f64 = 0.0;
                    for (a, lim) in tests.iter().zip(&limits) {
                        q_error = q_error.max(sup(&deviation(&v, cfg.alpha, a)?, lim));
                    }
                    let exp = stationary_expansion_check(&v, cfg.alpha)?;
                    Ok(TaylorRow {
                        corner: joined(&corner, "-"),
                        n,
                        alpha: cfg.alpha,
                        epsilon: eps,
                        q_error,
                        pi_ij_residual: exp.pi_ij,
                        pi_il_residual: exp.pi_il_relative,
                        pi_lm_residual: exp.pi_lm,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_corner.into_iter().flatten().collect())
}

pub fn path_bound_row(cfg: &ExperimentConfig) -> Result<PathBoundRow> {
    let graph = Graph::complete(cfg.n);
    let bound = path_formation_lower_bound(&graph, &cfg.cycle, cfg.alpha, cfg.k_max)?;
    let mc =
        cycle_following_frequency(&graph, &cfg.cycle, cfg.alpha, cfg.loops, cfg.runs, cfg.seed)?;
    Ok(PathBoundRow {
        n: cfg.n,
        alpha: cfg.alpha,
        cycle: joined(&cfg.cycle, "-"),
        k_max: cfg.k_max,
        first_loop: bound.first_loop,
        truncated: bound.truncated,
        lower: bound.lower,
        tail_gap: bound.tail_gap,
        mc_loops: cfg.loops,
        mc_runs: cfg.runs,
        mc_frequency: mc.frequency,
    })
}

/// Validates `cfg`, runs its mode and writes the reports and
/// `manifest.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let mut out = Outputs {
        dir: &dir,
        format: cfg.format,
        files: Vec::new(),
        failures: Vec::new(),
    };
    match cfg.mode {
        Mode::Simulate => simulate(cfg, &mut out)?,
        Mode::Localize => localize(cfg, &mut out)?,
        Mode::Sweep => {
            let rows = alpha_sweep(cfg)?;
            out.write("alpha_sweep", &rows)?
        }
        Mode::Flow => flow(cfg, &mut out)?,
        Mode::Equilibria => equilibria(cfg, &mut out, false)?,
        Mode::Stability => equilibria(cfg, &mut out, true)?,
        Mode::TaylorCheck => {
            let rows = taylor_rows(cfg)?;
            out.write("taylor", &rows)?
        }
        Mode::PathBound => {
            let row = path_bound_row(cfg)?;
            out.write("path_bound", &[row])?
        }
    }
    let manifest_path = dir.join("manifest.json");
    let mut manifest = RunManifest {
        config: cfg.clone(),
        crate_version: env!("CARGO_PKG_VERSION"),
        wall_time_secs: start.elapsed().as_secs_f64(),
        files: out.files,
        failures: out.failures,
    };
    manifest.files.push(manifest_path.clone());
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
