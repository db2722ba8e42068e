use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vrnbw::experiment::{run_experiment, ExperimentConfig, Format, Mode};
use vrnbw::flow::Integrator;
use vrnbw::Error;

/// Vertex-reinforced non-backtracking random walks: simulation and
/// mean-field analysis.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one walk and record the occupation measure.
    Simulate(Common),
    /// Monte Carlo histogram of the support size.
    Localize(Common),
    /// Localization frequencies over a grid of alpha values.
    Sweep(Common),
    /// Integrate the mean-field flow from random starts.
    Flow(Common),
    /// Enumerate all equilibria up to permutation.
    Equilibria(Common),
    /// Spectra of DF at every equilibrium.
    Stability(Common),
    /// Compare Q(v) near three-point corners with its limit.
    TaylorCheck(Common),
    /// Path-formation lower bound with a Monte Carlo check.
    PathBound(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Euler,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated alpha grid (sweep).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Output directory (default: $VRNBW_OUTPUT_DIR, then ./out).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Comma-separated perturbation sizes (taylor-check).
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    vectors: Option<usize>,
    /// Comma-separated cycle vertices (path-bound).
    #[arg(long, value_delimiter = ',')]
    cycle: Option<Vec<usize>>,
    #[arg(long)]
    k_max: Option<u64>,
    #[arg(long)]
    loops: Option<usize>,
}

impl Common {
    fn into_config(self, mode: Mode) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        c.mode = mode;
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        set!(
            n,
            alpha,
            alphas,
            steps,
            runs,
            seed,
            record_every,
            trajectories,
            epsilons,
            vectors,
            cycle,
            k_max,
            loops
        );
        if self.window.is_some() {
            c.window = self.window;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        if let Some(f) = self.format {
            c.format = match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
        }
        if let Some(i) = self.integrator {
            c.flow.integrator = match i {
                IntegratorArg::Rk4 => Integrator::Rk4,
                IntegratorArg::Euler => Integrator::Euler,
            };
        }
        if let Some(h) = self.step_size {
            c.flow.step_size = h;
        }
        if let Some(t) = self.max_time {
            c.flow.max_time = t;
        }
        if let Some(t) = self.tolerance {
            c.flow.tolerance = t;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (mode, common) = match cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::Localize(c) => (Mode::Localize, c),
        Command::Sweep(c) => (Mode::Sweep, c),
        Command::Flow(c) => (Mode::Flow, c),
        Command::Equilibria(c) => (Mode::Equilibria, c),
        Command::Stability(c) => (Mode::Stability, c),
        Command::TaylorCheck(c) => (Mode::TaylorCheck, c),
        Command::PathBound(c) => (Mode::PathBound, c),
    };
    let result = common
        .into_config(mode)
        .and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}", f.display());
            }
            for f in &manifest.failures {
                eprintln!("warning: {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
