use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bethe_cli::commands::{self, PatchArgs};
use bethe_cli::config::{load_model, ModelDesc};
use bethe_cli::experiment::spread;
use bethe_cli::{load_config, run_experiment, write_results, write_rows, ExperimentKind, ExperimentSpec, Result, Row};
use bethe_core::bp::{BPConfig, ScheduleKind};
use bethe_core::coding::Decoder;
use bethe_core::sbp::SBPConfig;
use bethe_core::{IsingModel, ParamSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bethe", version, about = "Loopy belief propagation experiments on binary pairwise models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model JSON file; overrides --graph, --j and --theta.
    #[arg(long)]
    model: Option<PathBuf>,
    /// grid:RxC, torus:RxC, complete:N, tree:N or random:N:AVG
    #[arg(long, default_value = "grid:3x3")]
    graph: ModelDesc,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    j: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Draw J ~ U(-|j|, |j|) and theta ~ U(-|theta|, |theta|).
    #[arg(long)]
    random_params: bool,
    /// Seed for random graphs and random parameters.
    #[arg(long, default_value_t = 0)]
    param_seed: u64,
}

impl ModelArgs {
    fn build(&self) -> Result<IsingModel> {
        if let Some(path) = &self.model {
            return load_model(path);
        }
        let (j, theta) = if self.random_params {
            (spread(self.j), spread(self.theta))
        } else {
            (ParamSpec::Uniform(self.j), ParamSpec::Uniform(self.theta))
        };
        self.graph.build(&j, &theta, self.param_seed)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Synchronous,
    RoundRobin,
    Random,
    Rbp,
    Wdbp,
    Nibp,
}

impl From<Schedule> for ScheduleKind {
    fn from(s: Schedule) -> Self {
        match s {
            Schedule::Synchronous => ScheduleKind::Synchronous,
            Schedule::RoundRobin => ScheduleKind::RoundRobin,
            Schedule::Random => ScheduleKind::Random,
            Schedule::Rbp => ScheduleKind::Rbp,
            Schedule::Wdbp => ScheduleKind::Wdbp,
            Schedule::Nibp => ScheduleKind::Nibp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Bp,
    Exact,
}

impl From<DecoderArg> for Decoder {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Bp => Decoder::Bp,
            DecoderArg::Exact => Decoder::Exact,
        }
    }
}

#[derive(Args)]
struct BpArgs {
    #[arg(long, value_enum, default_value = "round-robin")]
    schedule: Schedule,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Scheduler seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from random messages drawn with this seed instead of uniform ones.
    #[arg(long)]
    init_seed: Option<u64>,
}

impl BpArgs {
    fn config(&self) -> BPConfig {
        BPConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            damping: self.damping,
            seed: self.seed,
            ..BPConfig::default()
        }
        .with_schedule(self.schedule.into())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run BP and print the node marginals.
    BpRun {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        bp: BpArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Enumerate fixed points by multi-start Newton.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify the fixed point BP converges to.
    Stability {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        bp: BpArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fixed points of homogeneous models over a J range and theta list.
    Sweep {
        #[arg(long, default_value = "complete:4")]
        graph: ModelDesc,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        j_start: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        j_stop: f64,
        #[arg(long, default_value_t = 41)]
        j_steps: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.5", allow_negative_numbers = true)]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Self-guided BP path from zero coupling to the full model.
    Sbp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long)]
        fixed_step: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fixed points of the two-half patch model.
    Patch {
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Decode a single flipped bit of the (7,4) Hamming code.
    Decode {
        /// Flipped bit, 1 to 7.
        #[arg(long, default_value_t = 1)]
        flip: usize,
        #[arg(long, value_enum, default_value = "bp")]
        decoder: DecoderArg,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45")]
        epsilon: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Heat-bath Gibbs estimates of the node marginals.
    Gibbs {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20_000)]
        sweeps: usize,
        #[arg(long, default_value_t = 2_000)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a named experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit<R: Row>(rows: &[R], output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_results(rows, path),
        None => write_rows(rows, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BpRun { model, bp, output } => {
            let m = model.build()?;
            let out = commands::bp_run(&m, &bp.config(), bp.init_seed)?;
            eprintln!(
                "converged={} iterations={} free_energy={}",
                out.converged, out.iterations, out.pseudomarginals.free_energy
            );
            emit(&commands::marginal_rows(&out.pseudomarginals.singleton), output.as_deref())
        }
        Command::Enumerate { model, restarts, seed, output } => {
            emit(&commands::enumerate(&model.build()?, restarts, seed)?, output.as_deref())
        }
        Command::Stability { model, bp, output } => {
            let row = commands::stability(&model.build()?, &bp.config(), bp.init_seed)?;
            emit(&[row], output.as_deref())
        }
        Command::Sweep { graph, j_start, j_stop, j_steps, theta, restarts, seed, output } => {
            let spec = bethe_cli::Grid::Range { start: j_start, stop: j_stop, steps: j_steps };
            let text = serde_json::json!({
                "experiment": ExperimentKind::FixedPointSweep,
                "model": graph,
                "j": spec,
                "theta": theta,
                "seeds": [seed],
                "restarts": restarts,
            });
            let spec = bethe_cli::parse_config(&text.to_string())?;
            write_experiment(&spec, output.as_deref())
        }
        Command::Sbp { model, step, fixed_step, output } => {
            let cfg = SBPConfig { initial_step: step, adaptive: !fixed_step, ..SBPConfig::default() };
            emit(&commands::sbp_path(&model.build()?, &cfg)?, output.as_deref())
        }
        Command::Patch { rows, cols, j, theta, runs, seed, output } => {
            emit(&commands::patch(&PatchArgs { rows, cols, j, theta, runs, seed })?, output.as_deref())
        }
        Command::Decode { flip, decoder, epsilon, output } => {
            emit(&commands::decode(flip, &epsilon, decoder.into())?, output.as_deref())
        }
        Command::Gibbs { model, sweeps, burn_in, seed, output } => {
            emit(&commands::gibbs(&model.build()?, sweeps, burn_in, seed)?, output.as_deref())
        }
        Command::Experiment { config, output } => {
            let spec = load_config(&config)?;
            let target = output.or_else(|| spec.output.clone());
            write_experiment(&spec, target.as_deref())
        }
    }
}

fn write_experiment(spec: &ExperimentSpec, output: Option<&Path>) -> Result<()> {
    let rows = run_experiment(spec)?;
    match output {
        Some(path) => rows.write_to(path),
        None => {
            let mut out = io::stdout().lock();
            rows.write(&mut out)?;
            out.flush().map_err(|source| bethe_cli::CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
