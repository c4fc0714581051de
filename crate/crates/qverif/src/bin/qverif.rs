//! Experiment driver CLI.
//!
//! Subcommands mirror the experiments: `strategy-info`, `task-a`, `task-b`,
//! `scaling`, `tomo-compare`. An optional TOML config supplies base values;
//! command-line flags override it. Exit codes: 0 success, 2 configuration
//! error, 3 runtime error.

use clap::{Args, Parser, Subcommand};
use qverif::analysis::Side;
use qverif::config::{ExperimentConfig, Task};
use qverif::error::QvError;
use qverif::experiments::run_experiment;
use qverif::state::Frame;
use qverif::strategy::StrategyFamily;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qverif",
    about = "Two-qubit state verification: strategies, device simulation, certification statistics",
    version
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 = all cores. Defaults to the QVERIF_THREADS
    /// environment variable when set.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    output: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Target amplitude parameter θ ∈ [0, π/2].
    #[arg(long)]
    theta: Option<f64>,

    /// Target phase φ ∈ [0, 2π).
    #[arg(long)]
    phi: Option<f64>,

    /// Frame: theoretical | experimental.
    #[arg(long)]
    frame: Option<String>,

    /// Strategy family: nonadaptive | adaptive | bell | product.
    #[arg(long)]
    family: Option<String>,

    /// Device fidelity (diagonal mixture, infidelity split evenly).
    #[arg(long)]
    fidelity: Option<f64>,

    /// Device weights p1,p2,p3,p4 over the verifier basis.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    weights: Option<Vec<f64>>,

    /// Werner visibility in [0, 1].
    #[arg(long)]
    werner: Option<f64>,

    /// Emit the exact target state.
    #[arg(long)]
    exact: bool,

    /// Adaptive-only pass→fail flip probability of the EOM chain.
    #[arg(long)]
    eom_flip: Option<f64>,

    /// Monte Carlo rounds (task-a: 10000; per grid point elsewhere: 100).
    #[arg(long)]
    rounds: Option<u64>,

    /// Copy budget (task-a: censoring point, default 6000; elsewhere:
    /// largest grid N).
    #[arg(long)]
    copies: Option<u64>,

    /// Case-2 infidelity threshold ε_min.
    #[arg(long)]
    eps_min: Option<f64>,

    /// Case-1 infidelity threshold ε_max.
    #[arg(long)]
    eps_max: Option<f64>,

    /// δ target for ε(N) curves and summary crossings.
    #[arg(long)]
    delta_target: Option<f64>,

    /// Task A confidence level (default 0.99).
    #[arg(long)]
    confidence: Option<f64>,

    /// Region side for ε(N): large (λ₂) | small (λ₄).
    #[arg(long)]
    region: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the strategy's settings, probabilities, and spectrum.
    StrategyInfo(CommonArgs),
    /// Copies-to-first-failure statistics and the geometric MLE.
    TaskA(CommonArgs),
    /// Fixed-N pass counting and Chernoff confidences.
    TaskB {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the per-copy record stream of one round.
        #[arg(long)]
        records: bool,
    },
    /// Simulated ε(N) curve at fixed δ and its log-log slope.
    Scaling(CommonArgs),
    /// Verification vs 9-setting tomography baseline.
    TomoCompare(CommonArgs),
}

fn parse_enum<T>(what: &str, value: &str, table: &[(&str, T)]) -> Result<T, QvError>
where
    T: Copy,
{
    table
        .iter()
        .find(|(name, _)| *name == value)
        .map(|&(_, v)| v)
        .ok_or_else(|| QvError::Config(format!("unknown {what} `{value}`")))
}

fn apply_overrides(cfg: &mut ExperimentConfig, cli: &Cli, common: &CommonArgs) -> Result<(), QvError> {
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = threads;
    }
    if let Some(output) = &cli.output {
        cfg.run.output = output.clone();
    }
    if let Some(theta) = common.theta {
        cfg.target.theta = theta;
    }
    if let Some(phi) = common.phi {
        cfg.target.phi = phi;
    }
    if let Some(frame) = &common.frame {
        cfg.target.frame = parse_enum(
            "frame",
            frame,
            &[("theoretical", Frame::Theoretical), ("experimental", Frame::Experimental)],
        )?;
    }
    if let Some(family) = &common.family {
        cfg.strategy.family = parse_enum(
            "family",
            family,
            &[
                ("nonadaptive", StrategyFamily::Nonadaptive),
                ("adaptive", StrategyFamily::Adaptive),
                ("bell", StrategyFamily::Bell),
                ("product", StrategyFamily::Product),
            ],
        )?;
    }
    if let Some(f) = common.fidelity {
        cfg.device.fidelity = Some(f);
    }
    if let Some(w) = &common.weights {
        cfg.device.weights = Some([w[0], w[1], w[2], w[3]]);
    }
    if let Some(v) = common.werner {
        cfg.device.werner = Some(v);
    }
    if common.exact {
        cfg.device.exact = true;
    }
    if let Some(flip) = common.eom_flip {
        cfg.device.eom_flip = flip;
    }
    if let Some(rounds) = common.rounds {
        cfg.run.rounds = Some(rounds);
    }
    if let Some(copies) = common.copies {
        cfg.run.n_copies = Some(copies);
    }
    if let Some(v) = common.eps_min {
        cfg.analysis.eps_min = v;
    }
    if let Some(v) = common.eps_max {
        cfg.analysis.eps_max = v;
    }
    if let Some(v) = common.delta_target {
        cfg.analysis.delta_target = v;
    }
    if let Some(v) = common.confidence {
        cfg.analysis.confidence = v;
    }
    if let Some(region) = &common.region {
        cfg.analysis.region =
            parse_enum("region", region, &[("large", Side::Large), ("small", Side::Small)])?;
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, QvError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let (task, common) = match &cli.command {
        Command::StrategyInfo(c) => (Task::StrategyInfo, c.clone()),
        Command::TaskA(c) => (Task::TaskA, c.clone()),
        Command::TaskB { common, records } => {
            if *records {
                cfg.run.records = true;
            }
            (Task::TaskB, common.clone())
        }
        Command::Scaling(c) => (Task::Scaling, c.clone()),
        Command::TomoCompare(c) => (Task::TomoCompare, c.clone()),
    };
    cfg.run.task = task;
    apply_overrides(&mut cfg, cli, &common)?;
    cfg.validate()?;
    Ok(cfg)
}

fn thread_count(cfg: &ExperimentConfig) -> usize {
    if cfg.run.threads > 0 {
        return cfg.run.threads;
    }
    std::env::var("QVERIF_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn run(cfg: &ExperimentConfig) -> Result<(), QvError> {
    let out = run_experiment(cfg)?;
    let dir = std::path::Path::new(&cfg.run.output);
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents)?;
        println!("wrote {}", dir.join(name).display());
    }
    print!("{}", out.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(&cfg))
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cfg)),
        Err(e) => {
            eprintln!("runtime error: {e}");
            return ExitCode::from(3);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("runtime error: {e}");
            ExitCode::from(3)
        }
    }
}
