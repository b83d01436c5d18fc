//! `qmpc`: crosstalk-aware multi-programming on simulated NISQ devices.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmpc::partition::Threshold;
use qmpc::pipeline::PipelineError;
use qmpc::vqe::VqeError;
use qmpc::zne::ZneError;
use qmpc::{MapError, Mode, PartitionError, PauliString};

use commands::{VqeArgs, DEFAULT_BENCH_THRESHOLDS};
use config::{RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "qmpc", version, about)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate partitions and batches; writes plan.json.
    Partition,
    /// Full pipeline with noisy simulation; writes counts.json, metrics.csv and physical/*.qasm.
    Simulate {
        #[arg(long, value_enum, default_value = "parallel")]
        mode: ModeArg,
    },
    /// Average PST and throughput over thresholds and 1..6 parallel copies; writes bench.csv.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = DEFAULT_BENCH_THRESHOLDS)]
        thresholds: Vec<Threshold>,
    },
    /// Zero-noise extrapolation of one circuit; writes zne.json.
    Zne {
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<f64>>,
        /// Diagonal Pauli string over the measured bits (character k is bit k).
        #[arg(long)]
        observable: Option<PauliString>,
        #[arg(long, value_enum, default_value = "parallel")]
        mode: ModeArg,
    },
    /// Energy sweep of a RyRz ansatz over shared angles; writes vqe.json.
    Vqe {
        /// Hamiltonian file (`PAULI coefficient` per line); defaults to the bundled H2.
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thetas: Option<Vec<f64>>,
        /// Evenly spaced angles in [-pi, pi) when --thetas is not given.
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        reps: usize,
        #[arg(long, value_enum, default_value = "parallel")]
        mode: ModeArg,
    },
    /// One-hop pairs, SRB groups and job count for a device; writes srb_cost.json.
    SrbCost {
        /// Device name or file; overrides --device.
        device: Option<String>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Parallel,
    Serial,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Parallel => Mode::Parallel,
            ModeArg::Serial => Mode::Serial,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::resolve(&cli.run)?;
    match cli.command {
        Command::Partition => commands::partition(&cfg),
        Command::Simulate { mode } => commands::simulate(&cfg, mode.into()),
        Command::Bench { thresholds } => commands::bench(&cfg, &thresholds),
        Command::Zne {
            factors,
            observable,
            mode,
        } => commands::zne(&cfg, factors, observable, mode.into()),
        Command::Vqe {
            hamiltonian,
            thetas,
            points,
            reps,
            mode,
        } => commands::vqe(
            &cfg,
            &VqeArgs {
                hamiltonian,
                thetas,
                points,
                reps,
                mode: mode.into(),
            },
        ),
        Command::SrbCost { device, seeds } => {
            if let Some(device) = device {
                cfg.device = device;
            }
            let d = cfg.load_device()?;
            commands::srb_cost(&cfg, &d, seeds)
        }
    }
}

fn infeasible_partition(e: &PartitionError) -> bool {
    matches!(
        e,
        PartitionError::Infeasible { .. } | PartitionError::CircuitTooWide { .. } | PartitionError::NoInternalEdges { .. }
    )
}

fn infeasible_pipeline(e: &PipelineError) -> bool {
    match e {
        PipelineError::Partition(p) => infeasible_partition(p),
        PipelineError::Map(_) => true,
        _ => false,
    }
}

/// Exit status 2 when the circuits cannot be placed or routed on the device.
fn is_infeasible(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<PartitionError>() {
            infeasible_partition(e)
        } else if let Some(e) = cause.downcast_ref::<PipelineError>() {
            infeasible_pipeline(e)
        } else if let Some(ZneError::Pipeline(e)) = cause.downcast_ref::<ZneError>() {
            infeasible_pipeline(e)
        } else if let Some(VqeError::Pipeline(e)) = cause.downcast_ref::<VqeError>() {
            infeasible_pipeline(e)
        } else {
            cause.is::<MapError>()
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_infeasible(&err) { 2 } else { 1 })
        }
    }
}
