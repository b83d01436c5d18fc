//! Run configuration: TOML file values overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use qmpc::benchmarks::{benchmark, benchmark_names};
use qmpc::device::{builtin_names, builtin_topology, load_device, DeviceModel};
use qmpc::partition::{Threshold, DEFAULT_SIGMA};
use qmpc::qasm::parse_qasm;
use qmpc::Circuit;

pub const DEFAULT_KAPPA: f64 = 4.0;
pub const DEFAULT_SHOTS: u64 = 8192;
pub const DEFAULT_DEVICE: &str = "toronto-27";
pub const DEFAULT_OUT: &str = "qmpc-out";

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Device JSON file or builtin name (melbourne-15, toronto-27, manhattan-65).
    #[arg(long, global = true)]
    pub device: Option<String>,
    /// Comma-separated OpenQASM files or bundled benchmark names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub circuits: Option<Vec<String>>,
    /// Crosstalk penalty used when scoring partitions.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Relative fidelity-degradation threshold, or `none` for no limit.
    #[arg(long, global = true)]
    pub threshold: Option<Threshold>,
    /// Error multiplier for simultaneous one-hop CNOTs in simulation.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for JSON/CSV artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    device: Option<String>,
    circuits: Option<Vec<String>>,
    sigma: Option<f64>,
    threshold: Option<Threshold>,
    kappa: Option<f64>,
    shots: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub device: String,
    pub circuits: Vec<String>,
    pub sigma: f64,
    pub threshold: Threshold,
    pub kappa: f64,
    pub shots: u64,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            device: args.device.clone().or(file.device).unwrap_or_else(|| DEFAULT_DEVICE.into()),
            circuits: args.circuits.clone().or(file.circuits).unwrap_or_default(),
            sigma: args.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
            threshold: args.threshold.or(file.threshold).unwrap_or(Threshold::Unbounded),
            kappa: args.kappa.or(file.kappa).unwrap_or(DEFAULT_KAPPA),
            shots: args.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out).unwrap_or_else(|| DEFAULT_OUT.into()),
        };
        if !(cfg.sigma >= 1.0) {
            bail!("sigma must be >= 1, got {}", cfg.sigma);
        }
        if !(cfg.kappa >= 1.0) {
            bail!("kappa must be >= 1, got {}", cfg.kappa);
        }
        if cfg.shots == 0 {
            bail!("shots must be >= 1");
        }
        Ok(cfg)
    }

    pub fn load_device(&self) -> Result<DeviceModel> {
        if builtin_names().any(|n| n == self.device) {
            return Ok(builtin_topology(&self.device)?);
        }
        let path = Path::new(&self.device);
        if !path.exists() {
            bail!(
                "unknown device `{}` (not a file; builtins: {})",
                self.device,
                builtin_names().collect::<Vec<_>>().join(", ")
            );
        }
        load_device(path).with_context(|| format!("loading device {}", path.display()))
    }

    pub fn load_circuits(&self) -> Result<Vec<Circuit>> {
        if self.circuits.is_empty() {
            bail!("no circuits given (use --circuits)");
        }
        self.circuits.iter().map(|spec| load_circuit(spec)).collect()
    }

    pub fn ensure_out(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

/// A bundled benchmark by name, otherwise an OpenQASM file named after its stem.
pub fn load_circuit(spec: &str) -> Result<Circuit> {
    if let Some(parsed) = benchmark(spec) {
        return Ok(parsed?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "`{spec}` is neither a file nor a bundled benchmark ({})",
            benchmark_names().collect::<Vec<_>>().join(", ")
        );
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.into());
    Ok(parse_qasm(&text).with_context(|| format!("parsing {}", path.display()))?.renamed(name))
}
