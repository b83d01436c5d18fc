use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use qmpc::benchmarks::H2_HAMILTONIAN;
use qmpc::device::{srb_cost_estimate, DeviceModel};
use qmpc::partition::Threshold;
use qmpc::vqe::{energy_sweep, exact_ground_energy, AnsatzSpec, PauliHamiltonian, SweepOptions};
use qmpc::zne::{zne_run, ZneOptions, DEFAULT_SCALE_FACTORS};
use qmpc::{
    allocate_batch, execute, expectation, ideal_distribution, jsd, pst, Circuit, Distribution, ExecutionOptions,
    MetricReport, Mode, NoiseSpec, PauliString,
};

use crate::config::RunConfig;

/// Ideal distributions with a single outcome of at least this mass are scored by PST.
const SINGLE_OUTCOME: f64 = 1.0 - 1e-9;

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

fn noise(cfg: &RunConfig) -> Result<NoiseSpec> {
    Ok(NoiseSpec::new(cfg.kappa, cfg.shots, cfg.seed)?)
}

fn single_outcome(ideal: &Distribution) -> Option<&str> {
    ideal.mode().filter(|&(_, p)| p >= SINGLE_OUTCOME).map(|(k, _)| k)
}

pub fn partition(cfg: &RunConfig) -> Result<()> {
    let d = cfg.load_device()?;
    let circuits = cfg.load_circuits()?;
    let plan = allocate_batch(&circuits, &d, cfg.sigma, cfg.threshold)?;
    let throughput: Vec<f64> = (0..plan.num_batches()).map(|b| plan.throughput(b, &d)).collect();
    let out = json!({
        "device": d.name(),
        "plan": plan.to_json(),
        "throughput": throughput,
        "mean_throughput": plan.mean_throughput(&d),
    });
    write_json(&cfg.ensure_out()?.join("plan.json"), &out)
}

pub fn simulate(cfg: &RunConfig, mode: Mode) -> Result<()> {
    let d = cfg.load_device()?;
    let circuits = cfg.load_circuits()?;
    let opts = ExecutionOptions {
        mode,
        sigma: cfg.sigma,
        threshold: cfg.threshold,
        noise: noise(cfg)?,
    };
    let report = execute(&circuits, &d, &opts)?;
    let out = cfg.ensure_out()?;

    let physical = out.join("physical");
    fs::create_dir_all(&physical).with_context(|| format!("creating {}", physical.display()))?;
    for (b, job) in report.jobs.iter().enumerate() {
        for m in &job.members {
            let a = &m.program.allocation;
            write(&physical.join(format!("b{b}_{}_{}.qasm", a.circuit_index, a.circuit_name)), &m.program.to_qasm())?;
        }
    }

    let mut metrics = MetricReport::default();
    let mut results = Vec::with_capacity(report.results.len());
    for (r, circ) in report.results.iter().zip(&circuits) {
        let ideal = ideal_distribution(circ)?;
        match single_outcome(&ideal) {
            Some(expected) => metrics.push(&r.name, "pst", pst(&r.counts, expected)?, expected),
            None => metrics.push(&r.name, "jsd", jsd(&r.counts.to_distribution(), &ideal)?, "ideal"),
        }
        results.push(json!({
            "circuit": r.name,
            "index": r.index,
            "batch": r.batch,
            "shots": r.counts.shots,
            "counts": r.counts.counts,
        }));
    }
    let counts = json!({
        "device": d.name(),
        "mode": mode,
        "seed": cfg.seed,
        "kappa": cfg.kappa,
        "plan": report.plan.to_json(),
        "jobs": report.jobs.iter().map(|j| j.to_json()).collect::<Vec<_>>(),
        "results": results,
    });
    write_json(&out.join("counts.json"), &counts)?;
    write(&out.join("metrics.csv"), &metrics.to_csv())
}

#[derive(Serialize)]
struct BenchRow<'a> {
    circuit: &'a str,
    threshold: String,
    copies: usize,
    batches: usize,
    avg_pst: Option<f64>,
    avg_jsd: Option<f64>,
    throughput: f64,
}

pub const DEFAULT_BENCH_THRESHOLDS: &str = "0,0.05,0.1,0.2,0.5,1,none";
pub const MAX_COPIES: usize = 6;

pub fn bench(cfg: &RunConfig, thresholds: &[Threshold]) -> Result<()> {
    let d = cfg.load_device()?;
    let circuits = cfg.load_circuits()?;
    let spec = noise(cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for circ in &circuits {
        let ideal = ideal_distribution(circ)?;
        let expected = single_outcome(&ideal);
        for &threshold in thresholds {
            for copies in 1..=MAX_COPIES {
                let batch: Vec<Circuit> =
                    (0..copies).map(|k| circ.clone().renamed(format!("{}#{k}", circ.name))).collect();
                let opts = ExecutionOptions {
                    mode: Mode::Parallel,
                    sigma: cfg.sigma,
                    threshold,
                    noise: spec,
                };
                let report = execute(&batch, &d, &opts)?;
                let mut total = 0.0;
                for r in &report.results {
                    total += match expected {
                        Some(e) => pst(&r.counts, e)?,
                        None => jsd(&r.counts.to_distribution(), &ideal)?,
                    };
                }
                let avg = total / copies as f64;
                w.serialize(BenchRow {
                    circuit: &circ.name,
                    threshold: threshold.to_string(),
                    copies,
                    batches: report.plan.num_batches(),
                    avg_pst: expected.map(|_| avg),
                    avg_jsd: expected.is_none().then_some(avg),
                    throughput: report.plan.mean_throughput(&d),
                })?;
            }
        }
    }
    let text = String::from_utf8(w.into_inner()?)?;
    write(&cfg.ensure_out()?.join("bench.csv"), &text)
}

/// Z on the measured bit whose ideal expectation is largest in magnitude.
fn default_observable(circ: &Circuit) -> Result<PauliString> {
    let ideal = ideal_distribution(circ)?;
    let n = circ.measured_qubits.len();
    if n == 0 {
        bail!("circuit `{}` measures nothing", circ.name);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..n {
        let z = expectation(&ideal, &PauliString::z(n, k))?.abs();
        if z > best.1 + 1e-12 {
            best = (k, z);
        }
    }
    Ok(PauliString::z(n, best.0))
}

pub fn zne(cfg: &RunConfig, factors: Option<Vec<f64>>, observable: Option<PauliString>, mode: Mode) -> Result<()> {
    let d = cfg.load_device()?;
    let circuits = cfg.load_circuits()?;
    let [circ] = circuits.as_slice() else {
        bail!("zne takes exactly one circuit, got {}", circuits.len());
    };
    let observable = match observable {
        Some(o) => o,
        None => default_observable(circ)?,
    };
    let opts = ZneOptions {
        scale_factors: factors.unwrap_or_else(|| DEFAULT_SCALE_FACTORS.to_vec()),
        mode,
        sigma: cfg.sigma,
        threshold: cfg.threshold,
        ..ZneOptions::default()
    };
    let report = zne_run(circ, &observable, &d, &noise(cfg)?, &opts, true)?;
    write_json(&cfg.ensure_out()?.join("zne.json"), &report)
}

pub struct VqeArgs {
    pub hamiltonian: Option<std::path::PathBuf>,
    pub thetas: Option<Vec<f64>>,
    pub points: usize,
    pub reps: usize,
    pub mode: Mode,
}

/// `points` evenly spaced angles in [-pi, pi).
pub fn theta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| -PI + 2.0 * PI * i as f64 / points as f64).collect()
}

pub fn vqe(cfg: &RunConfig, args: &VqeArgs) -> Result<()> {
    let d = cfg.load_device()?;
    let h = match &args.hamiltonian {
        Some(path) => PauliHamiltonian::load(path)?,
        None => PauliHamiltonian::parse(H2_HAMILTONIAN)?,
    };
    let thetas = args.thetas.clone().unwrap_or_else(|| theta_grid(args.points));
    let spec = AnsatzSpec::ryrz(h.num_qubits(), args.reps);
    let opts = SweepOptions {
        mode: args.mode,
        sigma: cfg.sigma,
        threshold: cfg.threshold,
    };
    let sweep = energy_sweep(&h, &spec, &thetas, &d, &noise(cfg)?, &opts)?;
    let exact = exact_ground_energy(&h)?;
    let out = json!({
        "device": d.name(),
        "seed": cfg.seed,
        "ansatz": spec,
        "exact_ground_energy": exact,
        "sweep": sweep,
    });
    write_json(&cfg.ensure_out()?.join("vqe.json"), &out)
}

pub fn srb_cost(cfg: &RunConfig, d: &DeviceModel, seeds: usize) -> Result<()> {
    let cost = srb_cost_estimate(d, seeds);
    let out = json!({
        "device": d.name(),
        "seeds": seeds,
        "one_hop_pairs": cost.pairs,
        "groups": cost.groups,
        "jobs": cost.jobs,
    });
    println!("{}: {} one-hop pairs, {} groups, {} jobs", d.name(), cost.pairs, cost.groups, cost.jobs);
    write_json(&cfg.ensure_out()?.join("srb_cost.json"), &out)
}
