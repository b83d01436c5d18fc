//! End-to-end execution: partition, compile, merge and simulate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::device::DeviceModel;
use crate::mapper::{compile_program, CompiledProgram, MapError};
use crate::partition::{allocate_batch, BatchPlan, PartitionError, Threshold};
use crate::schedule::{merge, CompositeJob, ScheduleError};
use crate::sim::{derive_seed, simulate_noisy, Counts, NoiseSpec, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Batches of simultaneous circuits.
    Parallel,
    /// One circuit per job on its best region.
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionOptions {
    pub mode: Mode,
    pub sigma: f64,
    pub threshold: Threshold,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitResult {
    pub name: String,
    /// Position in the input list.
    pub index: usize,
    pub batch: usize,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub plan: BatchPlan,
    pub jobs: Vec<CompositeJob>,
    /// One entry per input circuit, in input order.
    pub results: Vec<CircuitResult>,
}

impl ExecutionReport {
    pub fn counts(&self, index: usize) -> &Counts {
        &self.results[index].counts
    }
}

/// Compiles every circuit in `plan` and merges each batch into a job.
pub fn compile_plan(
    circuits: &[Circuit],
    plan: &BatchPlan,
    d: &DeviceModel,
) -> Result<Vec<CompositeJob>, PipelineError> {
    plan.batches
        .iter()
        .map(|batch| {
            let programs = batch
                .iter()
                .map(|a| compile_program(&circuits[a.circuit_index], a, d))
                .collect::<Result<Vec<CompiledProgram>, _>>()?;
            Ok(merge(&programs, d)?)
        })
        .collect()
}

/// Runs `circuits` on `d`. Batch `b` is simulated with seed
/// `derive_seed(noise.seed, b)`.
pub fn execute(circuits: &[Circuit], d: &DeviceModel, opts: &ExecutionOptions) -> Result<ExecutionReport, PipelineError> {
    let plan = match opts.mode {
        Mode::Parallel => allocate_batch(circuits, d, opts.sigma, opts.threshold)?,
        Mode::Serial => {
            let mut batches = Vec::with_capacity(circuits.len());
            for (i, c) in circuits.iter().enumerate() {
                let single = allocate_batch(std::slice::from_ref(c), d, opts.sigma, Threshold::Unbounded)?;
                let mut alloc = single.batches.into_iter().flatten().next().expect("one allocation");
                alloc.circuit_index = i;
                batches.push(vec![alloc]);
            }
            BatchPlan {
                sigma: opts.sigma,
                threshold: opts.threshold,
                batches,
            }
        }
    };
    let jobs = compile_plan(circuits, &plan, d)?;
    let mut results: Vec<Option<CircuitResult>> = vec![None; circuits.len()];
    for (b, job) in jobs.iter().enumerate() {
        let spec = NoiseSpec {
            seed: derive_seed(opts.noise.seed, b as u64),
            ..opts.noise
        };
        let counts = simulate_noisy(job, d, &spec)?;
        for (m, counts) in job.members.iter().zip(counts) {
            let a = &m.program.allocation;
            results[a.circuit_index] = Some(CircuitResult {
                name: a.circuit_name.clone(),
                index: a.circuit_index,
                batch: b,
                counts,
            });
        }
    }
    Ok(ExecutionReport {
        plan,
        jobs,
        results: results.into_iter().map(|r| r.expect("every circuit is scheduled")).collect(),
    })
}
