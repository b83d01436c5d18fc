//! Shot-based simulation of logical circuits and composite jobs.
//!
//! Noise model: after every unitary gate a uniformly random non-identity
//! Pauli is applied with the gate's error probability (CNOTs in a crosstalk
//! event use `kappa * e2q`), and every measured bit flips with the qubit's
//! readout error. Each shot draws from its own RNG streams so a run is
//! reproducible for a given seed regardless of thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::device::{DeviceModel, Edge};
use crate::pauli::{Pauli, PauliString};
use crate::schedule::CompositeJob;
use crate::statevector::StateVector;

pub const MAX_SIM_QUBITS: usize = 24;

/// Amplitude budget for caching every intermediate ideal state.
const PREFIX_CACHE_BUDGET: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("circuit `{circuit}` touches {width} qubits; the simulator handles at most {MAX_SIM_QUBITS}")]
    TooWide { circuit: String, width: usize },
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("circuit `{0}` measures nothing")]
    NoMeasurements(String),
    #[error("cx on ({a},{b}) is not a device coupling")]
    NotAnEdge { a: usize, b: usize },
    #[error("observable {0} is not diagonal in the computational basis")]
    NotDiagonal(String),
    #[error("observable acts on bit {bit} but outcomes have {width} bits")]
    OutsideMeasured { bit: usize, width: usize },
}

/// Outcome histogram. Character `k` of a key is classical bit `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl Counts {
    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn to_distribution(&self) -> Distribution {
        let total = self.shots.max(1) as f64;
        Distribution(self.counts.iter().map(|(k, &v)| (k.clone(), v as f64 / total)).collect())
    }
}

/// Probability mass over bitstrings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(pub BTreeMap<String, f64>);

impl Distribution {
    pub fn get(&self, bits: &str) -> f64 {
        self.0.get(bits).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// The most likely outcome, lowest bitstring on ties.
    pub fn mode(&self) -> Option<(&str, f64)> {
        self.0
            .iter()
            .fold(None, |best: Option<(&str, f64)>, (k, &p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((k.as_str(), p)),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Multiplier on e2q for CNOTs involved in a crosstalk event.
    pub kappa: f64,
    pub shots: u64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kappa: f64, shots: u64, seed: u64) -> Result<Self, SimError> {
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(SimError::InvalidNoise(format!("kappa must be >= 1, got {kappa}")));
        }
        if shots == 0 {
            return Err(SimError::InvalidNoise("shots must be positive".into()));
        }
        Ok(NoiseSpec { kappa, shots, seed })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for the `index`-th independent sub-run of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Op {
    gate: Gate,
    p: f64,
}

/// A circuit compacted onto its active qubits with per-gate error rates.
struct Program {
    n: usize,
    ops: Vec<Op>,
    measured: Vec<usize>,
    readout: Vec<f64>,
}

impl Program {
    fn build(
        c: &Circuit,
        gate_error: impl Fn(usize, &Gate) -> Result<f64, SimError>,
        readout: impl Fn(usize) -> f64,
    ) -> Result<Program, SimError> {
        if c.measured_qubits.is_empty() {
            return Err(SimError::NoMeasurements(c.name.clone()));
        }
        let active = c.active_qubits();
        if active.len() > MAX_SIM_QUBITS {
            return Err(SimError::TooWide {
                circuit: c.name.clone(),
                width: active.len(),
            });
        }
        let mut local = vec![usize::MAX; c.num_qubits];
        for (i, &q) in active.iter().enumerate() {
            local[q] = i;
        }
        let mut ops = Vec::new();
        for (i, g) in c.gates.iter().enumerate() {
            if g.kind.is_unitary() {
                ops.push(Op {
                    p: gate_error(i, g)?,
                    gate: g.remapped(|q| local[q]),
                });
            }
        }
        Ok(Program {
            n: active.len(),
            ops,
            measured: c.measured_qubits.iter().map(|&q| local[q]).collect(),
            readout: c.measured_qubits.iter().map(|&q| readout(q)).collect(),
        })
    }

    fn outcome(&self, index: usize) -> u64 {
        self.measured
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &q)| acc | ((((index >> q) & 1) as u64) << k))
    }

    fn final_state(&self) -> StateVector {
        let mut s = StateVector::new(self.n);
        for op in &self.ops {
            s.apply(&op.gate);
        }
        s
    }

    fn run(&self, shots: u64, seed: u64) -> Counts {
        let cache: Option<Vec<StateVector>> = ((self.ops.len() + 1) << self.n <= PREFIX_CACHE_BUDGET).then(|| {
            let mut states = Vec::with_capacity(self.ops.len() + 1);
            let mut s = StateVector::new(self.n);
            states.push(s.clone());
            for op in &self.ops {
                s.apply(&op.gate);
                states.push(s.clone());
            }
            states
        });
        let ideal = match &cache {
            Some(c) => c.last().expect("initial state").clone(),
            None => self.final_state(),
        };
        let ideal_cum = cumulative(&ideal.probabilities());

        let outcomes: Vec<u64> = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut noise = stream_rng(seed, 2 * shot + 1);
                let mut sampler = stream_rng(seed, 2 * shot);
                let mut errors: Vec<(usize, usize)> = Vec::new();
                for (k, op) in self.ops.iter().enumerate() {
                    if op.p > 0.0 && noise.random::<f64>() < op.p {
                        let choices = if op.gate.qubits.len() == 2 { 15 } else { 3 };
                        errors.push((k, noise.random_range(1..=choices)));
                    }
                }
                let mut flips = 0u64;
                for (bit, &r) in self.readout.iter().enumerate() {
                    if r > 0.0 && noise.random::<f64>() < r {
                        flips |= 1 << bit;
                    }
                }
                let u: f64 = sampler.random();
                let index = match errors.first() {
                    None => sample(&ideal_cum, u),
                    Some(&(first, _)) => {
                        let mut s = match &cache {
                            Some(c) => c[first + 1].clone(),
                            None => {
                                let mut s = StateVector::new(self.n);
                                for op in &self.ops[..=first] {
                                    s.apply(&op.gate);
                                }
                                s
                            }
                        };
                        let mut pending = errors.iter().peekable();
                        for k in first..self.ops.len() {
                            if k > first {
                                s.apply(&self.ops[k].gate);
                            }
                            while let Some(&&(at, which)) = pending.peek() {
                                if at != k {
                                    break;
                                }
                                for (j, &q) in self.ops[k].gate.qubits.iter().enumerate() {
                                    s.apply_pauli(q, Pauli::from_index(which >> (2 * j)));
                                }
                                pending.next();
                            }
                        }
                        sample(&cumulative(&s.probabilities()), u)
                    }
                };
                self.outcome(index) ^ flips
            })
            .collect();

        let width = self.measured.len();
        let mut counts = BTreeMap::new();
        for o in outcomes {
            *counts.entry(bitstring(o, width)).or_insert(0) += 1;
        }
        Counts { counts, shots }
    }
}

fn bitstring(bits: u64, width: usize) -> String {
    (0..width).map(|k| if (bits >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn sample(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().expect("non-empty state");
    cum.partition_point(|&c| c <= u * total).min(cum.len() - 1)
}

/// Noiseless sampling of a logical circuit.
pub fn simulate_ideal(c: &Circuit, shots: u64, seed: u64) -> Result<Counts, SimError> {
    let prog = Program::build(c, |_, _| Ok(0.0), |_| 0.0)?;
    Ok(prog.run(shots, derive_seed(seed, 0)))
}

/// Exact outcome distribution of a logical circuit, dropping outcomes with
/// probability below 1e-15.
pub fn ideal_distribution(c: &Circuit) -> Result<Distribution, SimError> {
    let prog = Program::build(c, |_, _| Ok(0.0), |_| 0.0)?;
    let mut out = BTreeMap::new();
    for (i, p) in prog.final_state().probabilities().into_iter().enumerate() {
        if p > 1e-15 {
            *out.entry(bitstring(prog.outcome(i), prog.measured.len())).or_insert(0.0) += p;
        }
    }
    Ok(Distribution(out))
}

/// Noisy execution of every member of a composite job; one histogram per
/// member in member order. Member `k` uses the sub-seed `derive_seed(seed, k)`.
pub fn simulate_noisy(job: &CompositeJob, d: &DeviceModel, spec: &NoiseSpec) -> Result<Vec<Counts>, SimError> {
    let mut results = Vec::with_capacity(job.members.len());
    for (k, m) in job.members.iter().enumerate() {
        let clamped = std::cell::Cell::new(false);
        let prog = Program::build(
            &m.circuit,
            |i, g| {
                let p = if g.kind == GateKind::Cx {
                    let (a, b) = (g.qubits[0], g.qubits[1]);
                    let base = d.e2q(a, b).ok_or(SimError::NotAnEdge { a, b })?;
                    let slice = m.global_slot(i).expect("unitary gates are scheduled");
                    if job.is_crosstalk(slice, Edge::new(a, b)) {
                        base * spec.kappa
                    } else {
                        base
                    }
                } else if g.kind == GateKind::Swap {
                    return Err(SimError::NotAnEdge {
                        a: g.qubits[0],
                        b: g.qubits[1],
                    });
                } else {
                    d.e1q(g.qubits[0])
                };
                if p > 1.0 && !clamped.replace(true) {
                    log::warn!("error probability {p} on `{}` clamped to 1", m.circuit.name);
                }
                Ok(p.min(1.0))
            },
            |q| d.readout(q),
        )?;
        results.push(prog.run(spec.shots, derive_seed(spec.seed, k as u64)));
    }
    Ok(results)
}

/// Expectation of a diagonal Pauli observable; character `k` of the
/// observable acts on classical bit `k`.
pub fn expectation(dist: &Distribution, observable: &PauliString) -> Result<f64, SimError> {
    if !observable.is_diagonal() {
        return Err(SimError::NotDiagonal(observable.to_string()));
    }
    let width = dist.0.keys().next().map(|k| k.len()).unwrap_or(0);
    let support = observable.support();
    if let Some(&bit) = support.iter().find(|&&b| b >= width) {
        return Err(SimError::OutsideMeasured { bit, width });
    }
    Ok(dist
        .0
        .iter()
        .map(|(bits, p)| {
            let bytes = bits.as_bytes();
            let parity = support.iter().filter(|&&b| bytes[b] == b'1').count() % 2;
            if parity == 0 {
                *p
            } else {
                -p
            }
        })
        .sum())
}

/// `{circuit, counts, shots, seed}` record of one run.
pub fn result_json(circuit: &str, counts: &Counts, seed: u64) -> serde_json::Value {
    json!({
        "circuit": circuit,
        "counts": counts.counts,
        "shots": counts.shots,
        "seed": seed,
    })
}
