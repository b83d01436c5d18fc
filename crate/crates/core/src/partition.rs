//! Crosstalk-aware partition selection.
//!
//! Candidates are grown greedily over unallocated qubits and scored by the
//! estimated fidelity score (EFS): mean CNOT error inside the region times
//! the CNOT count, plus mean single-qubit error times the single-qubit gate
//! count, plus the summed readout error. CNOT errors on couplings that sit
//! one hop away from an already allocated coupling are multiplied by the
//! crosstalk parameter `sigma` before averaging. Lower is better.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{gate_counts, Circuit};
use crate::device::{hardware_throughput, DeviceModel, Edge};

/// Default crosstalk parameter.
pub const DEFAULT_SIGMA: f64 = 4.0;

/// Guards the relative EFS degradation against division by zero.
pub const EFS_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("no connected region of {size} unallocated qubits ({free} free)")]
    Infeasible { size: usize, free: usize },
    #[error("partition size must be at least 1")]
    ZeroSize,
    #[error("circuit `{circuit}` needs {width} qubits but the device has {device}")]
    CircuitTooWide {
        circuit: String,
        width: usize,
        device: usize,
    },
    #[error("candidate {qubits:?} has no internal coupling for a circuit with CNOTs")]
    NoInternalEdges { qubits: Vec<usize> },
    #[error("sigma must be >= 1, got {0}")]
    InvalidSigma(f64),
    #[error("threshold must be >= 0, got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCandidate {
    /// Physical qubits, ascending.
    pub qubits: Vec<usize>,
    pub internal_edges: Vec<Edge>,
    pub crosstalk_edges: Vec<Edge>,
}

impl PartitionCandidate {
    /// Builds the candidate induced by `qubits`, flagging couplings that
    /// are one hop away from couplings inside `allocated`.
    pub fn new(d: &DeviceModel, qubits: impl IntoIterator<Item = usize>, allocated: &BTreeSet<usize>) -> Self {
        let set: BTreeSet<usize> = qubits.into_iter().collect();
        let internal_edges: Vec<Edge> = d
            .edges()
            .filter(|e| set.contains(&e.a) && set.contains(&e.b))
            .collect();
        let mut c = PartitionCandidate {
            qubits: set.into_iter().collect(),
            internal_edges,
            crosstalk_edges: Vec::new(),
        };
        c.crosstalk_edges = crosstalk_edges(&c, allocated, d);
        c
    }

    pub fn contains(&self, q: usize) -> bool {
        self.qubits.binary_search(&q).is_ok()
    }

    /// Whether the induced coupling subgraph is connected.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.qubits.first() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for e in &self.internal_edges {
                let v = if e.a == u {
                    e.b
                } else if e.b == u {
                    e.a
                } else {
                    continue;
                };
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen.len() == self.qubits.len()
    }
}

/// Couplings of `c` forming a one-hop pair with a coupling whose endpoints
/// are both allocated.
pub fn crosstalk_edges(c: &PartitionCandidate, allocated: &BTreeSet<usize>, d: &DeviceModel) -> Vec<Edge> {
    let busy: Vec<Edge> = d
        .edges()
        .filter(|e| allocated.contains(&e.a) && allocated.contains(&e.b))
        .collect();
    c.internal_edges
        .iter()
        .filter(|e| busy.iter().any(|f| d.is_one_hop(e, f)))
        .copied()
        .collect()
}

/// Grows one region from `seed`: repeatedly adds the free neighbour with
/// the lowest (mean connecting CNOT error + readout error).
fn grow(d: &DeviceModel, seed: usize, allocated: &BTreeSet<usize>, size: usize) -> Option<BTreeSet<usize>> {
    let mut region = BTreeSet::from([seed]);
    while region.len() < size {
        let mut best: Option<(f64, usize)> = None;
        let frontier: BTreeSet<usize> = region
            .iter()
            .flat_map(|&u| d.neighbors(u).iter().copied())
            .filter(|v| !region.contains(v) && !allocated.contains(v))
            .collect();
        for v in frontier {
            let links: Vec<f64> = d
                .neighbors(v)
                .iter()
                .filter(|u| region.contains(u))
                .filter_map(|&u| d.e2q(u, v))
                .collect();
            let score = links.iter().sum::<f64>() / links.len() as f64 + d.readout(v);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, v));
            }
        }
        region.insert(best?.1);
    }
    Some(region)
}

/// One candidate per free seed qubit (duplicates removed, seed order kept).
pub fn candidates(
    d: &DeviceModel,
    allocated: &BTreeSet<usize>,
    size: usize,
) -> Result<Vec<PartitionCandidate>, PartitionError> {
    if size == 0 {
        return Err(PartitionError::ZeroSize);
    }
    let free = d.num_qubits() - allocated.iter().filter(|&&q| q < d.num_qubits()).count();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for seed in (0..d.num_qubits()).filter(|q| !allocated.contains(q)) {
        if let Some(region) = grow(d, seed, allocated, size) {
            if seen.insert(region.clone()) {
                out.push(PartitionCandidate::new(d, region, allocated));
            }
        }
    }
    if out.is_empty() {
        return Err(PartitionError::Infeasible { size, free });
    }
    Ok(out)
}

/// Estimated fidelity score of running `circ` on `c` (lower is better).
pub fn efs(c: &PartitionCandidate, circ: &Circuit, d: &DeviceModel, sigma: f64) -> Result<f64, PartitionError> {
    if sigma.is_nan() || sigma < 1.0 {
        return Err(PartitionError::InvalidSigma(sigma));
    }
    let (n1, n2) = gate_counts(circ);
    if n2 > 0 && c.internal_edges.is_empty() {
        return Err(PartitionError::NoInternalEdges {
            qubits: c.qubits.clone(),
        });
    }
    let avg_2q = if c.internal_edges.is_empty() {
        0.0
    } else {
        let total: f64 = c
            .internal_edges
            .iter()
            .map(|e| {
                let err = d.e2q(e.a, e.b).expect("internal edge exists");
                if c.crosstalk_edges.contains(e) {
                    err * sigma
                } else {
                    err
                }
            })
            .sum();
        total / c.internal_edges.len() as f64
    };
    let avg_1q = c.qubits.iter().map(|&q| d.e1q(q)).sum::<f64>() / c.qubits.len() as f64;
    let readout: f64 = c.qubits.iter().map(|&q| d.readout(q)).sum();
    Ok(avg_2q * n2 as f64 + avg_1q * n1 as f64 + readout)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub circuit_name: String,
    /// Position of the circuit in the caller's input list.
    pub circuit_index: usize,
    pub partition: PartitionCandidate,
    pub efs: f64,
}

/// Lowest-EFS candidate; ties go to the lexicographically smallest set.
fn best_of(
    cands: Vec<PartitionCandidate>,
    circ: &Circuit,
    d: &DeviceModel,
    sigma: f64,
) -> Result<(PartitionCandidate, f64), PartitionError> {
    let mut best: Option<(PartitionCandidate, f64)> = None;
    let mut last_err = None;
    for c in cands {
        let score = match efs(&c, circ, d, sigma) {
            Ok(s) => s,
            Err(e @ PartitionError::InvalidSigma(_)) => return Err(e),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let better = match &best {
            None => true,
            Some((b, s)) => score < *s || (score == *s && c.qubits < b.qubits),
        };
        if better {
            best = Some((c, score));
        }
    }
    best.ok_or_else(|| last_err.expect("at least one candidate was scored"))
}

/// Picks the best region for `circ` given the qubits already in use.
pub fn select_partition(
    circ: &Circuit,
    d: &DeviceModel,
    allocated: &BTreeSet<usize>,
    sigma: f64,
) -> Result<Allocation, PartitionError> {
    if circ.num_qubits > d.num_qubits() {
        return Err(PartitionError::CircuitTooWide {
            circuit: circ.name.clone(),
            width: circ.num_qubits,
            device: d.num_qubits(),
        });
    }
    let cands = candidates(d, allocated, circ.num_qubits)?;
    let (partition, efs) = best_of(cands, circ, d, sigma)?;
    Ok(Allocation {
        circuit_name: circ.name.clone(),
        circuit_index: 0,
        partition,
        efs,
    })
}

/// Maximum tolerated relative EFS degradation for joining a batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    Relative(f64),
    /// No fidelity constraint: pack everything that fits.
    #[default]
    Unbounded,
}

impl Threshold {
    pub fn new(value: f64) -> Result<Self, PartitionError> {
        if value.is_nan() || value < 0.0 {
            return Err(PartitionError::InvalidThreshold(value));
        }
        Ok(if value.is_infinite() {
            Threshold::Unbounded
        } else {
            Threshold::Relative(value)
        })
    }

    pub fn admits(&self, degradation: f64) -> bool {
        match self {
            Threshold::Relative(t) => degradation <= *t,
            Threshold::Unbounded => true,
        }
    }

    pub fn as_option(&self) -> Option<f64> {
        match self {
            Threshold::Relative(t) => Some(*t),
            Threshold::Unbounded => None,
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "inf" | "unbounded" => Ok(Threshold::Unbounded),
            other => other
                .parse::<f64>()
                .map_err(|e| format!("bad threshold `{s}`: {e}"))
                .and_then(|v| Threshold::new(v).map_err(|e| e.to_string())),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Relative(t) => write!(f, "{t}"),
            Threshold::Unbounded => f.write_str("none"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_option().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(d)? {
            Some(v) => Threshold::new(v).map_err(serde::de::Error::custom)?,
            None => Threshold::Unbounded,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    pub sigma: f64,
    pub threshold: Threshold,
    pub batches: Vec<Vec<Allocation>>,
}

#[derive(Serialize, Deserialize)]
struct PlanEntry {
    circuit: String,
    index: usize,
    qubits: Vec<usize>,
    efs: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    sigma: f64,
    threshold: Threshold,
    batches: Vec<Vec<PlanEntry>>,
}

impl BatchPlan {
    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn used_qubits(&self, batch: usize) -> usize {
        self.batches[batch].iter().map(|a| a.partition.qubits.len()).sum()
    }

    pub fn throughput(&self, batch: usize, d: &DeviceModel) -> f64 {
        hardware_throughput(self.used_qubits(batch), d.num_qubits()).expect("allocations fit the device")
    }

    /// Per-batch throughput averaged over batches.
    pub fn mean_throughput(&self, d: &DeviceModel) -> f64 {
        if self.batches.is_empty() {
            return 0.0;
        }
        (0..self.batches.len()).map(|b| self.throughput(b, d)).sum::<f64>() / self.batches.len() as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = PlanFile {
            sigma: self.sigma,
            threshold: self.threshold,
            batches: self
                .batches
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|a| PlanEntry {
                            circuit: a.circuit_name.clone(),
                            index: a.circuit_index,
                            qubits: a.partition.qubits.clone(),
                            efs: a.efs,
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_value(file).expect("plan serializes")
    }

    /// Rebuilds a plan from its JSON form; partitions are re-derived from
    /// the device in batch order.
    pub fn from_json(value: &serde_json::Value, d: &DeviceModel) -> Result<Self, serde_json::Error> {
        let file: PlanFile = serde_json::from_value(value.clone())?;
        let batches = file
            .batches
            .into_iter()
            .map(|b| {
                let mut allocated = BTreeSet::new();
                b.into_iter()
                    .map(|e| {
                        let partition = PartitionCandidate::new(d, e.qubits.iter().copied(), &allocated);
                        allocated.extend(e.qubits);
                        Allocation {
                            circuit_name: e.circuit,
                            circuit_index: e.index,
                            partition,
                            efs: e.efs,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(BatchPlan {
            sigma: file.sigma,
            threshold: file.threshold,
            batches,
        })
    }
}

/// Packs circuits into batches of simultaneous executions.
///
/// Circuits are visited widest first (then most CNOTs, then name). A circuit
/// joins the current batch when its best crosstalk-aware EFS given the
/// qubits already in use degrades its independent EFS by at most
/// `threshold` (relative); otherwise it waits for a later batch.
pub fn allocate_batch(
    circuits: &[Circuit],
    d: &DeviceModel,
    sigma: f64,
    threshold: Threshold,
) -> Result<BatchPlan, PartitionError> {
    if sigma.is_nan() || sigma < 1.0 {
        return Err(PartitionError::InvalidSigma(sigma));
    }
    let mut order: Vec<usize> = (0..circuits.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&circuits[i], &circuits[j]);
        b.num_qubits
            .cmp(&a.num_qubits)
            .then(b.cx_count().cmp(&a.cx_count()))
            .then(a.name.cmp(&b.name))
            .then(i.cmp(&j))
    });

    let empty = BTreeSet::new();
    let mut independent = vec![0.0; circuits.len()];
    for &i in &order {
        let circ = &circuits[i];
        independent[i] = select_partition(circ, d, &empty, sigma)?.efs;
    }

    let mut plan = BatchPlan {
        sigma,
        threshold,
        batches: Vec::new(),
    };
    let mut pending = order;
    while !pending.is_empty() {
        let mut allocated = BTreeSet::new();
        let mut batch = Vec::new();
        let mut deferred = Vec::new();
        for i in pending {
            let circ = &circuits[i];
            let Ok(cands) = candidates(d, &allocated, circ.num_qubits) else {
                deferred.push(i);
                continue;
            };
            // Greedy growth around allocated qubits can reach regions the
            // empty-device search missed; the independent reference takes
            // them into account (unflagged) so degradation is never negative.
            let unflagged: Vec<PartitionCandidate> = cands
                .iter()
                .cloned()
                .map(|mut c| {
                    c.crosstalk_edges.clear();
                    c
                })
                .collect();
            let reference = match best_of(unflagged, circ, d, 1.0) {
                Ok((_, s)) => s.min(independent[i]),
                Err(_) => independent[i],
            };
            let Ok((partition, score)) = best_of(cands, circ, d, sigma) else {
                deferred.push(i);
                continue;
            };
            let degradation = (score - reference) / reference.max(EFS_EPSILON);
            if batch.is_empty() || threshold.admits(degradation) {
                allocated.extend(partition.qubits.iter().copied());
                batch.push(Allocation {
                    circuit_name: circ.name.clone(),
                    circuit_index: i,
                    partition,
                    efs: score,
                });
            } else {
                deferred.push(i);
            }
        }
        if batch.is_empty() {
            // unreachable for circuits that fit the device alone
            let i = deferred[0];
            return Err(PartitionError::CircuitTooWide {
                circuit: circuits[i].name.clone(),
                width: circuits[i].num_qubits,
                device: d.num_qubits(),
            });
        }
        plan.batches.push(batch);
        pending = deferred;
    }
    Ok(plan)
}
