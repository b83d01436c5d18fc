//! ALAP scheduling and merging of compiled programs into one composite job.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};
use crate::device::{DeviceModel, Edge};
use crate::mapper::CompiledProgram;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("programs `{first}` and `{second}` share physical qubits")]
    Overlap { first: String, second: String },
    #[error("program `{circuit}` touches qubit {qubit} outside its partition")]
    OutsidePartition { circuit: String, qubit: usize },
    #[error("program `{circuit}` applies cx on ({a},{b}), which is not a coupling")]
    NotAnEdge { circuit: String, a: usize, b: usize },
    #[error("cannot merge an empty batch")]
    EmptyBatch,
}

/// Slot assignment of one circuit. Unitary gates fill slots `0..depth`;
/// every measurement sits in slot `depth`; barriers get no slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub slot: Vec<Option<usize>>,
    pub depth: usize,
}

impl Schedule {
    /// Gate indices per slot, including the measurement slot if present.
    pub fn slices(&self) -> Vec<Vec<usize>> {
        let len = self.slot.iter().flatten().map(|&s| s + 1).max().unwrap_or(0);
        let mut out = vec![Vec::new(); len];
        for (i, s) in self.slot.iter().enumerate() {
            if let Some(s) = s {
                out[*s].push(i);
            }
        }
        out
    }
}

/// As-late-as-possible schedule: a reverse pass places each gate one slot
/// before the earliest later gate on any of its qubits. Barriers fence
/// every qubit they name.
pub fn alap_schedule(c: &Circuit) -> Schedule {
    // level 0 is the measurement slot; level k lands at slot depth - k
    let mut after = vec![0usize; c.num_qubits];
    let mut level = vec![None; c.gates.len()];
    for (i, g) in c.gates.iter().enumerate().rev() {
        match g.kind {
            GateKind::Measure => {}
            GateKind::Barrier => {
                let m = g.qubits.iter().map(|&q| after[q]).max().unwrap_or(0);
                for &q in &g.qubits {
                    after[q] = m;
                }
            }
            _ => {
                let l = 1 + g.qubits.iter().map(|&q| after[q]).max().unwrap_or(0);
                level[i] = Some(l);
                for &q in &g.qubits {
                    after[q] = l;
                }
            }
        }
    }
    let depth = level.iter().flatten().copied().max().unwrap_or(0);
    let slot = c
        .gates
        .iter()
        .zip(&level)
        .map(|(g, l)| match (g.kind, l) {
            (GateKind::Measure, _) => Some(depth),
            (_, Some(l)) => Some(depth - l),
            _ => None,
        })
        .collect();
    Schedule { slot, depth }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobMember {
    pub program: CompiledProgram,
    /// Routed circuit with SWAPs lowered to CNOTs.
    pub circuit: Circuit,
    pub schedule: Schedule,
    /// Slot shift that right-aligns this member with the deepest one.
    pub offset: usize,
}

impl JobMember {
    /// Global slot of gate `i`; measurements share the final slot.
    pub fn global_slot(&self, i: usize) -> Option<usize> {
        self.schedule.slot[i].map(|s| s + self.offset)
    }
}

/// A CNOT pair from different members, in the same slice, on a one-hop
/// coupling pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CrosstalkEvent {
    pub slice: usize,
    pub first: Edge,
    pub second: Edge,
}

impl CrosstalkEvent {
    pub fn involves(&self, slice: usize, e: Edge) -> bool {
        self.slice == slice && (self.first == e || self.second == e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeJob {
    pub members: Vec<JobMember>,
    pub depth: usize,
    pub crosstalk_events: Vec<CrosstalkEvent>,
}

impl CompositeJob {
    /// Whether the CNOT on `e` in `slice` is amplified by crosstalk.
    pub fn is_crosstalk(&self, slice: usize, e: Edge) -> bool {
        self.crosstalk_events.iter().any(|ev| ev.involves(slice, e))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut slices = vec![Vec::new(); self.depth + 1];
        for m in &self.members {
            for (i, g) in m.circuit.gates.iter().enumerate() {
                if let Some(s) = m.global_slot(i) {
                    let mut op = json!({
                        "circuit": m.program.allocation.circuit_name,
                        "gate": g.kind.name(),
                        "qubits": g.qubits,
                    });
                    if !g.params.is_empty() {
                        op["params"] = json!(g.params);
                    }
                    slices[s].push(op);
                }
            }
        }
        json!({
            "depth": self.depth,
            "members": self.members.iter().map(|m| json!({
                "circuit": m.program.allocation.circuit_name,
                "index": m.program.allocation.circuit_index,
                "qubits": m.program.allocation.partition.qubits,
                "depth": m.schedule.depth,
                "offset": m.offset,
            })).collect::<Vec<_>>(),
            "slices": slices,
            "crosstalk_events": self.crosstalk_events.iter()
                .map(|e| json!([e.slice, e.first, e.second]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Schedules each program ALAP, right-aligns them so all measurements share
/// the last slice, and records which simultaneous CNOTs form one-hop pairs.
pub fn merge(programs: &[CompiledProgram], d: &DeviceModel) -> Result<CompositeJob, ScheduleError> {
    if programs.is_empty() {
        return Err(ScheduleError::EmptyBatch);
    }
    let mut taken: Vec<(BTreeSet<usize>, &str)> = Vec::new();
    for p in programs {
        let name = &p.allocation.circuit_name;
        let qs: BTreeSet<usize> = p.allocation.partition.qubits.iter().copied().collect();
        if let Some((_, other)) = taken.iter().find(|(t, _)| !t.is_disjoint(&qs)) {
            return Err(ScheduleError::Overlap {
                first: other.to_string(),
                second: name.clone(),
            });
        }
        for g in &p.circuit.gates {
            if let Some(&q) = g.qubits.iter().find(|q| !qs.contains(q)) {
                return Err(ScheduleError::OutsidePartition {
                    circuit: name.clone(),
                    qubit: q,
                });
            }
            if g.kind.is_two_qubit() && !d.is_edge(g.qubits[0], g.qubits[1]) {
                return Err(ScheduleError::NotAnEdge {
                    circuit: name.clone(),
                    a: g.qubits[0],
                    b: g.qubits[1],
                });
            }
        }
        taken.push((qs, name));
    }

    let lowered: Vec<(Circuit, Schedule)> = programs
        .iter()
        .map(|p| {
            let c = p.circuit.decompose_swaps();
            let s = alap_schedule(&c);
            (c, s)
        })
        .collect();
    let depth = lowered.iter().map(|(_, s)| s.depth).max().unwrap_or(0);
    let members: Vec<JobMember> = programs
        .iter()
        .zip(lowered)
        .map(|(p, (circuit, schedule))| JobMember {
            program: p.clone(),
            offset: depth - schedule.depth,
            circuit,
            schedule,
        })
        .collect();

    let mut per_slice: Vec<Vec<(usize, Edge)>> = vec![Vec::new(); depth];
    for (k, m) in members.iter().enumerate() {
        for (i, g) in m.circuit.gates.iter().enumerate() {
            if g.kind == GateKind::Cx {
                let s = m.global_slot(i).expect("cx is scheduled");
                per_slice[s].push((k, Edge::new(g.qubits[0], g.qubits[1])));
            }
        }
    }
    let mut events = Vec::new();
    for (s, ops) in per_slice.iter().enumerate() {
        for (i, (mi, e)) in ops.iter().enumerate() {
            for (mj, f) in &ops[i + 1..] {
                if mi != mj && d.is_one_hop(e, f) {
                    events.push(CrosstalkEvent {
                        slice: s,
                        first: (*e).min(*f),
                        second: (*e).max(*f),
                    });
                }
            }
        }
    }
    events.sort();
    Ok(CompositeJob {
        members,
        depth,
        crosstalk_events: events,
    })
}

/// Depth of the merged job, which is the deepest member's depth.
pub fn composite_depth(job: &CompositeJob) -> usize {
    job.depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn chain_is_right_aligned() {
        let mut c = Circuit::new("c", 3);
        c.push(Gate::one(GateKind::H, 0)).unwrap();
        c.push(Gate::cx(0, 1)).unwrap();
        c.push(Gate::one(GateKind::X, 2)).unwrap();
        c.measure_all();
        let s = alap_schedule(&c);
        assert_eq!(s.depth, 2);
        assert_eq!(s.slot[..3], [Some(0), Some(1), Some(1)]);
        assert_eq!(s.slot[3..], [Some(2), Some(2), Some(2)]);
    }

    #[test]
    fn barrier_fences() {
        let mut c = Circuit::new("c", 2);
        c.push(Gate::one(GateKind::X, 0)).unwrap();
        c.push(Gate::new(GateKind::Barrier, vec![0, 1], vec![]).unwrap()).unwrap();
        c.push(Gate::one(GateKind::H, 1)).unwrap();
        c.push(Gate::one(GateKind::H, 1)).unwrap();
        let s = alap_schedule(&c);
        assert_eq!(s.depth, 3);
        assert_eq!(s.slot, vec![Some(0), None, Some(1), Some(2)]);
    }

    #[test]
    fn empty_circuit_has_zero_depth() {
        let mut c = Circuit::new("c", 2);
        c.measure_all();
        let s = alap_schedule(&c);
        assert_eq!(s.depth, 0);
        assert_eq!(s.slices(), vec![vec![0, 1]]);
    }
}
