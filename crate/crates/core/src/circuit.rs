//! Gate-level circuit representation and structural queries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The supported gate vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Id,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    U3,
    Cx,
    Swap,
    Measure,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 17] = [
        GateKind::Id,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::U3,
        GateKind::Cx,
        GateKind::Swap,
        GateKind::Measure,
        GateKind::Barrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Id => "id",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::U3 => "u3",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }

    /// Number of angle parameters the gate takes.
    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Fixed qubit arity, `None` for barriers (any number of qubits).
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Swap => Some(2),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Swap)
    }

    /// Unitary gates, i.e. everything except measurements and barriers.
    pub fn is_unitary(self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Barrier)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("gate {kind} expects {expected} qubit(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("gate {kind} expects {expected} parameter(s), got {got}")]
    Params {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("gate {kind} repeats qubit {qubit}")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {qubit} is operated on after being measured")]
    GateAfterMeasure { qubit: usize },
    #[error("qubit {qubit} is measured twice")]
    DoubleMeasure { qubit: usize },
    #[error("circuit must have at least one qubit")]
    Empty,
    #[error("{0} has no inverse")]
    NotInvertible(GateKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Self, CircuitError> {
        if let Some(expected) = kind.arity() {
            if qubits.len() != expected {
                return Err(CircuitError::Arity {
                    kind,
                    expected,
                    got: qubits.len(),
                });
            }
        }
        if params.len() != kind.num_params() {
            return Err(CircuitError::Params {
                kind,
                expected: kind.num_params(),
                got: params.len(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(CircuitError::RepeatedQubit { kind, qubit: *q });
            }
        }
        Ok(Gate {
            kind,
            qubits,
            params,
        })
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Gate::new(kind, vec![q], vec![]).expect("fixed single-qubit gate")
    }

    pub fn rot(kind: GateKind, q: usize, angle: f64) -> Self {
        Gate::new(kind, vec![q], vec![angle]).expect("rotation gate")
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cx, vec![control, target], vec![]).expect("cx on distinct qubits")
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Gate::new(GateKind::Swap, vec![a, b], vec![]).expect("swap on distinct qubits")
    }

    pub fn measure(q: usize) -> Self {
        Gate::one(GateKind::Measure, q)
    }

    /// Same gate acting on relabelled qubits.
    pub fn remapped(&self, f: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            qubits: self.qubits.iter().map(|&q| f(q)).collect(),
            params: self.params.clone(),
        }
    }
}

/// Returns the adjoint of `g`.
pub fn inverse_gate(g: &Gate) -> Result<Gate, CircuitError> {
    use GateKind::*;
    let (kind, params) = match g.kind {
        Id | X | Y | Z | H | Cx | Swap => (g.kind, vec![]),
        S => (Sdg, vec![]),
        Sdg => (S, vec![]),
        T => (Tdg, vec![]),
        Tdg => (T, vec![]),
        Rx | Ry | Rz => (g.kind, vec![-g.params[0]]),
        // u3(θ,φ,λ)† = u3(−θ,−λ,−φ)
        U3 => (U3, vec![-g.params[0], -g.params[2], -g.params[1]]),
        Measure | Barrier => return Err(CircuitError::NotInvertible(g.kind)),
    };
    Ok(Gate {
        kind,
        qubits: g.qubits.clone(),
        params,
    })
}

/// A circuit over `num_qubits` qubits. Measurements are terminal; the
/// classical bit order is the order of `measured_qubits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub measured_qubits: Vec<usize>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Self {
        Circuit {
            name: name.into(),
            num_qubits,
            gates: Vec::new(),
            measured_qubits: Vec::new(),
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Appends a gate, keeping `measured_qubits` in sync with measure gates.
    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        for &q in &gate.qubits {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        if gate.kind == GateKind::Measure {
            let q = gate.qubits[0];
            if self.measured_qubits.contains(&q) {
                return Err(CircuitError::DoubleMeasure { qubit: q });
            }
            self.measured_qubits.push(q);
        } else if gate.kind != GateKind::Barrier {
            if let Some(&q) = gate.qubits.iter().find(|q| self.measured_qubits.contains(q)) {
                return Err(CircuitError::GateAfterMeasure { qubit: q });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn measure_all(&mut self) {
        for q in 0..self.num_qubits {
            if !self.measured_qubits.contains(&q) {
                self.gates.push(Gate::measure(q));
                self.measured_qubits.push(q);
            }
        }
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.num_qubits == 0 {
            return Err(CircuitError::Empty);
        }
        let mut rebuilt = Circuit::new(self.name.clone(), self.num_qubits);
        for g in &self.gates {
            let g = Gate::new(g.kind, g.qubits.clone(), g.params.clone())?;
            rebuilt.push(g)?;
        }
        let mut a = rebuilt.measured_qubits.clone();
        let mut b = self.measured_qubits.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            let q = b
                .iter()
                .chain(a.iter())
                .find(|q| !a.contains(q) || !b.contains(q))
                .copied()
                .unwrap_or(0);
            return Err(CircuitError::DoubleMeasure { qubit: q });
        }
        Ok(())
    }

    /// Unitary gates only (no measurements, no barriers).
    pub fn unitary_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| g.kind.is_unitary())
    }

    pub fn cx_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == GateKind::Cx).count()
    }

    /// Qubits touched by any gate or measurement, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_qubits];
        for g in &self.gates {
            if g.kind == GateKind::Barrier {
                continue;
            }
            for &q in &g.qubits {
                seen[q] = true;
            }
        }
        for &q in &self.measured_qubits {
            seen[q] = true;
        }
        (0..self.num_qubits).filter(|&q| seen[q]).collect()
    }

    /// Replaces every SWAP by three CNOTs.
    pub fn decompose_swaps(&self) -> Circuit {
        let mut out = Circuit {
            name: self.name.clone(),
            num_qubits: self.num_qubits,
            gates: Vec::with_capacity(self.gates.len()),
            measured_qubits: self.measured_qubits.clone(),
        };
        for g in &self.gates {
            if g.kind == GateKind::Swap {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                out.gates.push(Gate::cx(a, b));
                out.gates.push(Gate::cx(b, a));
                out.gates.push(Gate::cx(a, b));
            } else {
                out.gates.push(g.clone());
            }
        }
        out
    }
}

/// `(n_1q, n_2q)`: single- and two-qubit unitary gate counts. Swaps count
/// once; measurements and barriers are excluded.
pub fn gate_counts(c: &Circuit) -> (usize, usize) {
    c.unitary_gates().fold((0, 0), |(one, two), g| {
        if g.kind.is_two_qubit() {
            (one, two + 1)
        } else {
            (one + 1, two)
        }
    })
}

/// Number of CNOTs between each unordered logical pair.
pub fn interaction_graph(c: &Circuit) -> BTreeMap<(usize, usize), usize> {
    let mut edges = BTreeMap::new();
    for g in c.gates.iter().filter(|g| g.kind == GateKind::Cx) {
        let (a, b) = (g.qubits[0], g.qubits[1]);
        *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_exclude_measure_and_barrier() {
        let mut c = Circuit::new("t", 2);
        c.push(Gate::cx(0, 1)).unwrap();
        c.push(Gate::cx(1, 0)).unwrap();
        c.push(Gate::one(GateKind::H, 0)).unwrap();
        c.push(Gate::new(GateKind::Barrier, vec![0, 1], vec![]).unwrap())
            .unwrap();
        c.measure_all();
        assert_eq!(gate_counts(&c), (1, 2));
        assert_eq!(gate_counts(&Circuit::new("e", 3)), (0, 0));
    }

    #[test]
    fn inverse_rules() {
        let h = Gate::one(GateKind::H, 0);
        assert_eq!(inverse_gate(&h).unwrap(), h);
        let rz = Gate::rot(GateKind::Rz, 0, 0.3);
        assert_eq!(inverse_gate(&rz).unwrap().params, vec![-0.3]);
        assert_eq!(inverse_gate(&Gate::one(GateKind::S, 1)).unwrap().kind, GateKind::Sdg);
        let u3 = Gate::new(GateKind::U3, vec![0], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(inverse_gate(&u3).unwrap().params, vec![-0.1, -0.3, -0.2]);
        assert!(matches!(
            inverse_gate(&Gate::measure(0)),
            Err(CircuitError::NotInvertible(GateKind::Measure))
        ));
    }

    #[test]
    fn interaction_weights() {
        let mut c = Circuit::new("t", 3);
        c.push(Gate::cx(0, 1)).unwrap();
        c.push(Gate::cx(1, 0)).unwrap();
        c.push(Gate::cx(1, 2)).unwrap();
        let g = interaction_graph(&c);
        assert_eq!(g.len(), 2);
        assert_eq!(g[&(0, 1)], 2);
        assert_eq!(g[&(1, 2)], 1);

        let mut one = Circuit::new("t", 2);
        one.push(Gate::one(GateKind::X, 0)).unwrap();
        assert!(interaction_graph(&one).is_empty());
    }

    #[test]
    fn gate_invariants_enforced() {
        assert!(Gate::new(GateKind::Cx, vec![1, 1], vec![]).is_err());
        assert!(Gate::new(GateKind::Cx, vec![1], vec![]).is_err());
        assert!(Gate::new(GateKind::Rz, vec![0], vec![]).is_err());
        assert!(Gate::new(GateKind::U3, vec![0], vec![1.0]).is_err());
        let mut c = Circuit::new("t", 2);
        assert!(c.push(Gate::one(GateKind::X, 2)).is_err());
        c.push(Gate::measure(0)).unwrap();
        assert_eq!(
            c.push(Gate::one(GateKind::X, 0)),
            Err(CircuitError::GateAfterMeasure { qubit: 0 })
        );
    }

    #[test]
    fn swap_lowering() {
        let mut c = Circuit::new("t", 2);
        c.push(Gate::swap(0, 1)).unwrap();
        let d = c.decompose_swaps();
        assert_eq!(d.cx_count(), 3);
        assert_eq!(gate_counts(&d), (0, 3));
    }
}
