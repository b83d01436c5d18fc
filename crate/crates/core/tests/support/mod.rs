//! Proptest strategies shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;

use qmpc::circuit::{Circuit, Gate, GateKind};
use qmpc::device::{DeviceModel, EdgeCal, QubitCal};

const ONE_QUBIT: [GateKind; 13] = [
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
];

/// A unitary gate on `width >= 2` qubits; `swaps` allows SWAP.
pub fn gate(width: usize, swaps: bool) -> impl Strategy<Value = Gate> {
    let one = (0..ONE_QUBIT.len(), 0..width, prop::collection::vec(-6.3f64..6.3, 3)).prop_map(|(k, q, angles)| {
        let kind = ONE_QUBIT[k];
        Gate::new(kind, vec![q], angles[..kind.num_params()].to_vec()).unwrap()
    });
    let two = (0..width, 1..width, any::<bool>()).prop_map(move |(a, off, s)| {
        let b = (a + off) % width;
        if s && swaps {
            Gate::swap(a, b)
        } else {
            Gate::cx(a, b)
        }
    });
    prop_oneof![3 => one, 2 => two]
}

/// Unitary circuit of width in `widths`, measured on every qubit in a
/// random classical order.
pub fn circuit(widths: std::ops::RangeInclusive<usize>, max_gates: usize) -> impl Strategy<Value = Circuit> {
    widths
        .prop_flat_map(move |w| {
            (
                Just(w),
                prop::collection::vec(gate(w, true), 0..max_gates),
                Just((0..w).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_map(|(w, gates, order)| {
            let mut c = Circuit::new("random", w);
            for g in gates {
                c.push(g).unwrap();
            }
            for q in order {
                c.push(Gate::measure(q)).unwrap();
            }
            c
        })
}

/// Same as [`circuit`] with occasional barriers between gates.
pub fn circuit_with_barriers(widths: std::ops::RangeInclusive<usize>, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (circuit(widths, max_gates), prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 0..4)).prop_map(
        |(mut c, barriers)| {
            let unitary = c.gates.len() - c.measured_qubits.len();
            for (at, mask) in barriers {
                let qs: Vec<usize> = (0..c.num_qubits).filter(|q| mask >> (q % 8) & 1 == 1).collect();
                if !qs.is_empty() {
                    let pos = at.index(unitary + 1);
                    c.gates.insert(pos, Gate::new(GateKind::Barrier, qs, vec![]).unwrap());
                }
            }
            c
        },
    )
}

/// Connected device of `sizes` qubits: a random spanning tree plus extra couplings.
pub fn device(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DeviceModel> {
    sizes
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(any::<prop::sample::Index>(), n - 1),
                prop::collection::vec((0..n, 0..n), 0..n),
                prop::collection::vec((1e-4f64..5e-3, 5e-3f64..8e-2), n),
                prop::collection::vec(5e-3f64..5e-2, 2 * n),
            )
        })
        .prop_map(|(n, parents, extra, qcal, ecal)| {
            let mut edges = std::collections::BTreeSet::new();
            for (q, p) in (1..n).zip(parents) {
                edges.insert((p.index(q), q));
            }
            for (a, b) in extra {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let qubits = qcal
                .into_iter()
                .enumerate()
                .map(|(id, (e1q, readout))| QubitCal { id, e1q, readout })
                .collect();
            let edges = edges
                .into_iter()
                .zip(ecal.into_iter().cycle())
                .map(|((a, b), e2q)| EdgeCal { a, b, e2q })
                .collect();
            DeviceModel::new("random", qubits, edges).unwrap()
        })
}
