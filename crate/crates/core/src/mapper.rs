//! Initial layout and SWAP routing confined to one partition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{interaction_graph, Circuit, Gate, GateKind};
use crate::device::DeviceModel;
use crate::partition::{Allocation, PartitionCandidate};
use crate::qasm::emit_with_header;

/// Widest circuit for which every hub-preserving layout is tried.
pub const EXHAUSTIVE_LAYOUT_LIMIT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("partition has {size} qubits but the circuit needs {width}")]
    PartitionTooSmall { width: usize, size: usize },
    #[error("partition {0:?} is not connected")]
    Disconnected(Vec<usize>),
    #[error("layout is not an injective map into the partition")]
    InvalidLayout,
}

/// Logical qubit `i` sits on physical qubit `self.0[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout(pub Vec<usize>);

impl Layout {
    pub fn physical(&self, logical: usize) -> usize {
        self.0[logical]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Partition-local view: adjacency, hop distances and cheapest paths.
struct Region<'a> {
    d: &'a DeviceModel,
    qubits: Vec<usize>,
}

impl<'a> Region<'a> {
    fn new(d: &'a DeviceModel, part: &PartitionCandidate) -> Self {
        Region {
            d,
            qubits: part.qubits.clone(),
        }
    }

    fn contains(&self, q: usize) -> bool {
        self.qubits.binary_search(&q).is_ok()
    }

    fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.d.neighbors(q).iter().copied().filter(|&v| self.contains(v))
    }

    fn degree(&self, q: usize) -> usize {
        self.neighbors(q).count()
    }

    fn mean_incident_error(&self, q: usize) -> f64 {
        let errs: Vec<f64> = self.neighbors(q).filter_map(|v| self.d.e2q(q, v)).collect();
        if errs.is_empty() {
            f64::INFINITY
        } else {
            errs.iter().sum::<f64>() / errs.len() as f64
        }
    }

    /// Dijkstra over the region with hop weight 3 * e2q; equal-cost ties
    /// keep the first path found, exploring lower ids first.
    fn cheapest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut dist: BTreeMap<usize, f64> = self.qubits.iter().map(|&q| (q, f64::INFINITY)).collect();
        let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
        let mut done = Vec::new();
        dist.insert(from, 0.0);
        loop {
            let (u, du) = dist
                .iter()
                .filter(|(q, _)| !done.contains(*q))
                .map(|(&q, &c)| (q, c))
                .fold(None, |best: Option<(usize, f64)>, (q, c)| match best {
                    Some((_, bc)) if bc <= c => best,
                    _ => Some((q, c)),
                })?;
            if du.is_infinite() {
                return None;
            }
            if u == to {
                break;
            }
            done.push(u);
            for v in self.neighbors(u) {
                let w = 3.0 * self.d.e2q(u, v).expect("neighbor edge");
                if du + w < dist[&v] {
                    dist.insert(v, du + w);
                    prev.insert(v, u);
                }
            }
        }
        let mut path = vec![to];
        while let Some(&p) = prev.get(path.last().expect("non-empty")) {
            path.push(p);
            if p == from {
                break;
            }
        }
        path.reverse();
        Some(path)
    }

    fn hops(&self, from: usize, to: usize) -> usize {
        let mut frontier = vec![from];
        let mut seen = vec![from];
        let mut h = 0;
        while !frontier.is_empty() {
            if frontier.contains(&to) {
                return h;
            }
            let mut next = Vec::new();
            for &u in &frontier {
                for v in self.neighbors(u) {
                    if !seen.contains(&v) {
                        seen.push(v);
                        next.push(v);
                    }
                }
            }
            frontier = next;
            h += 1;
        }
        usize::MAX / 4
    }

    fn is_connected(&self) -> bool {
        match self.qubits.first() {
            None => false,
            Some(&q) => self.qubits.iter().all(|&v| self.hops(q, v) < usize::MAX / 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    /// Physical circuit over the full device register.
    pub circuit: Circuit,
    /// Where each logical qubit ends up after the inserted SWAPs.
    pub final_layout: Layout,
    pub swaps: usize,
}

/// Rewrites `circ` onto physical qubits, inserting SWAPs along the
/// cheapest in-partition path whenever a two-qubit gate is not adjacent.
/// Measurements are deferred to the end and follow their qubit.
pub fn route(circ: &Circuit, layout: &Layout, part: &PartitionCandidate, d: &DeviceModel) -> Result<Routed, MapError> {
    let region = Region::new(d, part);
    if !region.is_connected() {
        return Err(MapError::Disconnected(part.qubits.clone()));
    }
    check_layout(circ, layout, &region)?;
    let mut out = Circuit::new(circ.name.clone(), d.num_qubits());
    let mut l2p = layout.0.clone();
    let mut p2l: BTreeMap<usize, usize> = l2p.iter().enumerate().map(|(l, &p)| (p, l)).collect();
    let mut swaps = 0;
    for g in &circ.gates {
        match g.kind {
            GateKind::Measure => {}
            GateKind::Cx | GateKind::Swap => {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                if !d.is_edge(l2p[a], l2p[b]) {
                    let path = region
                        .cheapest_path(l2p[a], l2p[b])
                        .ok_or_else(|| MapError::Disconnected(part.qubits.clone()))?;
                    for w in path[..path.len() - 1].windows(2) {
                        let (x, y) = (w[0], w[1]);
                        out.gates.push(Gate::swap(x, y));
                        swaps += 1;
                        let (lx, ly) = (p2l.remove(&x), p2l.remove(&y));
                        if let Some(l) = lx {
                            l2p[l] = y;
                            p2l.insert(y, l);
                        }
                        if let Some(l) = ly {
                            l2p[l] = x;
                            p2l.insert(x, l);
                        }
                    }
                }
                out.gates.push(g.remapped(|q| l2p[q]));
            }
            _ => out.gates.push(g.remapped(|q| l2p[q])),
        }
    }
    for g in circ.gates.iter().filter(|g| g.kind == GateKind::Measure) {
        out.gates.push(g.remapped(|q| l2p[q]));
    }
    out.measured_qubits = circ.measured_qubits.iter().map(|&q| l2p[q]).collect();
    Ok(Routed {
        circuit: out,
        final_layout: Layout(l2p),
        swaps,
    })
}

fn check_layout(circ: &Circuit, layout: &Layout, region: &Region) -> Result<(), MapError> {
    if layout.len() != circ.num_qubits || layout.0.iter().any(|&p| !region.contains(p)) {
        return Err(MapError::InvalidLayout);
    }
    let mut seen = layout.0.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != layout.len() {
        return Err(MapError::InvalidLayout);
    }
    Ok(())
}

/// Summed gate error of a routed circuit; SWAPs count as three CNOTs.
fn routed_cost(c: &Circuit, d: &DeviceModel) -> f64 {
    c.gates
        .iter()
        .map(|g| match g.kind {
            GateKind::Cx => d.e2q(g.qubits[0], g.qubits[1]).unwrap_or(1.0),
            GateKind::Swap => 3.0 * d.e2q(g.qubits[0], g.qubits[1]).unwrap_or(1.0),
            GateKind::Measure | GateKind::Barrier => 0.0,
            _ => d.e1q(g.qubits[0]),
        })
        .sum()
}

/// Logical qubits ordered by interaction weight, then distinct partners.
fn logical_ranking(circ: &Circuit) -> (Vec<usize>, BTreeMap<(usize, usize), usize>) {
    let weights = interaction_graph(circ);
    let mut weighted = vec![0usize; circ.num_qubits];
    let mut partners = vec![0usize; circ.num_qubits];
    for (&(a, b), &w) in &weights {
        weighted[a] += w;
        weighted[b] += w;
        partners[a] += 1;
        partners[b] += 1;
    }
    let mut order: Vec<usize> = (0..circ.num_qubits).collect();
    order.sort_by_key(|&l| (std::cmp::Reverse(weighted[l]), std::cmp::Reverse(partners[l]), l));
    (order, weights)
}

/// Partition qubits ordered by internal degree, then mean incident error.
fn physical_ranking(region: &Region) -> Vec<usize> {
    let mut order = region.qubits.clone();
    order.sort_by(|&a, &b| {
        region
            .degree(b)
            .cmp(&region.degree(a))
            .then(region.mean_incident_error(a).total_cmp(&region.mean_incident_error(b)))
            .then(a.cmp(&b))
    });
    order
}

/// Noise-aware initial placement inside the partition.
///
/// The busiest logical qubit goes to the best-connected physical qubit; the
/// rest are placed greedily next to their partners. Up to
/// [`EXHAUSTIVE_LAYOUT_LIMIT`] qubits, every layout keeping that hub
/// assignment is routed and the one with fewest SWAPs (then lowest summed
/// gate error) wins.
pub fn initial_layout(circ: &Circuit, part: &PartitionCandidate, d: &DeviceModel) -> Result<Layout, MapError> {
    let width = circ.num_qubits;
    if part.qubits.len() < width {
        return Err(MapError::PartitionTooSmall {
            width,
            size: part.qubits.len(),
        });
    }
    let region = Region::new(d, part);
    if !region.is_connected() {
        return Err(MapError::Disconnected(part.qubits.clone()));
    }
    let (lrank, weights) = logical_ranking(circ);
    let prank = physical_ranking(&region);
    let weight = |a: usize, b: usize| weights.get(&(a.min(b), a.max(b))).copied().unwrap_or(0);

    let mut l2p: Vec<Option<usize>> = vec![None; width];
    let mut free = prank.clone();
    let mut placed: Vec<usize> = Vec::new();
    while placed.len() < width {
        let next = lrank
            .iter()
            .copied()
            .filter(|l| l2p[*l].is_none())
            .max_by_key(|&l| {
                let pull: usize = placed.iter().map(|&m| weight(l, m)).sum();
                // earlier rank wins ties
                (pull, std::cmp::Reverse(lrank.iter().position(|&x| x == l)))
            })
            .expect("an unplaced logical qubit remains");
        let target = if placed.is_empty() {
            free[0]
        } else {
            *free
                .iter()
                .min_by_key(|&&p| {
                    placed
                        .iter()
                        .map(|&m| weight(next, m) * region.hops(p, l2p[m].expect("placed")))
                        .sum::<usize>()
                })
                .expect("partition has room")
        };
        l2p[next] = Some(target);
        free.retain(|&p| p != target);
        placed.push(next);
    }
    let greedy = Layout(l2p.into_iter().map(|p| p.expect("all placed")).collect());
    if width <= 1 || width > EXHAUSTIVE_LAYOUT_LIMIT {
        return Ok(greedy);
    }

    let score = |layout: &Layout| -> Option<(usize, f64)> {
        route(circ, layout, part, d)
            .ok()
            .map(|r| (r.swaps, routed_cost(&r.circuit, d)))
    };
    let hub = lrank[0];
    let hub_phys = prank[0];
    let others: Vec<usize> = (0..width).filter(|&l| l != hub).collect();
    let spare: Vec<usize> = part.qubits.iter().copied().filter(|&p| p != hub_phys).collect();
    let mut best = greedy.clone();
    let mut best_score = score(&greedy).ok_or(MapError::InvalidLayout)?;
    let mut assignment = vec![usize::MAX; others.len()];
    let mut used = vec![false; spare.len()];
    enumerate(&mut assignment, &mut used, 0, &spare, &mut |choice| {
        let mut map = vec![0; width];
        map[hub] = hub_phys;
        for (i, &l) in others.iter().enumerate() {
            map[l] = choice[i];
        }
        let layout = Layout(map);
        if let Some(s) = score(&layout) {
            if s.0 < best_score.0 || (s.0 == best_score.0 && s.1 < best_score.1) {
                best_score = s;
                best = layout;
            }
        }
    });
    Ok(best)
}

fn enumerate(out: &mut Vec<usize>, used: &mut Vec<bool>, i: usize, pool: &[usize], f: &mut dyn FnMut(&[usize])) {
    if i == out.len() {
        f(out);
        return;
    }
    for (k, &p) in pool.iter().enumerate() {
        if !used[k] {
            used[k] = true;
            out[i] = p;
            enumerate(out, used, i + 1, pool, f);
            used[k] = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    pub allocation: Allocation,
    pub circuit: Circuit,
    pub layout: Layout,
    pub final_layout: Layout,
    pub swaps: usize,
}

impl CompiledProgram {
    /// OpenQASM with the layouts recorded in a comment header.
    pub fn to_qasm(&self) -> String {
        emit_with_header(
            &self.circuit,
            &[
                format!("circuit: {}", self.allocation.circuit_name),
                format!("partition: {:?}", self.allocation.partition.qubits),
                format!("initial layout (logical -> physical): {:?}", self.layout.0),
                format!("final layout (logical -> physical): {:?}", self.final_layout.0),
            ],
        )
    }
}

/// Layout then route `circ` inside the allocation's partition.
pub fn compile_program(circ: &Circuit, alloc: &Allocation, d: &DeviceModel) -> Result<CompiledProgram, MapError> {
    let layout = initial_layout(circ, &alloc.partition, d)?;
    let routed = route(circ, &layout, &alloc.partition, d)?;
    Ok(CompiledProgram {
        allocation: alloc.clone(),
        circuit: routed.circuit,
        layout,
        final_layout: routed.final_layout,
        swaps: routed.swaps,
    })
}
