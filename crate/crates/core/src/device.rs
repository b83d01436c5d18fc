//! Device topology and calibration, one-hop crosstalk pairs, and the
//! throughput / SRB overhead bookkeeping.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("cannot read device file: {0}")]
    Io(#[from] std::io::Error),
    #[error("device JSON does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("device has no qubits")]
    NoQubits,
    #[error("qubit ids must be exactly 0..{n}; found {found:?}")]
    QubitIds { n: usize, found: Vec<usize> },
    #[error("edge ({a},{b}) references an unknown qubit")]
    UnknownQubit { a: usize, b: usize },
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({a},{b})")]
    DuplicateEdge { a: usize, b: usize },
    #[error("coupling graph is disconnected")]
    Disconnected,
    #[error("{what} = {value} is not a probability")]
    Probability { what: String, value: f64 },
    #[error("unknown builtin device `{0}`")]
    UnknownDevice(String),
    #[error("throughput needs 0 <= used <= total and total > 0 (used {used}, total {total})")]
    Throughput { used: usize, total: usize },
}

/// An undirected coupling, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        Edge {
            a: a.min(b),
            b: a.max(b),
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        self.a == q || self.b == q
    }

    pub fn shares_qubit(&self, other: &Edge) -> bool {
        self.touches(other.a) || self.touches(other.b)
    }
}

impl From<[usize; 2]> for Edge {
    fn from(v: [usize; 2]) -> Self {
        Edge::new(v[0], v[1])
    }
}

impl From<Edge> for [usize; 2] {
    fn from(e: Edge) -> Self {
        [e.a, e.b]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCal {
    pub id: usize,
    pub e1q: f64,
    pub readout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCal {
    pub a: usize,
    pub b: usize,
    pub e2q: f64,
}

#[derive(Deserialize, Serialize)]
struct DeviceFile {
    name: String,
    qubits: Vec<QubitCal>,
    edges: Vec<EdgeCal>,
}

/// Validated, immutable device description.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    name: String,
    qubits: Vec<QubitCal>,
    edges: Vec<EdgeCal>,
    e2q: BTreeMap<Edge, f64>,
    adjacency: Vec<Vec<usize>>,
    distance: Vec<Vec<usize>>,
    one_hop: Vec<(Edge, Edge)>,
}

const BUILTIN: [(&str, &str); 3] = [
    ("melbourne-15", include_str!("../data/devices/melbourne-15.json")),
    ("toronto-27", include_str!("../data/devices/toronto-27.json")),
    ("manhattan-65", include_str!("../data/devices/manhattan-65.json")),
];

/// Names accepted by [`builtin_topology`].
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

/// One of the bundled devices.
pub fn builtin_topology(name: &str) -> Result<DeviceModel, DeviceError> {
    let (_, json) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| DeviceError::UnknownDevice(name.to_string()))?;
    DeviceModel::from_json(json)
}

/// Reads and validates a device JSON file.
pub fn load_device(path: impl AsRef<Path>) -> Result<DeviceModel, DeviceError> {
    let text = std::fs::read_to_string(path)?;
    DeviceModel::from_json(&text)
}

fn check_prob(what: impl FnOnce() -> String, value: f64) -> Result<(), DeviceError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(DeviceError::Probability {
            what: what(),
            value,
        })
    }
}

impl DeviceModel {
    pub fn from_json(text: &str) -> Result<Self, DeviceError> {
        let file: DeviceFile = serde_json::from_str(text)?;
        DeviceModel::new(file.name, file.qubits, file.edges)
    }

    pub fn to_json(&self) -> String {
        let file = DeviceFile {
            name: self.name.clone(),
            qubits: self.qubits.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("device serializes")
    }

    pub fn new(name: impl Into<String>, mut qubits: Vec<QubitCal>, edges: Vec<EdgeCal>) -> Result<Self, DeviceError> {
        if qubits.is_empty() {
            return Err(DeviceError::NoQubits);
        }
        qubits.sort_by_key(|q| q.id);
        let n = qubits.len();
        if qubits.iter().enumerate().any(|(i, q)| q.id != i) {
            return Err(DeviceError::QubitIds {
                n,
                found: qubits.iter().map(|q| q.id).collect(),
            });
        }
        for q in &qubits {
            check_prob(|| format!("e1q of qubit {}", q.id), q.e1q)?;
            check_prob(|| format!("readout of qubit {}", q.id), q.readout)?;
        }
        let mut e2q = BTreeMap::new();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.a >= n || e.b >= n {
                return Err(DeviceError::UnknownQubit { a: e.a, b: e.b });
            }
            if e.a == e.b {
                return Err(DeviceError::SelfLoop(e.a));
            }
            check_prob(|| format!("e2q of edge ({},{})", e.a, e.b), e.e2q)?;
            if e2q.insert(Edge::new(e.a, e.b), e.e2q).is_some() {
                return Err(DeviceError::DuplicateEdge { a: e.a, b: e.b });
            }
            adjacency[e.a].push(e.b);
            adjacency[e.b].push(e.a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let distance: Vec<Vec<usize>> = (0..n).map(|s| bfs(&adjacency, s)).collect();
        if distance[0].iter().any(|&d| d == usize::MAX) {
            return Err(DeviceError::Disconnected);
        }
        let mut dev = DeviceModel {
            name: name.into(),
            qubits,
            edges,
            e2q,
            adjacency,
            distance,
            one_hop: Vec::new(),
        };
        dev.one_hop = dev.compute_one_hop();
        Ok(dev)
    }

    /// Copy with every error probability multiplied by `factor` (clamped
    /// to 1); `0.0` gives a noiseless device with the same topology.
    pub fn with_scaled_errors(&self, factor: f64) -> DeviceModel {
        let mut d = self.clone();
        for q in &mut d.qubits {
            q.e1q = (q.e1q * factor).min(1.0);
            q.readout = (q.readout * factor).min(1.0);
        }
        for e in &mut d.edges {
            e.e2q = (e.e2q * factor).min(1.0);
        }
        for v in d.e2q.values_mut() {
            *v = (*v * factor).min(1.0);
        }
        d
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, q: usize) -> &QubitCal {
        &self.qubits[q]
    }

    pub fn e1q(&self, q: usize) -> f64 {
        self.qubits[q].e1q
    }

    pub fn readout(&self, q: usize) -> f64 {
        self.qubits[q].readout
    }

    /// CNOT error of the coupling `(a, b)`, if it exists.
    pub fn e2q(&self, a: usize, b: usize) -> Option<f64> {
        self.e2q.get(&Edge::new(a, b)).copied()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.e2q.contains_key(&Edge::new(a, b))
    }

    /// All couplings in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.e2q.keys().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.e2q.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    /// Hop distance between two physical qubits.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.distance[a][b]
    }

    /// Smallest endpoint-to-endpoint distance between two couplings.
    pub fn edge_distance(&self, e: &Edge, f: &Edge) -> usize {
        [(e.a, f.a), (e.a, f.b), (e.b, f.a), (e.b, f.b)]
            .iter()
            .map(|&(x, y)| self.distance[x][y])
            .min()
            .expect("four endpoint pairs")
    }

    /// Vertex-disjoint couplings whose closest endpoints are adjacent.
    pub fn is_one_hop(&self, e: &Edge, f: &Edge) -> bool {
        !e.shares_qubit(f) && self.edge_distance(e, f) == 1
    }

    fn compute_one_hop(&self) -> Vec<(Edge, Edge)> {
        let edges: Vec<Edge> = self.edges().collect();
        let mut pairs = Vec::new();
        for (i, e) in edges.iter().enumerate() {
            for f in &edges[i + 1..] {
                if self.is_one_hop(e, f) {
                    pairs.push((*e, *f));
                }
            }
        }
        pairs
    }

    pub fn one_hop_pairs(&self) -> &[(Edge, Edge)] {
        &self.one_hop
    }
}

fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All unordered pairs of vertex-disjoint couplings at endpoint distance
/// exactly one, sorted canonically (`e1 < e2`, then lexicographic).
pub fn one_hop_pairs(d: &DeviceModel) -> Vec<(Edge, Edge)> {
    d.one_hop_pairs().to_vec()
}

/// Fraction of device qubits in use.
pub fn hardware_throughput(used: usize, total: usize) -> Result<f64, DeviceError> {
    if total == 0 || used > total {
        return Err(DeviceError::Throughput { used, total });
    }
    Ok(used as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrbCost {
    pub pairs: usize,
    pub groups: usize,
    pub jobs: usize,
}

/// Number of one-hop pairs, the greedy group count for running them
/// simultaneously, and the job count at `seeds` seeds (two individual RB
/// runs plus one simultaneous run per group and seed).
pub fn srb_cost_estimate(d: &DeviceModel, seeds: usize) -> SrbCost {
    let pairs = d.one_hop_pairs();
    let groups = greedy_coloring(pairs.len(), |i, j| srb_conflict(d, &pairs[i], &pairs[j]));
    SrbCost {
        pairs: pairs.len(),
        groups,
        jobs: srb_jobs(groups, seeds),
    }
}

/// Two individual RB runs plus one simultaneous run, per group and seed.
pub fn srb_jobs(groups: usize, seeds: usize) -> usize {
    3 * groups * seeds
}

/// Two pairs cannot share an SRB group if any of their couplings touch or
/// sit within one hop of each other.
pub fn srb_conflict(d: &DeviceModel, p: &(Edge, Edge), q: &(Edge, Edge)) -> bool {
    [p.0, p.1]
        .iter()
        .any(|e| [q.0, q.1].iter().any(|f| d.edge_distance(e, f) <= 1))
}

/// Largest-degree-first greedy colouring; returns the number of colours.
pub(crate) fn greedy_coloring(n: usize, conflict: impl Fn(usize, usize) -> bool) -> usize {
    let mut neighbors = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if conflict(i, j) {
                neighbors[i].insert(j);
                neighbors[j].insert(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(neighbors[v].len()), v));
    let mut color = vec![usize::MAX; n];
    let mut used = 0;
    for v in order {
        let taken: BTreeSet<usize> = neighbors[v].iter().map(|&u| color[u]).collect();
        let c = (0..).find(|c| !taken.contains(c)).expect("a free colour exists");
        color[v] = c;
        used = used.max(c + 1);
    }
    used
}

#[cfg(test)]
pub(crate) fn line_device(n: usize, e2q: f64, e1q: f64, readout: f64) -> DeviceModel {
    let qubits = (0..n).map(|id| QubitCal { id, e1q, readout }).collect();
    let edges = (1..n).map(|b| EdgeCal { a: b - 1, b, e2q }).collect();
    DeviceModel::new(format!("line-{n}"), qubits, edges).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(n: usize, edges: &[(usize, usize)]) -> Result<DeviceModel, DeviceError> {
        let qubits = (0..n)
            .map(|id| QubitCal {
                id,
                e1q: 1e-3,
                readout: 2e-2,
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(a, b)| EdgeCal { a, b, e2q: 1e-2 })
            .collect();
        DeviceModel::new("t", qubits, edges)
    }

    #[test]
    fn line_pairs() {
        let d = line_device(4, 0.01, 0.001, 0.02);
        assert_eq!(one_hop_pairs(&d), vec![(Edge::new(0, 1), Edge::new(2, 3))]);
        let d = line_device(3, 0.01, 0.001, 0.02);
        assert!(one_hop_pairs(&d).is_empty());
        assert_eq!(srb_cost_estimate(&d, 5), SrbCost { pairs: 0, groups: 0, jobs: 0 });
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(dev(3, &[(0, 1)]), Err(DeviceError::Disconnected)));
        assert!(matches!(dev(2, &[(0, 1), (1, 0)]), Err(DeviceError::DuplicateEdge { .. })));
        assert!(matches!(dev(2, &[(0, 0)]), Err(DeviceError::SelfLoop(0))));
        assert!(matches!(dev(2, &[(0, 2)]), Err(DeviceError::UnknownQubit { .. })));
        let bad = r#"{"name":"x","qubits":[{"id":0,"e1q":0.001,"readout":0.02},{"id":1,"e1q":0.001,"readout":0.02}],"edges":[{"a":0,"b":1,"e2q":1.3}]}"#;
        assert!(matches!(DeviceModel::from_json(bad), Err(DeviceError::Probability { .. })));
        assert!(matches!(DeviceModel::from_json("{\"name\":1}"), Err(DeviceError::Schema(_))));
        assert!(matches!(builtin_topology("nonexistent"), Err(DeviceError::UnknownDevice(_))));
    }

    #[test]
    fn throughput_arithmetic() {
        assert_eq!(hardware_throughput(0, 65).unwrap(), 0.0);
        assert!((hardware_throughput(4, 15).unwrap() - 0.267).abs() < 5e-4);
        assert!(hardware_throughput(1, 0).is_err());
        assert!(hardware_throughput(5, 4).is_err());
    }

    #[test]
    fn builtins_load() {
        for (name, n) in [("melbourne-15", 15), ("toronto-27", 27), ("manhattan-65", 65)] {
            let d = builtin_topology(name).unwrap();
            assert_eq!(d.num_qubits(), n);
            assert_eq!(d.name(), name);
        }
    }

    #[test]
    fn json_round_trip() {
        let d = builtin_topology("melbourne-15").unwrap();
        let again = DeviceModel::from_json(&d.to_json()).unwrap();
        assert_eq!(again.num_edges(), d.num_edges());
        assert_eq!(again.one_hop_pairs(), d.one_hop_pairs());
    }
}
