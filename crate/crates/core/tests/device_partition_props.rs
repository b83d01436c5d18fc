mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use qmpc::benchmarks::{benchmark, benchmark_names};
use qmpc::device::{builtin_topology, one_hop_pairs, srb_cost_estimate, DeviceModel, Edge};
use qmpc::partition::{allocate_batch, candidates, efs, select_partition, Threshold};
use qmpc::Circuit;

/// Hop distances by breadth-first search from every qubit.
fn bfs_distances(d: &DeviceModel) -> Vec<Vec<usize>> {
    let n = d.num_qubits();
    (0..n)
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in d.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

fn brute_force_pairs(d: &DeviceModel) -> BTreeSet<(Edge, Edge)> {
    let dist = bfs_distances(d);
    let edges: Vec<Edge> = d.edges().collect();
    let mut out = BTreeSet::new();
    for (i, e) in edges.iter().enumerate() {
        for f in &edges[i + 1..] {
            if e.shares_qubit(f) {
                continue;
            }
            let closest = [(e.a, f.a), (e.a, f.b), (e.b, f.a), (e.b, f.b)]
                .iter()
                .map(|&(x, y)| dist[x][y])
                .min()
                .unwrap();
            if closest == 1 {
                out.insert((*e.min(f), *e.max(f)));
            }
        }
    }
    out
}

fn bench(name: &str) -> Circuit {
    benchmark(name).unwrap().unwrap()
}

const THRESHOLDS: [Option<f64>; 7] = [Some(0.0), Some(0.02), Some(0.1), Some(0.3), Some(1.0), Some(5.0), None];

fn batch_counts(circuits: &[Circuit], d: &DeviceModel) -> Vec<usize> {
    THRESHOLDS
        .into_iter()
        .map(|t| {
            let threshold = t.map_or(Threshold::Unbounded, |v| Threshold::new(v).unwrap());
            allocate_batch(circuits, d, 4.0, threshold).unwrap().num_batches()
        })
        .collect()
}

/// First-fit batching can need more batches at a looser threshold: at 0.02
/// the second alu joins the first batch and pushes both 4mod5 copies out,
/// while at 0 each alu pairs with one 4mod5 on a disjoint region.
#[test]
fn mixed_workload_can_break_threshold_monotonicity() {
    let d = builtin_topology("toronto-27").unwrap();
    let circuits: Vec<Circuit> = ["alu-v0_27", "alu-v0_27", "4mod5-v1_22", "4mod5-v1_22"].map(bench).to_vec();
    assert_eq!(batch_counts(&circuits, &d), [2, 3, 2, 2, 2, 2, 2]);
}

#[test]
fn builtin_one_hop_pairs_match_brute_force() {
    for name in ["melbourne-15", "toronto-27", "manhattan-65"] {
        let d = builtin_topology(name).unwrap();
        let pairs = one_hop_pairs(&d);
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(pairs, sorted, "{name} pairs are canonically sorted");
        assert_eq!(pairs.into_iter().collect::<BTreeSet<_>>(), brute_force_pairs(&d), "{name}");
    }
}

proptest! {
    #[test]
    fn one_hop_pairs_are_exactly_the_brute_force_set(d in support::device(3..=12)) {
        let pairs = one_hop_pairs(&d);
        for (e, f) in &pairs {
            prop_assert!(e < f);
            prop_assert!(d.is_one_hop(e, f) && d.is_one_hop(f, e));
        }
        prop_assert_eq!(pairs.iter().copied().collect::<BTreeSet<_>>(), brute_force_pairs(&d));
        prop_assert_eq!(pairs.clone(), one_hop_pairs(&d));
    }

    #[test]
    fn srb_jobs_are_three_per_group_and_seed(d in support::device(3..=12), seeds in 1usize..10) {
        let cost = srb_cost_estimate(&d, seeds);
        prop_assert_eq!(cost.jobs, 3 * cost.groups * seeds);
        prop_assert_eq!(cost.pairs, one_hop_pairs(&d).len());
    }

    #[test]
    fn sigma_one_ignores_flags(d in support::device(4..=10), c in support::circuit(2..=3, 20), mask in any::<u16>()) {
        let allocated: BTreeSet<usize> = (0..d.num_qubits()).filter(|q| mask >> q & 1 == 1).collect();
        if let Ok(cands) = candidates(&d, &allocated, c.num_qubits) {
            for cand in cands {
                let mut plain = cand.clone();
                plain.crosstalk_edges.clear();
                prop_assert_eq!(efs(&cand, &c, &d, 1.0).unwrap(), efs(&plain, &c, &d, 1.0).unwrap());
                prop_assert!(efs(&cand, &c, &d, 4.0).unwrap() >= efs(&plain, &c, &d, 4.0).unwrap());
            }
        }
    }

    #[test]
    fn batches_are_disjoint_and_complete(
        picks in prop::collection::vec(0usize..8, 1..9),
        sigma in 1.0f64..8.0,
        t in prop::option::of(0.0f64..1.0),
    ) {
        let d = builtin_topology("toronto-27").unwrap();
        let names: Vec<&str> = benchmark_names().collect();
        let circuits: Vec<Circuit> = picks.iter().map(|&i| bench(names[i])).collect();
        let threshold = t.map_or(Threshold::Unbounded, |v| Threshold::new(v).unwrap());
        let plan = allocate_batch(&circuits, &d, sigma, threshold).unwrap();
        let mut seen = vec![0; circuits.len()];
        for batch in &plan.batches {
            let mut used = BTreeSet::new();
            for a in batch {
                seen[a.circuit_index] += 1;
                prop_assert_eq!(a.partition.qubits.len(), circuits[a.circuit_index].num_qubits);
                prop_assert!(a.partition.is_connected());
                for &q in &a.partition.qubits {
                    prop_assert!(used.insert(q), "qubit {} shared within a batch", q);
                }
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        prop_assert_eq!(&plan, &allocate_batch(&circuits, &d, sigma, threshold).unwrap());
    }

    #[test]
    fn batch_count_non_increasing_in_threshold_for_copies(
        pick in 0usize..8,
        copies in 2usize..9,
        big in any::<bool>(),
    ) {
        let d = builtin_topology(if big { "manhattan-65" } else { "toronto-27" }).unwrap();
        let name = benchmark_names().nth(pick).unwrap();
        let circuits: Vec<Circuit> = (0..copies).map(|_| bench(name)).collect();
        let counts = batch_counts(&circuits, &d);
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
    }

    #[test]
    fn crosstalk_edges_non_increasing_in_sigma(first in 0usize..8, second in 0usize..8) {
        let d = builtin_topology("toronto-27").unwrap();
        let names: Vec<&str> = benchmark_names().collect();
        let placed = select_partition(&bench(names[first]), &d, &BTreeSet::new(), 4.0).unwrap();
        let allocated: BTreeSet<usize> = placed.partition.qubits.iter().copied().collect();
        let next = bench(names[second]);
        let counts: Vec<usize> = [1.0, 2.0, 4.0, 8.0, 16.0]
            .into_iter()
            .map(|s| select_partition(&next, &d, &allocated, s).unwrap().partition.crosstalk_edges.len())
            .collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
    }
}
