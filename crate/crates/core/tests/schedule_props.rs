mod common;
mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use qmpc::benchmarks::{benchmark, benchmark_names};
use qmpc::device::{builtin_topology, DeviceModel, Edge};
use qmpc::mapper::compile_program;
use qmpc::partition::{allocate_batch, Threshold};
use qmpc::schedule::{alap_schedule, merge, CompositeJob, CrosstalkEvent, ScheduleError};
use qmpc::{Circuit, GateKind};

fn job_for(circuits: &[Circuit], d: &DeviceModel) -> Vec<CompositeJob> {
    let plan = allocate_batch(circuits, d, 4.0, Threshold::Unbounded).unwrap();
    plan.batches
        .iter()
        .map(|batch| {
            let programs: Vec<_> = batch
                .iter()
                .map(|a| compile_program(&circuits[a.circuit_index], a, d).unwrap())
                .collect();
            merge(&programs, d).unwrap()
        })
        .collect()
}

/// Every CNOT pair from different members sharing a slice on one-hop couplings.
fn brute_force_events(job: &CompositeJob, d: &DeviceModel) -> Vec<CrosstalkEvent> {
    let mut cx = Vec::new();
    for (k, m) in job.members.iter().enumerate() {
        for (i, g) in m.circuit.gates.iter().enumerate() {
            if g.kind == GateKind::Cx {
                cx.push((k, m.global_slot(i).unwrap(), Edge::new(g.qubits[0], g.qubits[1])));
            }
        }
    }
    let mut out = BTreeSet::new();
    for (i, &(ka, sa, ea)) in cx.iter().enumerate() {
        for &(kb, sb, eb) in &cx[i + 1..] {
            if ka != kb && sa == sb && d.is_one_hop(&ea, &eb) {
                out.insert(CrosstalkEvent {
                    slice: sa,
                    first: ea.min(eb),
                    second: ea.max(eb),
                });
            }
        }
    }
    out.into_iter().collect()
}

fn check_job(job: &CompositeJob, d: &DeviceModel) -> Result<(), TestCaseError> {
    prop_assert_eq!(job.depth, job.members.iter().map(|m| m.schedule.depth).max().unwrap());
    let mut used = BTreeSet::new();
    for m in &job.members {
        for &q in &m.program.allocation.partition.qubits {
            prop_assert!(used.insert(q));
        }
        prop_assert_eq!(m.offset + m.schedule.depth, job.depth);
        // The member's own gate sequence is the program with SWAPs lowered.
        prop_assert_eq!(&m.circuit, &m.program.circuit.decompose_swaps());
        common::check_alap(&m.circuit, |i| m.global_slot(i), job.depth).map_err(TestCaseError::fail)?;
    }
    prop_assert_eq!(job.crosstalk_events.clone(), brute_force_events(job, d));
    Ok(())
}

#[test]
fn overlapping_programs_are_rejected() {
    let d = builtin_topology("toronto-27").unwrap();
    let adder = benchmark("adder").unwrap().unwrap();
    let plan = allocate_batch(std::slice::from_ref(&adder), &d, 4.0, Threshold::Unbounded).unwrap();
    let p = compile_program(&adder, &plan.batches[0][0], &d).unwrap();
    assert!(matches!(merge(&[p.clone(), p], &d), Err(ScheduleError::Overlap { .. })));
    assert!(matches!(merge(&[], &d), Err(ScheduleError::EmptyBatch)));
}

#[test]
fn benchmark_triples_merge_cleanly() {
    let d = builtin_topology("toronto-27").unwrap();
    let names: Vec<&str> = benchmark_names().collect();
    for (i, a) in names.iter().enumerate() {
        let b = names[(i + 3) % names.len()];
        let c = names[(i + 5) % names.len()];
        let circuits: Vec<Circuit> = [a, &b, &c].iter().map(|n| benchmark(n).unwrap().unwrap()).collect();
        for job in job_for(&circuits, &d) {
            check_job(&job, &d).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alap_is_tight_with_barriers(c in support::circuit_with_barriers(2..=6, 40)) {
        let s = alap_schedule(&c);
        common::check_alap(&c, |i| s.slot[i], s.depth).map_err(TestCaseError::fail)?;
        let slices = s.slices();
        prop_assert_eq!(slices.len(), s.depth + 1);
        for slice in &slices {
            let mut qs = BTreeSet::new();
            for &i in slice {
                for &q in &c.gates[i].qubits {
                    prop_assert!(qs.insert(q), "qubit {} used twice in one slice", q);
                }
            }
        }
    }

    #[test]
    fn merged_jobs_are_valid(cs in prop::collection::vec(support::circuit(2..=4, 25), 2..=4)) {
        let d = builtin_topology("toronto-27").unwrap();
        let cs: Vec<Circuit> = cs.into_iter().enumerate().map(|(i, c)| c.renamed(format!("r{i}"))).collect();
        for job in job_for(&cs, &d) {
            check_job(&job, &d)?;
        }
    }
}
