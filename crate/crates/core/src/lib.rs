//! Multi-programming compiler and evaluation toolkit for NISQ devices.
//!
//! Several small circuits are packed onto disjoint regions of one device:
//! [`partition`] picks crosstalk-aware regions by estimated fidelity,
//! [`mapper`] lays out and routes each circuit inside its region,
//! [`schedule`] aligns them as late as possible into one composite job, and
//! [`sim`] executes the job under a stochastic Pauli noise model with
//! crosstalk amplification. [`metrics`], [`zne`] and [`vqe`] build the
//! evaluation workloads on top.

pub mod benchmarks;
pub mod circuit;
pub mod device;
pub mod mapper;
pub mod metrics;
pub mod partition;
pub mod pauli;
pub mod pipeline;
pub mod qasm;
pub mod schedule;
pub mod sim;
pub mod statevector;
pub mod vqe;
pub mod zne;

pub use circuit::{gate_counts, interaction_graph, inverse_gate, Circuit, CircuitError, Gate, GateKind};
pub use device::{
    builtin_topology, hardware_throughput, load_device, one_hop_pairs, srb_cost_estimate, DeviceError, DeviceModel,
    Edge,
};
pub use mapper::{compile_program, initial_layout, route, CompiledProgram, Layout, MapError};
pub use metrics::{jsd, kl, pst, MetricError, MetricReport};
pub use partition::{allocate_batch, select_partition, Allocation, BatchPlan, PartitionCandidate, PartitionError, Threshold};
pub use pauli::{Pauli, PauliString};
pub use pipeline::{execute, ExecutionOptions, ExecutionReport, Mode, PipelineError};
pub use qasm::{emit_qasm, parse_qasm, QasmError};
pub use schedule::{alap_schedule, composite_depth, merge, CompositeJob, Schedule, ScheduleError};
pub use sim::{expectation, ideal_distribution, simulate_ideal, simulate_noisy, Counts, Distribution, NoiseSpec, SimError};
pub use vqe::{
    build_ansatz, energy_sweep, exact_ground_energy, measurement_circuit, qwc_group, AnsatzSpec, PauliHamiltonian,
    PauliTerm, VqeError,
};
pub use zne::{extrapolate, fold_random, zne_run, Method, ZneError, ZneReport};
