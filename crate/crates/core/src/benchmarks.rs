//! Bundled benchmark circuits and the H2 Hamiltonian.

use crate::circuit::Circuit;
use crate::qasm::{parse_qasm, QasmError};

const BENCHMARKS: [(&str, &str, Option<&str>); 8] = [
    ("adder", include_str!("../data/benchmarks/adder.qasm"), Some("1001")),
    ("fredkin", include_str!("../data/benchmarks/fredkin.qasm"), Some("101")),
    ("4mod5-v1_22", include_str!("../data/benchmarks/4mod5-v1_22.qasm"), Some("10111")),
    ("alu-v0_27", include_str!("../data/benchmarks/alu-v0_27.qasm"), Some("10010")),
    ("linearsolver", include_str!("../data/benchmarks/linearsolver.qasm"), None),
    ("qec_en", include_str!("../data/benchmarks/qec_en.qasm"), None),
    ("bell", include_str!("../data/benchmarks/bell.qasm"), None),
    ("variation", include_str!("../data/benchmarks/variation.qasm"), None),
];

/// Two-qubit H2 Hamiltonian (bond length 0.735 A) in Pauli-sum text form.
pub const H2_HAMILTONIAN: &str = include_str!("../data/hamiltonians/h2.txt");

pub fn benchmark_names() -> impl Iterator<Item = &'static str> {
    BENCHMARKS.iter().map(|(n, _, _)| *n)
}

/// Parses a bundled benchmark; `None` if the name is unknown.
pub fn benchmark(name: &str) -> Option<Result<Circuit, QasmError>> {
    BENCHMARKS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(n, src, _)| parse_qasm(src).map(|c| c.renamed(*n)))
}

/// The single correct outcome of a deterministic benchmark.
pub fn expected_output(name: &str) -> Option<&'static str> {
    BENCHMARKS.iter().find(|(n, _, _)| *n == name).and_then(|(_, _, e)| *e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gate_counts;

    #[test]
    fn all_parse_with_listed_sizes() {
        let expect = [
            ("adder", 4, 23, 10),
            ("fredkin", 3, 19, 8),
            ("4mod5-v1_22", 5, 21, 11),
            ("alu-v0_27", 5, 36, 17),
            ("linearsolver", 3, 19, 4),
            ("qec_en", 5, 25, 10),
            ("bell", 4, 33, 7),
            ("variation", 4, 54, 16),
        ];
        for (name, n, gates, cx) in expect {
            let c = benchmark(name).unwrap().unwrap();
            let (one, two) = gate_counts(&c);
            assert_eq!((c.num_qubits, one + two, two), (n, gates, cx), "{name}");
            assert_eq!(c.name, name);
        }
        assert!(benchmark("nope").is_none());
    }
}
