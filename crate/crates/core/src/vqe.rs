//! VQE energy estimation with qubit-wise commuting measurement groups.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::device::DeviceModel;
use crate::partition::Threshold;
use crate::pauli::{Pauli, PauliParseError, PauliString};
use crate::pipeline::{execute, ExecutionOptions, Mode, PipelineError};
use crate::sim::{Counts, NoiseSpec};
use crate::statevector::pauli_matrix;

/// Largest register [`exact_ground_energy`] diagonalizes.
pub const MAX_EXACT_QUBITS: usize = 12;

#[derive(Debug, Error)]
pub enum VqeError {
    #[error("cannot read Hamiltonian: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Pauli(#[from] PauliParseError),
    #[error("term {pauli} has length {len}, expected {n}")]
    Width { pauli: String, len: usize, n: usize },
    #[error("duplicate term {0}")]
    Duplicate(String),
    #[error("coefficient of {0} is not finite")]
    Coefficient(String),
    #[error("Hamiltonian has no terms")]
    Empty,
    #[error("terms {0} and {1} do not commute qubit-wise")]
    NotQwc(String, String),
    #[error("ansatz needs {expected} parameters, got {got}")]
    Binding { expected: usize, got: usize },
    #[error("invalid ansatz: {0}")]
    Ansatz(String),
    #[error("exact diagonalization supports at most {MAX_EXACT_QUBITS} qubits, got {0}")]
    TooWide(usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub pauli: PauliString,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PauliHamiltonian {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self, VqeError> {
        let n = terms.first().ok_or(VqeError::Empty)?.pauli.len();
        if n == 0 {
            return Err(VqeError::Width {
                pauli: String::new(),
                len: 0,
                n: 1,
            });
        }
        for (i, t) in terms.iter().enumerate() {
            if t.pauli.len() != n {
                return Err(VqeError::Width {
                    pauli: t.pauli.to_string(),
                    len: t.pauli.len(),
                    n,
                });
            }
            if !t.coeff.is_finite() {
                return Err(VqeError::Coefficient(t.pauli.to_string()));
            }
            if terms[..i].iter().any(|u| u.pauli == t.pauli) {
                return Err(VqeError::Duplicate(t.pauli.to_string()));
            }
        }
        Ok(PauliHamiltonian { n, terms })
    }

    /// Parses `<pauli-string> <coefficient>` lines; `#` starts a comment and
    /// repeated strings have their coefficients summed.
    pub fn parse(text: &str) -> Result<Self, VqeError> {
        let mut terms: Vec<PauliTerm> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| VqeError::Parse { line: i + 1, message };
            let mut fields = line.split_whitespace();
            let (Some(p), Some(c), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `<pauli> <coefficient>`, got `{line}`")));
            };
            let pauli: PauliString = p.parse()?;
            let coeff: f64 = c.parse().map_err(|_| parse_err(format!("bad coefficient `{c}`")))?;
            match terms.iter_mut().find(|t| t.pauli == pauli) {
                Some(t) => t.coeff += coeff,
                None => terms.push(PauliTerm { pauli, coeff }),
            }
        }
        PauliHamiltonian::new(terms)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VqeError> {
        PauliHamiltonian::parse(&std::fs::read_to_string(path)?)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }
}

/// First-fit grouping of terms in input order; a term joins the first
/// group whose members all commute with it qubit-wise.
pub fn qwc_group(h: &PauliHamiltonian) -> Vec<Vec<PauliTerm>> {
    let mut groups: Vec<Vec<PauliTerm>> = Vec::new();
    for t in h.terms() {
        match groups
            .iter_mut()
            .find(|g| g.iter().all(|u| u.pauli.qubitwise_commutes(&t.pauli)))
        {
            Some(g) => g.push(t.clone()),
            None => groups.push(vec![t.clone()]),
        }
    }
    groups
}

/// Per-qubit measurement basis shared by a QWC group.
fn joint_basis(group: &[PauliTerm]) -> Result<PauliString, VqeError> {
    let n = group.first().map(|t| t.pauli.len()).unwrap_or(0);
    let mut basis = PauliString::identity(n);
    for (i, t) in group.iter().enumerate() {
        if let Some(u) = group[..i].iter().find(|u| !u.pauli.qubitwise_commutes(&t.pauli)) {
            return Err(VqeError::NotQwc(u.pauli.to_string(), t.pauli.to_string()));
        }
        for (k, &p) in t.pauli.0.iter().enumerate() {
            if p != Pauli::I {
                basis.0[k] = p;
            }
        }
    }
    Ok(basis)
}

/// The ansatz followed by basis changes and measurement of every qubit the
/// group acts on, ascending. `None` for an identity-only group.
pub fn measurement_circuit(group: &[PauliTerm], ansatz: &Circuit) -> Result<Option<Circuit>, VqeError> {
    let basis = joint_basis(group)?;
    if basis.is_identity() {
        return Ok(None);
    }
    let mut c = ansatz.clone();
    for (k, &p) in basis.0.iter().enumerate() {
        match p {
            Pauli::X => c.gates.push(Gate::one(GateKind::H, k)),
            Pauli::Y => {
                c.gates.push(Gate::one(GateKind::Sdg, k));
                c.gates.push(Gate::one(GateKind::H, k));
            }
            _ => {}
        }
    }
    for k in basis.support() {
        c.push(Gate::measure(k)).map_err(|e| VqeError::Ansatz(e.to_string()))?;
    }
    Ok(Some(c))
}

/// Expectation of `term` from counts of its group's measurement circuit;
/// bit `k` of each outcome is the `k`-th qubit of `measured`.
pub fn term_expectation(term: &PauliTerm, measured: &[usize], counts: &Counts) -> f64 {
    let bits: Vec<usize> = term
        .pauli
        .support()
        .iter()
        .map(|q| measured.iter().position(|m| m == q).expect("group measures the term support"))
        .collect();
    let total = counts.shots as f64;
    counts
        .counts
        .iter()
        .map(|(s, &n)| {
            let b = s.as_bytes();
            let odd = bits.iter().filter(|&&k| b[k] == b'1').count() % 2 == 1;
            if odd {
                -(n as f64)
            } else {
                n as f64
            }
        })
        .sum::<f64>()
        / total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    /// One angle shared by every rotation.
    Shared,
    /// One angle per rotation, layer-major, Ry then Rz per qubit.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n: usize,
    pub reps: usize,
    pub entangler: Vec<(usize, usize)>,
    pub binding: Binding,
}

impl AnsatzSpec {
    /// RyRz ansatz with a linear CNOT chain and a shared angle.
    pub fn ryrz(n: usize, reps: usize) -> Self {
        AnsatzSpec {
            n,
            reps,
            entangler: (1..n).map(|q| (q - 1, q)).collect(),
            binding: Binding::Shared,
        }
    }

    pub fn num_rotations(&self) -> usize {
        2 * self.n * (self.reps + 1)
    }

    fn validate(&self) -> Result<(), VqeError> {
        if self.n == 0 || self.reps == 0 {
            return Err(VqeError::Ansatz("needs n >= 1 and reps >= 1".into()));
        }
        if let Some(&(a, b)) = self.entangler.iter().find(|&&(a, b)| a == b || a >= self.n || b >= self.n) {
            return Err(VqeError::Ansatz(format!("invalid entangler pair ({a},{b})")));
        }
        Ok(())
    }
}

/// `reps` rounds of Ry, Rz on every qubit followed by the entangler, then a
/// final Ry, Rz layer. No measurements.
pub fn build_ansatz(spec: &AnsatzSpec, theta: &[f64]) -> Result<Circuit, VqeError> {
    spec.validate()?;
    let expected = match spec.binding {
        Binding::Shared => 1,
        Binding::Full => spec.num_rotations(),
    };
    if theta.len() != expected {
        return Err(VqeError::Binding {
            expected,
            got: theta.len(),
        });
    }
    let angle = |i: usize| match spec.binding {
        Binding::Shared => theta[0],
        Binding::Full => theta[i],
    };
    let mut c = Circuit::new("ansatz", spec.n);
    let mut r = 0;
    for layer in 0..=spec.reps {
        for q in 0..spec.n {
            c.gates.push(Gate::rot(GateKind::Ry, q, angle(r)));
            c.gates.push(Gate::rot(GateKind::Rz, q, angle(r + 1)));
            r += 2;
        }
        if layer < spec.reps {
            for &(a, b) in &spec.entangler {
                c.gates.push(Gate::cx(a, b));
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub mode: Mode,
    pub points: Vec<SweepPoint>,
    pub min: SweepPoint,
    pub groups: Vec<Vec<PauliString>>,
    pub circuits: usize,
    pub batches: usize,
    pub throughput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub mode: Mode,
    pub sigma: f64,
    pub threshold: Threshold,
}

/// Energy at each shared angle in `thetas`. All measurement circuits of
/// the sweep are executed together (batched in parallel mode).
pub fn energy_sweep(
    h: &PauliHamiltonian,
    spec: &AnsatzSpec,
    thetas: &[f64],
    d: &DeviceModel,
    noise: &NoiseSpec,
    opts: &SweepOptions,
) -> Result<SweepResult, VqeError> {
    if thetas.is_empty() {
        return Err(VqeError::Binding { expected: 1, got: 0 });
    }
    if spec.n != h.num_qubits() {
        return Err(VqeError::Ansatz(format!(
            "ansatz has {} qubits, Hamiltonian {}",
            spec.n,
            h.num_qubits()
        )));
    }
    let shared = AnsatzSpec {
        binding: Binding::Shared,
        ..spec.clone()
    };
    let groups = qwc_group(h);
    let mut circuits = Vec::new();
    // (theta index, group index) -> position in `circuits`
    let mut slot: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (ti, &theta) in thetas.iter().enumerate() {
        let ansatz = build_ansatz(&shared, &[theta])?;
        for (gi, g) in groups.iter().enumerate() {
            if let Some(c) = measurement_circuit(g, &ansatz)? {
                slot.insert((ti, gi), circuits.len());
                circuits.push(c.renamed(format!("vqe-t{ti}-g{gi}")));
            }
        }
    }
    let (results, batches, throughput) = if circuits.is_empty() {
        (Vec::new(), 0, 0.0)
    } else {
        let report = execute(
            &circuits,
            d,
            &ExecutionOptions {
                mode: opts.mode,
                sigma: opts.sigma,
                threshold: opts.threshold,
                noise: *noise,
            },
        )?;
        let batches = report.plan.num_batches();
        let throughput = report.plan.mean_throughput(d);
        (report.results, batches, throughput)
    };
    let mut points = Vec::with_capacity(thetas.len());
    for (ti, &theta) in thetas.iter().enumerate() {
        let mut energy = 0.0;
        for (gi, g) in groups.iter().enumerate() {
            match slot.get(&(ti, gi)) {
                None => energy += g.iter().map(|t| t.coeff).sum::<f64>(),
                Some(&i) => {
                    let measured = &circuits[i].measured_qubits;
                    for t in g {
                        energy += t.coeff * term_expectation(t, measured, &results[i].counts);
                    }
                }
            }
        }
        points.push(SweepPoint { theta, energy });
    }
    let min = points
        .iter()
        .fold(None, |best: Option<&SweepPoint>, p| match best {
            Some(b) if b.energy <= p.energy => Some(b),
            _ => Some(p),
        })
        .expect("non-empty sweep")
        .clone();
    Ok(SweepResult {
        mode: opts.mode,
        points,
        min,
        groups: groups.iter().map(|g| g.iter().map(|t| t.pauli.clone()).collect()).collect(),
        circuits: circuits.len(),
        batches,
        throughput,
    })
}

/// Smallest eigenvalue of the dense Hamiltonian matrix.
pub fn exact_ground_energy(h: &PauliHamiltonian) -> Result<f64, VqeError> {
    let n = h.num_qubits();
    if n > MAX_EXACT_QUBITS {
        return Err(VqeError::TooWide(n));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for t in h.terms() {
        let mats: Vec<_> = t.pauli.0.iter().map(|&p| pauli_matrix(p)).collect();
        for row in 0..dim {
            for col in 0..dim {
                let mut v = Complex64::new(t.coeff, 0.0);
                for (k, pm) in mats.iter().enumerate() {
                    v *= pm[(row >> k) & 1][(col >> k) & 1];
                    if v == Complex64::new(0.0, 0.0) {
                        break;
                    }
                }
                m[(row, col)] += v;
            }
        }
    }
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ham(spec: &[(&str, f64)]) -> PauliHamiltonian {
        PauliHamiltonian::new(
            spec.iter()
                .map(|(p, c)| PauliTerm {
                    pauli: p.parse().unwrap(),
                    coeff: *c,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn grouping_examples() {
        let h = ham(&[("XI", 1.0), ("IX", 1.0), ("ZZ", 1.0)]);
        let g: Vec<Vec<String>> = qwc_group(&h)
            .iter()
            .map(|g| g.iter().map(|t| t.pauli.to_string()).collect())
            .collect();
        assert_eq!(g, vec![vec!["XI", "IX"], vec!["ZZ"]]);
        assert_eq!(qwc_group(&ham(&[("ZZ", 1.0)])).len(), 1);
    }

    #[test]
    fn ansatz_counts() {
        let c = build_ansatz(&AnsatzSpec::ryrz(2, 2), &[0.1]).unwrap();
        let rot = c.gates.iter().filter(|g| matches!(g.kind, GateKind::Ry | GateKind::Rz)).count();
        assert_eq!((rot, c.cx_count()), (12, 2));
        let c = build_ansatz(&AnsatzSpec::ryrz(2, 1), &[0.1]).unwrap();
        assert_eq!(c.gates.len() - c.cx_count(), 8);
        assert_eq!(c.cx_count(), 1);
        let full = AnsatzSpec {
            binding: Binding::Full,
            ..AnsatzSpec::ryrz(2, 2)
        };
        assert!(matches!(build_ansatz(&full, &[0.0; 3]), Err(VqeError::Binding { expected: 12, got: 3 })));
        assert!(build_ansatz(&full, &[0.0; 12]).is_ok());
    }

    #[test]
    fn measurement_bases() {
        let ansatz = build_ansatz(&AnsatzSpec::ryrz(2, 1), &[0.0]).unwrap();
        let base = ansatz.gates.len();
        let xx = qwc_group(&ham(&[("XX", 1.0)])).remove(0);
        let c = measurement_circuit(&xx, &ansatz).unwrap().unwrap();
        assert!(c.gates[base..base + 2].iter().all(|g| g.kind == GateKind::H));
        assert_eq!(c.measured_qubits, vec![0, 1]);
        let y = qwc_group(&ham(&[("IY", 1.0)])).remove(0);
        let c = measurement_circuit(&y, &ansatz).unwrap().unwrap();
        assert_eq!(c.gates[base].kind, GateKind::Sdg);
        assert_eq!(c.gates[base + 1].kind, GateKind::H);
        assert_eq!(c.measured_qubits, vec![1]);
        let id = qwc_group(&ham(&[("II", 2.0)])).remove(0);
        assert!(measurement_circuit(&id, &ansatz).unwrap().is_none());
        let bad = vec![xx[0].clone(), PauliTerm { pauli: "ZI".parse().unwrap(), coeff: 1.0 }];
        assert!(matches!(measurement_circuit(&bad, &ansatz), Err(VqeError::NotQwc(..))));
    }

    #[test]
    fn exact_energies() {
        assert!((exact_ground_energy(&ham(&[("Z", 1.0)])).unwrap() + 1.0).abs() < 1e-12);
        assert!((exact_ground_energy(&ham(&[("ZZ", 1.0), ("XX", 1.0)])).unwrap() + 2.0).abs() < 1e-12);
        assert!((exact_ground_energy(&ham(&[("II", 0.7)])).unwrap() - 0.7).abs() < 1e-12);
        assert!((exact_ground_energy(&ham(&[("Y", 1.0)])).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_sums_duplicates() {
        let h = PauliHamiltonian::parse("# c\nZI 0.5\nZI 0.25 # again\nXX -1\n").unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[0].coeff, 0.75);
        assert!(matches!(PauliHamiltonian::parse("ZI"), Err(VqeError::Parse { line: 1, .. })));
        assert!(matches!(PauliHamiltonian::parse("ZI 1\nZ 1"), Err(VqeError::Width { .. })));
        assert!(matches!(PauliHamiltonian::parse(""), Err(VqeError::Empty)));
    }
}
