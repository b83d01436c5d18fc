//! Reference implementations used as test oracles. Written from the
//! textbook definitions, independent of the library's simulator.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use qmpc::circuit::{Circuit, Gate, GateKind};
use qmpc::sim::{Counts, Distribution};
use qmpc::vqe::PauliHamiltonian;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pauli(ch: char) -> DMatrix<C> {
    match ch {
        'I' => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        'X' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'Y' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        'Z' => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        _ => unreachable!(),
    }
}

/// exp(-i θ P / 2)
fn rotation(p: char, theta: f64) -> DMatrix<C> {
    pauli('I') * c((theta / 2.0).cos(), 0.0) - pauli(p) * c(0.0, (theta / 2.0).sin())
}

fn phase(phi: f64) -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), C::from_polar(1.0, phi)])
}

pub fn single_qubit_matrix(g: &Gate) -> DMatrix<C> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    match g.kind {
        GateKind::Id => pauli('I'),
        GateKind::X => pauli('X'),
        GateKind::Y => pauli('Y'),
        GateKind::Z => pauli('Z'),
        GateKind::H => (pauli('X') + pauli('Z')) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        GateKind::S => phase(FRAC_PI_2),
        GateKind::Sdg => phase(-FRAC_PI_2),
        GateKind::T => phase(FRAC_PI_4),
        GateKind::Tdg => phase(-FRAC_PI_4),
        GateKind::Rx => rotation('X', g.params[0]),
        GateKind::Ry => rotation('Y', g.params[0]),
        GateKind::Rz => rotation('Z', g.params[0]),
        // u3(θ,φ,λ) = e^{i(φ+λ)/2} Rz(φ) Ry(θ) Rz(λ)
        GateKind::U3 => {
            let (t, p, l) = (g.params[0], g.params[1], g.params[2]);
            rotation('Z', p) * rotation('Y', t) * rotation('Z', l) * C::from_polar(1.0, (p + l) / 2.0)
        }
        _ => unreachable!("not a single-qubit unitary"),
    }
}

/// Full 2^n matrix of a gate; basis index bit `k` is qubit `k`.
pub fn gate_unitary(g: &Gate, n: usize) -> DMatrix<C> {
    let dim = 1usize << n;
    match g.kind {
        GateKind::Cx | GateKind::Swap => {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            let mut m = DMatrix::zeros(dim, dim);
            for col in 0..dim {
                let row = if g.kind == GateKind::Cx {
                    if col >> a & 1 == 1 {
                        col ^ (1 << b)
                    } else {
                        col
                    }
                } else {
                    let (x, y) = (col >> a & 1, col >> b & 1);
                    (col & !(1 << a) & !(1 << b)) | (y << a) | (x << b)
                };
                m[(row, col)] = c(1., 0.);
            }
            m
        }
        _ => {
            // kron with qubit n-1 leftmost
            let mut m = DMatrix::from_element(1, 1, c(1., 0.));
            for k in (0..n).rev() {
                let f = if k == g.qubits[0] { single_qubit_matrix(g) } else { pauli('I') };
                m = m.kronecker(&f);
            }
            m
        }
    }
}

pub fn circuit_unitary(circ: &Circuit, n: usize, relabel: impl Fn(usize) -> usize) -> DMatrix<C> {
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for g in circ.gates.iter().filter(|g| g.kind.is_unitary()) {
        u = gate_unitary(&g.remapped(&relabel), n) * u;
    }
    u
}

/// Permutation taking logical basis states to the partition-local basis,
/// where `pos` numbers the partition's physical qubits.
pub fn layout_permutation(layout: &[usize], pos: &BTreeMap<usize, usize>) -> DMatrix<C> {
    let dim = 1usize << layout.len();
    let mut m = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let mut y = 0;
        for (logical, &phys) in layout.iter().enumerate() {
            y |= (x >> logical & 1) << pos[&phys];
        }
        m[(y, x)] = c(1., 0.);
    }
    m
}

/// Final state of `circ` on |0..0>.
pub fn final_state(circ: &Circuit) -> Vec<C> {
    let u = circuit_unitary(circ, circ.num_qubits, |q| q);
    u.column(0).iter().copied().collect()
}

/// Exact outcome distribution over the circuit's measured qubits.
pub fn exact_distribution(circ: &Circuit) -> Distribution {
    let qubits: Vec<usize> = (0..circ.num_qubits).collect();
    exact_distribution_over(circ, &qubits)
}

/// Exact outcome distribution of a circuit that only touches `qubits`,
/// simulated on that register alone.
pub fn exact_distribution_over(circ: &Circuit, qubits: &[usize]) -> Distribution {
    let pos: BTreeMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let u = circuit_unitary(circ, qubits.len(), |q| pos[&q]);
    let mut out = BTreeMap::new();
    for (i, a) in u.column(0).iter().enumerate() {
        let p = a.norm_sqr();
        if p > 1e-15 {
            let key: String = circ
                .measured_qubits
                .iter()
                .map(|q| if i >> pos[q] & 1 == 1 { '1' } else { '0' })
                .collect();
            *out.entry(key).or_insert(0.0) += p;
        }
    }
    Distribution(out)
}

pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> DMatrix<C> {
    let n = h.num_qubits();
    let mut m = DMatrix::zeros(1 << n, 1 << n);
    for t in h.terms() {
        let s = t.pauli.to_string();
        let mut k = DMatrix::from_element(1, 1, c(1., 0.));
        for ch in s.chars().rev() {
            k = k.kronecker(&pauli(ch));
        }
        m += k * c(t.coeff, 0.0);
    }
    m
}

/// <psi|H|psi> for the ansatz state.
pub fn energy(h: &PauliHamiltonian, ansatz: &Circuit) -> f64 {
    let psi = nalgebra::DVector::from_vec(final_state(ansatz));
    (psi.adjoint() * hamiltonian_matrix(h) * &psi)[(0, 0)].re
}

/// <psi|H^2|psi> - <psi|H|psi>^2 summed per QWC group, i.e. the variance
/// of the grouped estimator with one shot per group.
pub fn term_variance(h: &PauliHamiltonian, ansatz: &Circuit, group: &[String]) -> f64 {
    let n = h.num_qubits();
    let psi = nalgebra::DVector::from_vec(final_state(ansatz));
    let mut m = DMatrix::zeros(1 << n, 1 << n);
    for t in h.terms().iter().filter(|t| group.contains(&t.pauli.to_string())) {
        let mut k = DMatrix::from_element(1, 1, c(1., 0.));
        for ch in t.pauli.to_string().chars().rev() {
            k = k.kronecker(&pauli(ch));
        }
        m += k * c(t.coeff, 0.0);
    }
    let mean = (psi.adjoint() * &m * &psi)[(0, 0)].re;
    let sq = (psi.adjoint() * &m * &m * &psi)[(0, 0)].re;
    (sq - mean * mean).max(0.0)
}

pub fn tv(p: &Distribution, q: &Distribution) -> f64 {
    let mut keys: Vec<&String> = p.0.keys().chain(q.0.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (p.get(k) - q.get(k)).abs()).sum::<f64>()
}

pub fn empirical(counts: &Counts) -> Distribution {
    Distribution(
        counts
            .counts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / counts.shots as f64))
            .collect(),
    )
}

/// Largest |a - e^{iφ} b| over entries, with φ aligned on the largest entry of `b`.
pub fn distance_up_to_phase(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let (idx, _) = b
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
    let ph = a.as_slice()[idx] / b.as_slice()[idx];
    let ph = ph / ph.norm();
    a.iter().zip(b.iter()).map(|(x, y)| (x - ph * y).norm()).fold(0.0, f64::max)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Unitary gates that must follow gate `i`: the next operation on each of
/// its qubits, looking through barriers.
pub fn successors(c: &Circuit, i: usize) -> Vec<usize> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![i];
    let mut seen_barriers = BTreeSet::new();
    while let Some(k) = frontier.pop() {
        for &q in &c.gates[k].qubits {
            if let Some(j) = (k + 1..c.gates.len()).find(|&j| c.gates[j].qubits.contains(&q)) {
                match c.gates[j].kind {
                    GateKind::Barrier => {
                        if seen_barriers.insert(j) {
                            frontier.push(j);
                        }
                    }
                    GateKind::Measure => {}
                    _ => {
                        out.insert(j);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Validity and tightness of an ALAP slot assignment whose measurement
/// fence sits at `fence`.
pub fn check_alap(c: &Circuit, slot: impl Fn(usize) -> Option<usize>, fence: usize) -> Result<usize, String> {
    let mut checked = 0;
    for (i, g) in c.gates.iter().enumerate() {
        match g.kind {
            GateKind::Barrier => ensure(slot(i).is_none(), || format!("{}: barrier {i} has a slot", c.name))?,
            GateKind::Measure => {
                ensure(slot(i) == Some(fence), || format!("{}: measurement {i} not at the fence", c.name))?
            }
            _ => {
                let s = slot(i).ok_or_else(|| format!("{}: gate {i} unscheduled", c.name))?;
                ensure(s < fence, || format!("{}: gate {i} at slot {s} crosses the fence {fence}", c.name))?;
                let next = successors(c, i);
                let mut blocked = s + 1 == fence;
                for j in next {
                    let sj = slot(j).expect("unitary successor scheduled");
                    ensure(sj > s, || format!("{}: gate {j} (slot {sj}) not after gate {i} (slot {s})", c.name))?;
                    blocked |= sj == s + 1;
                }
                ensure(blocked, || format!("{}: gate {i} at slot {s} could move later", c.name))?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}
