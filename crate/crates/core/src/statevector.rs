//! Dense statevector over a small register. Basis index bit `q` is qubit `q`.

use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};
use crate::pauli::Pauli;

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 unitary of a single-qubit gate kind.
pub fn gate_matrix(kind: GateKind, params: &[f64]) -> Option<Matrix2> {
    use std::f64::consts::FRAC_1_SQRT_2;
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let m = match kind {
        GateKind::Id => [[ONE, ZERO], [ZERO, ONE]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => [[h, h], [h, -h]],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -I]],
        GateKind::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        GateKind::Tdg => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
        GateKind::Rx => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            [[c.into(), -I * s], [-I * s, c.into()]]
        }
        GateKind::Ry => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            [[c.into(), (-s).into()], [s.into(), c.into()]]
        }
        GateKind::Rz => {
            let half = params[0] / 2.0;
            [[Complex64::from_polar(1.0, -half), ZERO], [ZERO, Complex64::from_polar(1.0, half)]]
        }
        GateKind::U3 => {
            let (theta, phi, lambda) = (params[0], params[1], params[2]);
            let (s, c) = (theta / 2.0).sin_cos();
            [
                [c.into(), -Complex64::from_polar(s, lambda)],
                [Complex64::from_polar(s, phi), Complex64::from_polar(c, phi + lambda)],
            ]
        }
        GateKind::Cx | GateKind::Swap | GateKind::Measure | GateKind::Barrier => return None,
    };
    Some(m)
}

pub fn pauli_matrix(p: Pauli) -> Matrix2 {
    let kind = match p {
        Pauli::I => GateKind::Id,
        Pauli::X => GateKind::X,
        Pauli::Y => GateKind::Y,
        Pauli::Z => GateKind::Z,
    };
    gate_matrix(kind, &[]).expect("pauli is single-qubit")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn apply_matrix(&mut self, q: usize, m: &Matrix2) {
        let bit = 1usize << q;
        for base in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let (a0, a1) = (self.amps[base], self.amps[base | bit]);
            self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[base | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let (c, t) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let (x, y) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & x != 0 && i & y == 0 {
                self.amps.swap(i, i ^ x ^ y);
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        if p != Pauli::I {
            self.apply_matrix(q, &pauli_matrix(p));
        }
    }

    /// Applies a unitary gate; measurements and barriers are no-ops here.
    pub fn apply(&mut self, g: &Gate) {
        match g.kind {
            GateKind::Cx => self.apply_cx(g.qubits[0], g.qubits[1]),
            GateKind::Swap => self.apply_swap(g.qubits[0], g.qubits[1]),
            GateKind::Measure | GateKind::Barrier => {}
            k => self.apply_matrix(g.qubits[0], &gate_matrix(k, &g.params).expect("single-qubit gate")),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}
