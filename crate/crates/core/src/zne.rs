//! Digital zero-noise extrapolation by random gate folding.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{inverse_gate, Circuit, Gate};
use crate::device::DeviceModel;
use crate::partition::Threshold;
use crate::pauli::PauliString;
use crate::pipeline::{execute, ExecutionOptions, Mode, PipelineError};
use crate::sim::{derive_seed, expectation, ideal_distribution, NoiseSpec, SimError};

pub const DEFAULT_SCALE_FACTORS: [f64; 4] = [1.0, 1.5, 2.0, 2.5];
pub const DEFAULT_POLY_ORDER: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZneError {
    #[error("circuit `{0}` has no foldable gate")]
    NoFoldableGates(String),
    #[error("scale factor {0} is below 1")]
    InvalidFactor(f64),
    #[error("extrapolation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("scale factor {0} appears twice")]
    DuplicateFactor(f64),
    #[error("polynomial order {order} needs more than {points} points")]
    PolynomialOrder { order: usize, points: usize },
    #[error("least-squares fit failed")]
    Singular,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Number of `G -> G G† G` folds that scales `n` unitary gates by `factor`,
/// rounded to the nearest whole fold.
pub fn fold_count(n: usize, factor: f64) -> usize {
    ((factor - 1.0) * n as f64 / 2.0).round() as usize
}

/// Scales the unitary part of `circ` by about `factor`.
///
/// Every gate is folded once per full round of `n` folds; the remaining
/// folds go to distinct gates drawn uniformly with `seed`. A gate folded
/// `m` times becomes `G (G† G)^m`.
pub fn fold_random(circ: &Circuit, factor: f64, seed: u64) -> Result<Circuit, ZneError> {
    if !(factor >= 1.0) {
        return Err(ZneError::InvalidFactor(factor));
    }
    let foldable: Vec<usize> = (0..circ.gates.len()).filter(|&i| circ.gates[i].kind.is_unitary()).collect();
    if foldable.is_empty() {
        return Err(ZneError::NoFoldableGates(circ.name.clone()));
    }
    let n = foldable.len();
    let k = fold_count(n, factor);
    let mut times = vec![0usize; circ.gates.len()];
    for &i in &foldable {
        times[i] = k / n;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in sample(&mut rng, n, k % n) {
        times[foldable[j]] += 1;
    }
    let mut out = Circuit {
        name: circ.name.clone(),
        num_qubits: circ.num_qubits,
        gates: Vec::with_capacity(circ.gates.len() + 2 * k),
        measured_qubits: circ.measured_qubits.clone(),
    };
    for (g, &m) in circ.gates.iter().zip(&times) {
        out.gates.push(g.clone());
        if m > 0 {
            let inv: Gate = inverse_gate(g).expect("unitary gates invert");
            for _ in 0..m {
                out.gates.push(inv.clone());
                out.gates.push(g.clone());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Polynomial(usize),
    Richardson,
}

fn check_points(points: &[(f64, f64)]) -> Result<(), ZneError> {
    if points.len() < 2 {
        return Err(ZneError::TooFewPoints(points.len()));
    }
    for (i, (x, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(y, _)| y == x) {
            return Err(ZneError::DuplicateFactor(*x));
        }
    }
    Ok(())
}

/// Least-squares polynomial of degree `order` through `points`, at 0.
fn fit_at_zero(points: &[(f64, f64)], order: usize) -> Result<f64, ZneError> {
    let a = DMatrix::from_fn(points.len(), order + 1, |r, c| points[r].0.powi(c as i32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coef = a.svd(true, true).solve(&b, 1e-14).map_err(|_| ZneError::Singular)?;
    Ok(coef[0])
}

/// Zero-noise estimate from `(scale factor, value)` points.
pub fn extrapolate(points: &[(f64, f64)], method: Method) -> Result<f64, ZneError> {
    check_points(points)?;
    match method {
        Method::Linear => fit_at_zero(points, 1),
        Method::Polynomial(order) => {
            if order >= points.len() {
                return Err(ZneError::PolynomialOrder {
                    order,
                    points: points.len(),
                });
            }
            fit_at_zero(points, order)
        }
        Method::Richardson => Ok(points
            .iter()
            .enumerate()
            .map(|(i, &(xi, yi))| {
                let weight: f64 = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &(xj, _))| xj / (xj - xi))
                    .product();
                yi * weight
            })
            .sum()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZneOptions {
    pub scale_factors: Vec<f64>,
    pub mode: Mode,
    pub sigma: f64,
    pub threshold: Threshold,
    pub poly_order: usize,
}

impl Default for ZneOptions {
    fn default() -> Self {
        ZneOptions {
            scale_factors: DEFAULT_SCALE_FACTORS.to_vec(),
            mode: Mode::Parallel,
            sigma: crate::partition::DEFAULT_SIGMA,
            threshold: Threshold::Unbounded,
            poly_order: DEFAULT_POLY_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsErrors {
    pub unmitigated: f64,
    pub linear: f64,
    pub polynomial: f64,
    pub richardson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZneReport {
    pub circuit: String,
    pub observable: PauliString,
    pub mode: Mode,
    pub scale_factors: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub unmitigated: f64,
    pub linear: f64,
    pub polynomial: f64,
    pub richardson: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_errors: Option<AbsErrors>,
    /// Extrapolation closest to the ideal value, when it is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<String>,
    pub batches: usize,
    pub throughput: f64,
}

impl ZneReport {
    /// Value of the best extrapolation, if an ideal reference was given.
    pub fn best_value(&self) -> Option<f64> {
        self.best.as_deref().map(|m| match m {
            "linear" => self.linear,
            "polynomial" => self.polynomial,
            _ => self.richardson,
        })
    }
}

/// Folds `circ` at every scale factor, executes the folded set, and
/// extrapolates the expectation of the diagonal `observable` (character
/// `k` acts on classical bit `k`) to zero noise.
pub fn zne_run(
    circ: &Circuit,
    observable: &PauliString,
    d: &DeviceModel,
    spec: &NoiseSpec,
    opts: &ZneOptions,
    with_ideal: bool,
) -> Result<ZneReport, ZneError> {
    let folded = opts
        .scale_factors
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            fold_random(circ, f, derive_seed(spec.seed, 1 << 32 | i as u64)).map(|c| c.renamed(format!("{}@{f}", circ.name)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = execute(
        &folded,
        d,
        &ExecutionOptions {
            mode: opts.mode,
            sigma: opts.sigma,
            threshold: opts.threshold,
            noise: *spec,
        },
    )?;
    let mut points = Vec::with_capacity(folded.len());
    for (i, &f) in opts.scale_factors.iter().enumerate() {
        points.push((f, expectation(&report.counts(i).to_distribution(), observable)?));
    }
    let unmitigated = points
        .iter()
        .find(|(f, _)| *f == 1.0)
        .map(|p| p.1)
        .unwrap_or(points[0].1);
    let order = opts.poly_order.min(points.len() - 1);
    let linear = extrapolate(&points, Method::Linear)?;
    let polynomial = extrapolate(&points, Method::Polynomial(order))?;
    let richardson = extrapolate(&points, Method::Richardson)?;

    let ideal = if with_ideal {
        Some(expectation(&ideal_distribution(circ)?, observable)?)
    } else {
        None
    };
    let abs_errors = ideal.map(|v| AbsErrors {
        unmitigated: (unmitigated - v).abs(),
        linear: (linear - v).abs(),
        polynomial: (polynomial - v).abs(),
        richardson: (richardson - v).abs(),
    });
    let best = abs_errors.as_ref().map(|e| {
        [("linear", e.linear), ("polynomial", e.polynomial), ("richardson", e.richardson)]
            .into_iter()
            .fold(("linear", f64::INFINITY), |b, m| if m.1 < b.1 { m } else { b })
            .0
            .to_string()
    });
    Ok(ZneReport {
        circuit: circ.name.clone(),
        observable: observable.clone(),
        mode: opts.mode,
        scale_factors: opts.scale_factors.clone(),
        points,
        unmitigated,
        linear,
        polynomial,
        richardson,
        ideal,
        abs_errors,
        best,
        batches: report.plan.num_batches(),
        throughput: report.plan.mean_throughput(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;

    fn sample_circuit() -> Circuit {
        let mut c = Circuit::new("c", 2);
        c.push(Gate::one(GateKind::H, 0)).unwrap();
        c.push(Gate::cx(0, 1)).unwrap();
        c.push(Gate::rot(GateKind::Rz, 1, 0.3)).unwrap();
        c.measure_all();
        c
    }

    #[test]
    fn fold_counts() {
        let c = sample_circuit();
        assert_eq!(fold_random(&c, 1.0, 0).unwrap(), c);
        let three = fold_random(&c, 3.0, 0).unwrap();
        assert_eq!(three.unitary_gates().count(), 9);
        let five = fold_random(&c, 5.0, 0).unwrap();
        assert_eq!(five.unitary_gates().count(), 15);
        assert_eq!(fold_random(&c, 2.0, 0).unwrap().unitary_gates().count(), 7);
        assert!(matches!(fold_random(&c, 0.5, 0), Err(ZneError::InvalidFactor(_))));
        let mut m = Circuit::new("m", 1);
        m.measure_all();
        assert!(matches!(fold_random(&m, 2.0, 0), Err(ZneError::NoFoldableGates(_))));
    }

    #[test]
    fn extrapolation_rules() {
        let pts = [(1.0, 0.8), (2.0, 0.7)];
        let r = extrapolate(&pts, Method::Richardson).unwrap();
        assert!((r - (2.0 * 0.8 - 0.7)).abs() < 1e-12);
        assert!((extrapolate(&pts, Method::Linear).unwrap() - r).abs() < 1e-12);
        assert!(matches!(
            extrapolate(&pts, Method::Polynomial(2)),
            Err(ZneError::PolynomialOrder { .. })
        ));
        assert!(matches!(
            extrapolate(&[(1.0, 0.1), (1.0, 0.2)], Method::Linear),
            Err(ZneError::DuplicateFactor(_))
        ));
        assert!(matches!(extrapolate(&[(1.0, 0.1)], Method::Linear), Err(ZneError::TooFewPoints(1))));
        let quad: Vec<(f64, f64)> = [1.0, 1.5, 2.0, 2.5].iter().map(|&x| (x, 0.5 - 0.1 * x + 0.02 * x * x)).collect();
        assert!((extrapolate(&quad, Method::Polynomial(2)).unwrap() - 0.5).abs() < 1e-9);
        assert!((extrapolate(&quad, Method::Richardson).unwrap() - 0.5).abs() < 1e-9);
    }
}
