//! Output-quality metrics over bitstring distributions. Logarithms are base 2.

use serde::Serialize;
use thiserror::Error;

use crate::sim::{Counts, Distribution};

/// Allowed deviation of a distribution's total mass from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("negative probability {p} for `{bits}`")]
    Negative { bits: String, p: f64 },
    #[error("no shots recorded")]
    NoShots,
    #[error("expected outcome `{expected}` has {expected_len} bits but counts have {counts_len}")]
    WidthMismatch {
        expected: String,
        expected_len: usize,
        counts_len: usize,
    },
}

fn check(p: &Distribution) -> Result<(), MetricError> {
    if let Some((bits, &v)) = p.0.iter().find(|(_, &v)| v < 0.0) {
        return Err(MetricError::Negative {
            bits: bits.clone(),
            p: v,
        });
    }
    let total = p.total();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(MetricError::NotNormalized(total));
    }
    Ok(())
}

/// Probability of a successful trial: fraction of shots giving `expected`.
pub fn pst(counts: &Counts, expected: &str) -> Result<f64, MetricError> {
    if counts.shots == 0 {
        return Err(MetricError::NoShots);
    }
    if let Some(k) = counts.counts.keys().next() {
        if k.len() != expected.len() {
            return Err(MetricError::WidthMismatch {
                expected: expected.to_string(),
                expected_len: expected.len(),
                counts_len: k.len(),
            });
        }
    }
    Ok(counts.get(expected) as f64 / counts.shots as f64)
}

/// KL(p || q); infinite when `q` misses an outcome of `p`.
pub fn kl(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    check(p)?;
    check(q)?;
    let mut sum = 0.0;
    for (bits, &pi) in &p.0 {
        if pi > 0.0 {
            let qi = q.get(bits);
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            sum += pi * (pi / qi).log2();
        }
    }
    Ok(sum.max(0.0))
}

/// Jensen-Shannon divergence, in [0, 1].
pub fn jsd(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    check(p)?;
    check(q)?;
    let mut sum = 0.0;
    let keys = p.0.keys().chain(q.0.keys().filter(|k| !p.0.contains_key(*k)));
    for bits in keys {
        let (pi, qi) = (p.get(bits), q.get(bits));
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            sum += 0.5 * pi * (pi / m).log2();
        }
        if qi > 0.0 {
            sum += 0.5 * qi * (qi / m).log2();
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Total variation distance.
pub fn total_variation(p: &Distribution, q: &Distribution) -> f64 {
    let keys = p.0.keys().chain(q.0.keys().filter(|k| !p.0.contains_key(*k)));
    0.5 * keys.map(|k| (p.get(k) - q.get(k)).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub circuit: String,
    pub metric: String,
    pub value: f64,
    /// What the value was measured against, e.g. the expected bitstring.
    pub reference: String,
}

/// Per-circuit metric table, written as `circuit,metric,value,reference`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, circuit: &str, metric: &str, value: f64, reference: &str) {
        self.rows.push(MetricRow {
            circuit: circuit.to_string(),
            metric: metric.to_string(),
            value,
            reference: reference.to_string(),
        });
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["circuit", "metric", "value", "reference"]).expect("in-memory write");
        }
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}
