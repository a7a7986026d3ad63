use serde::{Deserialize, Serialize};

use super::network::Network;
use super::train::LabeledSet;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[ε, 1 − ε]` before taking logs.
pub const BCE_EPSILON: f64 = 1e-7;

/// Mean binary cross-entropy over every entry of the two matrices.
pub fn bce_loss(probs: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if probs.len() != labels.len() || probs.iter().zip(labels).any(|(p, y)| p.len() != y.len()) {
        return Err(Error::Shape("probabilities and labels differ in shape".into()));
    }
    let n: usize = probs.iter().map(Vec::len).sum();
    if n == 0 {
        return Err(Error::Input("loss of an empty batch".into()));
    }
    let total: f64 = probs
        .iter()
        .flatten()
        .zip(labels.iter().flatten())
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub bce_loss: f64,
    /// Entry-wise accuracy at a 0.5 decision threshold.
    pub accuracy: f64,
    /// Positive-class precision over all entries; 0 when nothing is predicted positive.
    pub precision: f64,
    pub recall: f64,
    /// Fraction of rows whose whole label vector is predicted exactly.
    pub multilabel_accuracy: f64,
}

impl Metrics {
    pub fn from_predictions(probs: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<Metrics> {
        let bce_loss = bce_loss(probs, labels)?;
        let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
        let mut exact = 0usize;
        for (p_row, y_row) in probs.iter().zip(labels) {
            let mut row_ok = true;
            for (&p, &y) in p_row.iter().zip(y_row) {
                let pred = p >= 0.5;
                let truth = y >= 0.5;
                match (pred, truth) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, false) => tn += 1,
                    (false, true) => fneg += 1,
                }
                row_ok &= pred == truth;
            }
            exact += row_ok as usize;
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Ok(Metrics {
            bce_loss,
            accuracy: ratio(tp + tn, tp + tn + fp + fneg),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fneg),
            multilabel_accuracy: ratio(exact, probs.len()),
        })
    }
}

pub fn evaluate(net: &Network, data: &LabeledSet) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty set".into()));
    }
    let probs = data
        .inputs
        .iter()
        .map(|x| net.predict(x))
        .collect::<Result<Vec<_>>>()?;
    Metrics::from_predictions(&probs, &data.labels)
}
