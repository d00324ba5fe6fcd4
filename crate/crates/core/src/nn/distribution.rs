use serde::{Deserialize, Serialize};

use super::network::softmax_in_place;
use crate::error::{Error, Result};

/// Probability vector over the discrete action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Validates that `probs` is a distribution (entries in [0, 1], sum 1 ± 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Input("empty action distribution".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input(format!("probabilities out of range: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("probabilities sum to {sum}")));
        }
        Ok(ActionDistribution { probs })
    }

    pub fn uniform(actions: usize) -> Self {
        ActionDistribution {
            probs: vec![1.0 / actions as f64; actions],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// MAP action; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> ActionDistribution {
    let mut probs = logits.to_vec();
    softmax_in_place(&mut probs);
    ActionDistribution { probs }
}

/// Draws an index with probability proportional to `weights` by inversion
/// of one uniform variate. The weights need not be normalized.
pub fn sample_weighted(weights: &[f64], rng: &mut impl rand::Rng) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Input(format!("degenerate sampling weights {weights:?}")));
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Draws an action from `dist`.
pub fn sample_categorical(dist: &ActionDistribution, rng: &mut impl rand::Rng) -> Result<usize> {
    sample_weighted(&dist.probs, rng)
}
