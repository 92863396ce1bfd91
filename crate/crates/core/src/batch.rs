//! Batch linear classifier used by the retraining baselines.
//!
//! Minimizes `(l2 / 2) ||w||^2 + mean(loss(y (w . x + b)))` by full-batch
//! (sub)gradient descent with step `learning_rate / sqrt(t)`. The bias is not
//! regularized. The returned model is the best iterate seen, so the recorded
//! objective never increases from one epoch to the next.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::Label;
use crate::online::{sigmoid, Prediction};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchLoss {
    /// `max(0, 1 - m)`: a linear SVM.
    Hinge,
    /// `log(1 + exp(-m))`.
    Logistic,
}

impl BatchLoss {
    pub fn tag(self) -> &'static str {
        match self {
            BatchLoss::Hinge => "hinge",
            BatchLoss::Logistic => "logistic",
        }
    }

    fn value(self, margin: f64) -> f64 {
        match self {
            BatchLoss::Hinge => (1.0 - margin).max(0.0),
            BatchLoss::Logistic => softplus(-margin),
        }
    }

    /// `-d loss / d margin`, choosing 0 at the hinge kink.
    fn neg_slope(self, margin: f64) -> f64 {
        match self {
            BatchLoss::Hinge => {
                if margin < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BatchLoss::Logistic => sigmoid(-margin),
        }
    }
}

impl fmt::Display for BatchLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BatchLoss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hinge" => Ok(BatchLoss::Hinge),
            "logistic" => Ok(BatchLoss::Logistic),
            other => Err(format!(
                "unknown loss {other:?} (expected hinge or logistic)"
            )),
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Recorded with the model for reproducibility; full-batch descent is
    /// deterministic and draws nothing from it.
    pub seed: u64,
    pub loss: BatchLoss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 42,
            loss: BatchLoss::Hinge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("cannot train on an empty sample list")]
    NoSamples,
    #[error("sample {sample} uses feature index {index} outside dimension {dimension}")]
    IndexOutOfRange {
        sample: usize,
        index: usize,
        dimension: usize,
    },
    #[error("invalid training config: {0}")]
    Config(String),
}

/// A linear model over a feature space frozen at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchModel {
    weights: Vec<f64>,
    bias: f64,
    config: TrainConfig,
    single_class: bool,
    loss_history: Vec<f64>,
}

impl BatchModel {
    pub fn from_parts(
        weights: Vec<f64>,
        bias: f64,
        config: TrainConfig,
        single_class: bool,
    ) -> Self {
        BatchModel {
            weights,
            bias,
            config,
            single_class,
            loss_history: Vec::new(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Size of the feature space seen in training; higher indices are
    /// ignored at prediction time.
    pub fn frozen_vocab_size(&self) -> usize {
        self.weights.len()
    }

    /// True when every training sample had the same label.
    pub fn single_class(&self) -> bool {
        self.single_class
    }

    /// Best objective value after each epoch (non-increasing). Empty for
    /// models restored from a checkpoint.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> Prediction {
        Prediction::from_score(self.score(x))
    }
}

/// Regularized training objective at `(weights, bias)`.
pub fn objective(
    weights: &[f64],
    bias: f64,
    samples: &[(SparseVector, Label)],
    l2: f64,
    loss: BatchLoss,
) -> f64 {
    let reg = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    let n = samples.len() as f64;
    let data: f64 = samples
        .iter()
        .map(|(x, y)| loss.value(y.sign() * (x.dot_dense(weights) + bias)))
        .sum();
    reg + data / n
}

/// A (sub)gradient of [`objective`] as `(d/dw, d/db)`.
pub fn subgradient(
    weights: &[f64],
    bias: f64,
    samples: &[(SparseVector, Label)],
    l2: f64,
    loss: BatchLoss,
) -> (Vec<f64>, f64) {
    let n = samples.len() as f64;
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_bias = 0.0;
    for (x, y) in samples {
        let margin = y.sign() * (x.dot_dense(weights) + bias);
        let coeff = loss.neg_slope(margin) * y.sign() / n;
        if coeff == 0.0 {
            continue;
        }
        for (j, v) in x.iter() {
            grad[j] -= coeff * v;
        }
        grad_bias -= coeff;
    }
    (grad, grad_bias)
}

pub fn train_batch(
    samples: &[(SparseVector, Label)],
    dimension: usize,
    config: &TrainConfig,
) -> Result<BatchModel, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::NoSamples);
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(TrainError::Config(format!(
            "learning_rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if !(config.l2.is_finite() && config.l2 >= 0.0) {
        return Err(TrainError::Config(format!(
            "l2 must be non-negative, got {}",
            config.l2
        )));
    }
    for (sample, (x, _)) in samples.iter().enumerate() {
        if x.min_dimension() > dimension {
            return Err(TrainError::IndexOutOfRange {
                sample,
                index: x.min_dimension() - 1,
                dimension,
            });
        }
    }
    let single_class = samples.iter().all(|(_, y)| *y == samples[0].1);

    let mut weights = vec![0.0; dimension];
    let mut bias = 0.0;
    let mut best = (weights.clone(), bias);
    let mut best_value = objective(&weights, bias, samples, config.l2, config.loss);
    let mut history = Vec::with_capacity(config.epochs);

    for t in 1..=config.epochs {
        let step = config.learning_rate / (t as f64).sqrt();
        let (grad, grad_bias) = subgradient(&weights, bias, samples, config.l2, config.loss);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        bias -= step * grad_bias;
        let value = objective(&weights, bias, samples, config.l2, config.loss);
        if value < best_value {
            best_value = value;
            best = (weights.clone(), bias);
        }
        history.push(best_value);
    }

    Ok(BatchModel {
        weights: best.0,
        bias: best.1,
        config: config.clone(),
        single_class,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied(), 0)
    }

    #[test]
    fn separable_pair() {
        let samples = vec![
            (sv(&[(0, 1.0)]), Label::Malicious),
            (sv(&[(1, 1.0)]), Label::Benign),
        ];
        let m = train_batch(&samples, 2, &TrainConfig::default()).unwrap();
        for (x, y) in &samples {
            assert_eq!(m.predict(x).label, *y);
        }
        assert!(!m.single_class());
        assert!(m.loss_history().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_window() {
        let samples: Vec<_> = (0..4)
            .map(|i| (sv(&[(i, 1.0 + i as f64)]), Label::Malicious))
            .collect();
        let m = train_batch(&samples, 4, &TrainConfig::default()).unwrap();
        assert!(m.single_class());
        for (x, _) in &samples {
            assert_eq!(m.predict(x).label, Label::Malicious);
        }
    }

    #[test]
    fn deterministic() {
        let samples = vec![
            (sv(&[(0, 1.0), (2, 3.0)]), Label::Malicious),
            (sv(&[(1, 1.0), (2, 1.0)]), Label::Benign),
            (sv(&[(0, 2.0)]), Label::Benign),
        ];
        let a = train_batch(&samples, 3, &TrainConfig::default()).unwrap();
        let b = train_batch(&samples, 3, &TrainConfig::default()).unwrap();
        let bits = |m: &BatchModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.bias().to_bits(), b.bias().to_bits());
    }

    #[test]
    fn prediction_drops_unseen_indices() {
        let m = BatchModel::from_parts(vec![1.0, -1.0], 0.25, TrainConfig::default(), false);
        assert_eq!(m.score(&sv(&[(5, 3.0), (9, 1.0)])), 0.25);
        let zero = BatchModel::from_parts(vec![0.0; 3], 0.0, TrainConfig::default(), false);
        assert_eq!(zero.predict(&sv(&[(1, 1.0)])).label, Label::Benign);
    }

    #[test]
    fn errors() {
        assert_eq!(
            train_batch(&[], 3, &TrainConfig::default()),
            Err(TrainError::NoSamples)
        );
        let samples = vec![(sv(&[(4, 1.0)]), Label::Benign)];
        assert!(matches!(
            train_batch(&samples, 3, &TrainConfig::default()),
            Err(TrainError::IndexOutOfRange { index: 4, .. })
        ));
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_batch(&[(sv(&[(0, 1.0)]), Label::Benign)], 1, &bad),
            Err(TrainError::Config(_))
        ));
    }

    #[test]
    fn logistic_loss_also_separates() {
        let samples = vec![
            (sv(&[(0, 1.0)]), Label::Malicious),
            (sv(&[(1, 1.0)]), Label::Benign),
        ];
        let cfg = TrainConfig {
            loss: BatchLoss::Logistic,
            ..TrainConfig::default()
        };
        let m = train_batch(&samples, 2, &cfg).unwrap();
        for (x, y) in &samples {
            assert_eq!(m.predict(x).label, *y);
        }
    }
}
