//! Online linear learners over a growing feature space.
//!
//! All learners start from the zero weight vector and predict with
//! `sign(w . x)`, where a score of exactly zero maps to [`Label::Benign`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::Label;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Hard-margin Passive-Aggressive.
    PassiveAggressive,
    /// Mistake-driven perceptron.
    Perceptron,
    /// Logistic regression by per-sample gradient steps.
    SgdLogistic,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::PassiveAggressive => "pa",
            Algorithm::Perceptron => "perceptron",
            Algorithm::SgdLogistic => "sgdlr",
        }
    }

    /// Step scale used when none is given. PA ignores it.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Algorithm::PassiveAggressive | Algorithm::Perceptron => 1.0,
            Algorithm::SgdLogistic => 0.1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm {0:?} (expected pa, perceptron or sgdlr)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pa" => Ok(Algorithm::PassiveAggressive),
            "perceptron" => Ok(Algorithm::Perceptron),
            "sgdlr" => Ok(Algorithm::SgdLogistic),
            other => Err(UnknownAlgorithm(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    pub label: Label,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        let label = if score > 0.0 {
            Label::Malicious
        } else {
            Label::Benign
        };
        Prediction { score, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    Passive,
    /// The weights moved by `step * y * x`.
    Updated {
        step: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    /// PA cannot restore the margin with an all-zero sample.
    #[error("all-zero sample violates the margin; update skipped")]
    DegenerateSample,
    #[error("cannot shrink model from {current} to {requested} weights")]
    Shrink { current: usize, requested: usize },
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
}

/// Weights plus bookkeeping for one online learner.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineModel {
    weights: Vec<f64>,
    algorithm: Algorithm,
    learning_rate: f64,
    updates_made: u64,
    samples_seen: u64,
}

impl OnlineModel {
    pub fn new(algorithm: Algorithm) -> Self {
        OnlineModel {
            weights: Vec::new(),
            algorithm,
            learning_rate: algorithm.default_learning_rate(),
            updates_made: 0,
            samples_seen: 0,
        }
    }

    pub fn with_learning_rate(
        algorithm: Algorithm,
        learning_rate: f64,
    ) -> Result<Self, LearnError> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(LearnError::LearningRate(learning_rate));
        }
        Ok(OnlineModel {
            learning_rate,
            ..OnlineModel::new(algorithm)
        })
    }

    /// Reassembles a model from checkpointed parts.
    pub fn from_parts(
        algorithm: Algorithm,
        learning_rate: f64,
        weights: Vec<f64>,
        updates_made: u64,
        samples_seen: u64,
    ) -> Self {
        OnlineModel {
            weights,
            algorithm,
            learning_rate,
            updates_made,
            samples_seen,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn updates_made(&self) -> u64 {
        self.updates_made
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights)
    }

    pub fn predict(&self, x: &SparseVector) -> Prediction {
        Prediction::from_score(self.score(x))
    }

    /// Zero-extends the weights to `dimension`.
    pub fn grow(&mut self, dimension: usize) -> Result<(), LearnError> {
        if dimension < self.weights.len() {
            return Err(LearnError::Shrink {
                current: self.weights.len(),
                requested: dimension,
            });
        }
        self.weights.resize(dimension, 0.0);
        Ok(())
    }

    /// Applies this model's own update rule for one labeled sample.
    pub fn update(&mut self, x: &SparseVector, y: Label) -> Result<UpdateOutcome, LearnError> {
        match self.algorithm {
            Algorithm::PassiveAggressive => self.update_pa(x, y),
            Algorithm::Perceptron => Ok(self.update_perceptron(x, y)),
            Algorithm::SgdLogistic => Ok(self.update_sgd_logistic(x, y)),
        }
    }

    /// Passive when `y (w . x) >= 1`; otherwise projects `w` onto the
    /// half-space `y (w . x) >= 1` with step `(1 - y (w . x)) / ||x||^2`.
    pub fn update_pa(&mut self, x: &SparseVector, y: Label) -> Result<UpdateOutcome, LearnError> {
        self.samples_seen += 1;
        let margin = y.sign() * self.score(x);
        if margin >= 1.0 {
            return Ok(UpdateOutcome::Passive);
        }
        let norm_sq = x.squared_norm();
        if norm_sq == 0.0 {
            return Err(LearnError::DegenerateSample);
        }
        let step = (1.0 - margin) / norm_sq;
        self.apply(x, step * y.sign());
        Ok(UpdateOutcome::Updated { step })
    }

    /// Adds `rate * y * x` only when the current prediction is wrong.
    pub fn update_perceptron(&mut self, x: &SparseVector, y: Label) -> UpdateOutcome {
        self.samples_seen += 1;
        if self.predict(x).label == y {
            return UpdateOutcome::Passive;
        }
        let step = self.learning_rate;
        self.apply(x, step * y.sign());
        UpdateOutcome::Updated { step }
    }

    /// One gradient step on `log(1 + exp(-y w . x))`:
    /// `w += rate * y * x * sigmoid(-y w . x)`.
    pub fn update_sgd_logistic(&mut self, x: &SparseVector, y: Label) -> UpdateOutcome {
        self.samples_seen += 1;
        let step = self.learning_rate * sigmoid(-y.sign() * self.score(x));
        self.apply(x, step * y.sign());
        UpdateOutcome::Updated { step }
    }

    fn apply(&mut self, x: &SparseVector, coefficient: f64) {
        if x.min_dimension() > self.weights.len() {
            self.weights.resize(x.min_dimension(), 0.0);
        }
        for (j, v) in x.iter() {
            self.weights[j] += coefficient * v;
        }
        self.updates_made += 1;
    }
}

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
