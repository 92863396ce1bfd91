//! Text checkpoints for online and batch models.
//!
//! ```text
//! wlstream-checkpoint 1
//! kind online
//! algorithm pa
//! learning_rate 1
//! updates_made 3
//! samples_seen 5
//! dimension 10
//! nonzero 2
//! 0 0.5
//! 7 -1.25
//! ```
//!
//! Batch checkpoints replace the online header fields with `loss`, `epochs`,
//! `learning_rate`, `l2`, `seed`, `bias` and `single_class`; `dimension` is
//! the frozen vocabulary size. Floats use Rust's shortest round-trip form, so
//! reading a checkpoint reproduces every weight exactly.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::batch::{BatchLoss, BatchModel, TrainConfig};
use crate::online::{Algorithm, OnlineModel};

const MAGIC: &str = "wlstream-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Online(OnlineModel),
    Batch(BatchModel),
}

fn nonzero(weights: &[f64]) -> Vec<(usize, f64)> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, w)| (i, *w))
        .collect()
}

fn write_weights<W: Write>(sink: &mut W, weights: &[f64]) -> std::io::Result<()> {
    let nz = nonzero(weights);
    writeln!(sink, "dimension {}", weights.len())?;
    writeln!(sink, "nonzero {}", nz.len())?;
    for (i, w) in nz {
        writeln!(sink, "{i} {w}")?;
    }
    Ok(())
}

pub fn write_online<W: Write>(model: &OnlineModel, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{MAGIC} {VERSION}")?;
    writeln!(sink, "kind online")?;
    writeln!(sink, "algorithm {}", model.algorithm().tag())?;
    writeln!(sink, "learning_rate {}", model.learning_rate())?;
    writeln!(sink, "updates_made {}", model.updates_made())?;
    writeln!(sink, "samples_seen {}", model.samples_seen())?;
    write_weights(&mut sink, model.weights())?;
    sink.flush()
}

pub fn write_batch<W: Write>(model: &BatchModel, mut sink: W) -> std::io::Result<()> {
    let cfg = model.config();
    writeln!(sink, "{MAGIC} {VERSION}")?;
    writeln!(sink, "kind batch")?;
    writeln!(sink, "loss {}", cfg.loss.tag())?;
    writeln!(sink, "epochs {}", cfg.epochs)?;
    writeln!(sink, "learning_rate {}", cfg.learning_rate)?;
    writeln!(sink, "l2 {}", cfg.l2)?;
    writeln!(sink, "seed {}", cfg.seed)?;
    writeln!(sink, "bias {}", model.bias())?;
    writeln!(sink, "single_class {}", model.single_class())?;
    write_weights(&mut sink, model.weights())?;
    sink.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, CheckpointError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.error("unexpected end of checkpoint")),
        }
    }

    fn error(&self, message: impl Into<String>) -> CheckpointError {
        CheckpointError::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CheckpointError> {
        let line = self.next_line()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.error(format!("expected `{key} <value>`")))?;
        value
            .parse()
            .map_err(|_| self.error(format!("bad value for {key}: {value:?}")))
    }

    fn weights(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let dimension: usize = self.field("dimension")?;
        let count: usize = self.field("nonzero")?;
        let mut weights = vec![0.0; dimension];
        for _ in 0..count {
            let line = self.next_line()?;
            let (i, w) = line
                .split_once(' ')
                .ok_or_else(|| self.error("expected `<index> <weight>`"))?;
            let i: usize = i.parse().map_err(|_| self.error("bad weight index"))?;
            let w: f64 = w.parse().map_err(|_| self.error("bad weight value"))?;
            *weights.get_mut(i).ok_or_else(|| {
                self.error(format!("weight index {i} outside dimension {dimension}"))
            })? = w;
        }
        Ok(weights)
    }
}

pub fn read_checkpoint<R: BufRead>(source: R) -> Result<Checkpoint, CheckpointError> {
    let mut lines = Lines {
        inner: source.lines(),
        line: 0,
    };
    let header = lines.next_line()?;
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| lines.error("missing checkpoint header"))?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let kind: String = lines.field("kind")?;
    match kind.as_str() {
        "online" => {
            let algorithm: String = lines.field("algorithm")?;
            let algorithm: Algorithm =
                algorithm.parse().map_err(|e| lines.error(format!("{e}")))?;
            let learning_rate = lines.field("learning_rate")?;
            let updates_made = lines.field("updates_made")?;
            let samples_seen = lines.field("samples_seen")?;
            let weights = lines.weights()?;
            Ok(Checkpoint::Online(OnlineModel::from_parts(
                algorithm,
                learning_rate,
                weights,
                updates_made,
                samples_seen,
            )))
        }
        "batch" => {
            let loss: String = lines.field("loss")?;
            let loss: BatchLoss = loss.parse().map_err(|e: String| lines.error(e))?;
            let config = TrainConfig {
                loss,
                epochs: lines.field("epochs")?,
                learning_rate: lines.field("learning_rate")?,
                l2: lines.field("l2")?,
                seed: lines.field("seed")?,
            };
            let bias = lines.field("bias")?;
            let single_class = lines.field("single_class")?;
            let weights = lines.weights()?;
            Ok(Checkpoint::Batch(BatchModel::from_parts(
                weights,
                bias,
                config,
                single_class,
            )))
        }
        other => Err(lines.error(format!("unknown model kind {other:?}"))),
    }
}
