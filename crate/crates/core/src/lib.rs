//! Online classification of drifting streams of node-labeled graphs.
//!
//! Graphs are turned into Weisfeiler-Lehman subtree feature counts
//! ([`wl`]), indexed by a growing [`vocab::Vocabulary`] and scored by linear
//! models that learn one sample at a time ([`online`]) or are retrained in
//! batch over day windows ([`batch`]). [`harness`] replays a corpus day by
//! day, testing each sample before learning from it. [`delays`] measures how
//! far apart variants of a family appear, and [`synth`] generates drifting
//! corpora with known ground truth.

pub mod batch;
pub mod checkpoint;
pub mod delays;
pub mod graph;
pub mod harness;
pub mod online;
pub mod sparse;
pub mod synth;
pub mod vocab;
pub mod wl;

pub use batch::{train_batch, BatchLoss, BatchModel, TrainConfig, TrainError};
pub use graph::{parse_corpus, write_corpus, Corpus, CorpusError, Label, LabeledGraph, NodeId};
pub use harness::{
    compare, run_batch_regimen, run_online, Comparison, DayRecord, HarnessError, RegimenKind,
    RegimenSpec, StreamReport,
};
pub use online::{Algorithm, LearnError, OnlineModel, Prediction};
pub use sparse::SparseVector;
pub use vocab::Vocabulary;
pub use wl::{extract_vocab, relabel, vectorize, wl_kernel, WlConfig};
