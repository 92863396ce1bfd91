//! Emulated live feed: day-batched, test-then-train evaluation of online
//! learners and of periodically retrained batch baselines.
//!
//! Every regimen produces one [`DayRecord`] per corpus day. A day that no
//! model evaluated has zero samples and, until the first evaluated sample, an
//! undefined cumulative error rate.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

use crate::batch::{train_batch, BatchModel, TrainConfig, TrainError};
use crate::graph::{Corpus, Label};
use crate::online::{LearnError, OnlineModel};
use crate::vocab::Vocabulary;
use crate::wl::{relabel, WlConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimenKind {
    /// Vocabulary and weights grow with every sample.
    OnlineVariable,
    /// Vocabulary frozen to the first days of the stream.
    OnlineFixed,
    /// One model trained on day 0.
    BatchOnce,
    /// Fresh model each day, trained on the previous day.
    BatchDaily,
    /// One model trained on the first `window_days` days.
    BatchMultiOnce,
    /// Fresh model each day, trained on the preceding `window_days` days.
    BatchMultiDaily,
}

impl RegimenKind {
    pub const ALL: [RegimenKind; 6] = [
        RegimenKind::OnlineVariable,
        RegimenKind::OnlineFixed,
        RegimenKind::BatchOnce,
        RegimenKind::BatchDaily,
        RegimenKind::BatchMultiOnce,
        RegimenKind::BatchMultiDaily,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RegimenKind::OnlineVariable => "online-variable",
            RegimenKind::OnlineFixed => "online-fixed",
            RegimenKind::BatchOnce => "once",
            RegimenKind::BatchDaily => "daily",
            RegimenKind::BatchMultiOnce => "multi-once",
            RegimenKind::BatchMultiDaily => "multi-daily",
        }
    }

    pub fn is_online(self) -> bool {
        matches!(self, RegimenKind::OnlineVariable | RegimenKind::OnlineFixed)
    }
}

impl fmt::Display for RegimenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RegimenKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegimenKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| HarnessError::UnknownRegimen(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimenSpec {
    pub kind: RegimenKind,
    /// Training window for the multi-day batch regimens.
    pub window_days: u32,
    /// Last day whose features make up the frozen online vocabulary.
    pub fixed_vocab_day: u32,
}

impl RegimenSpec {
    pub fn new(kind: RegimenKind) -> Self {
        RegimenSpec {
            kind,
            window_days: 10,
            fixed_vocab_day: 0,
        }
    }

    pub fn with_window(mut self, window_days: u32) -> Self {
        self.window_days = window_days;
        self
    }

    pub fn with_fixed_vocab_day(mut self, day: u32) -> Self {
        self.fixed_vocab_day = day;
        self
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.window_days == 0 {
            return Err(HarnessError::InvalidRegimen(
                "window_days must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Training window (inclusive day range) of the batch model that scores
    /// `day`, or `None` if the regimen does not evaluate that day.
    pub fn training_window(&self, day: u32) -> Option<RangeInclusive<u32>> {
        let w = self.window_days;
        match self.kind {
            RegimenKind::BatchOnce => (day >= 1).then_some(0..=0),
            RegimenKind::BatchDaily => (day >= 1).then(|| day - 1..=day - 1),
            RegimenKind::BatchMultiOnce => (day >= w).then(|| 0..=w - 1),
            RegimenKind::BatchMultiDaily => (day >= w).then(|| day - w..=day - 1),
            RegimenKind::OnlineVariable | RegimenKind::OnlineFixed => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus has no graphs")]
    EmptyCorpus,
    #[error("unknown regimen {0:?} (expected online-variable, online-fixed, once, daily, multi-once or multi-daily)")]
    UnknownRegimen(String),
    #[error("regimen {0} is not an online regimen")]
    NotOnline(RegimenKind),
    #[error("regimen {0} is not a batch regimen")]
    NotBatch(RegimenKind),
    #[error("invalid regimen: {0}")]
    InvalidRegimen(String),
    #[error("reports {first:?} and {other:?} cover different days")]
    DayRangeMismatch { first: String, other: String },
    #[error("nothing to compare")]
    NoReports,
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub day: u32,
    pub samples: u64,
    pub mistakes: u64,
    /// Mistakes over samples for all days up to and including this one;
    /// `None` until the first evaluated sample.
    pub cumulative_error_rate: Option<f64>,
    /// Size of the feature space the scoring model used at the end of the
    /// day (0 when no model scored the day).
    pub vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Totals {
    pub samples: u64,
    pub mistakes: u64,
    /// `1 - final cumulative error rate`.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamReport {
    pub regimen: String,
    pub per_day: Vec<DayRecord>,
    pub totals: Totals,
    /// Days a batch regimen could not score because its training window held
    /// no samples.
    pub skipped_days: Vec<u32>,
    /// Days scored by a batch model trained on a single-class window.
    pub single_class_days: Vec<u32>,
    /// Samples whose update was skipped because their vector was all zero.
    pub degenerate_samples: u64,
}

impl StreamReport {
    pub fn final_error_rate(&self) -> Option<f64> {
        self.per_day
            .iter()
            .rev()
            .find_map(|d| d.cumulative_error_rate)
    }

    pub fn days(&self) -> Vec<u32> {
        self.per_day.iter().map(|d| d.day).collect()
    }

    /// CSV with header `day,regimen,samples,mistakes,cumulative_error_rate,vocab_size`.
    /// An undefined error rate is written as an empty field.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("day,regimen,samples,mistakes,cumulative_error_rate,vocab_size\n");
        for d in &self.per_day {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.day,
                self.regimen,
                d.samples,
                d.mistakes,
                fmt_rate(d.cumulative_error_rate),
                d.vocab_size
            ));
        }
        out
    }
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map(|r| r.to_string()).unwrap_or_default()
}

/// What a true label was read for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelUse {
    /// Scoring a prediction that has already been recorded.
    Score,
    /// Training the model with the given id.
    Train { model: u32 },
}

/// Instrumentation hooks fired in processing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamEvent<'a> {
    Predicted {
        graph: &'a str,
        day: u32,
        model: u32,
        predicted: Label,
    },
    LabelRead {
        graph: &'a str,
        usage: LabelUse,
    },
}

pub trait StreamObserver {
    fn on_event(&mut self, event: StreamEvent<'_>);
}

impl<F: FnMut(StreamEvent<'_>)> StreamObserver for F {
    fn on_event(&mut self, event: StreamEvent<'_>) {
        self(event)
    }
}

/// Observer that ignores every event.
pub struct Quiet;

impl StreamObserver for Quiet {
    fn on_event(&mut self, _event: StreamEvent<'_>) {}
}

/// Per-day counters turned into a [`StreamReport`].
struct Tally {
    days: Vec<(u64, u64, usize)>,
}

impl Tally {
    fn new(day_count: u32) -> Self {
        Tally {
            days: vec![(0, 0, 0); day_count as usize],
        }
    }

    fn record(&mut self, day: u32, correct: bool) {
        let entry = &mut self.days[day as usize];
        entry.0 += 1;
        if !correct {
            entry.1 += 1;
        }
    }

    fn set_vocab(&mut self, day: u32, size: usize) {
        self.days[day as usize].2 = size;
    }

    fn finish(
        self,
        regimen: String,
        skipped_days: Vec<u32>,
        single_class_days: Vec<u32>,
        degenerate_samples: u64,
    ) -> StreamReport {
        let (mut samples, mut mistakes) = (0u64, 0u64);
        let per_day: Vec<DayRecord> = self
            .days
            .into_iter()
            .enumerate()
            .map(|(day, (s, m, vocab_size))| {
                samples += s;
                mistakes += m;
                DayRecord {
                    day: day as u32,
                    samples: s,
                    mistakes: m,
                    cumulative_error_rate: (samples > 0).then(|| mistakes as f64 / samples as f64),
                    vocab_size,
                }
            })
            .collect();
        let accuracy = (samples > 0).then(|| 1.0 - mistakes as f64 / samples as f64);
        StreamReport {
            regimen,
            per_day,
            totals: Totals {
                samples,
                mistakes,
                accuracy,
            },
            skipped_days,
            single_class_days,
            degenerate_samples,
        }
    }
}

fn sorted(corpus: &Corpus) -> std::borrow::Cow<'_, Corpus> {
    if corpus.is_sorted_by_day() {
        std::borrow::Cow::Borrowed(corpus)
    } else {
        std::borrow::Cow::Owned(corpus.sort_by_day())
    }
}

/// Runs an online learner over the stream, testing each sample before
/// training on it. `model` is normally fresh; its state carries over
/// otherwise.
pub fn run_online(
    corpus: &Corpus,
    wl: WlConfig,
    model: OnlineModel,
    regimen: &RegimenSpec,
) -> Result<StreamReport, HarnessError> {
    run_online_observed(corpus, wl, model, regimen, &mut Quiet).map(|(report, _)| report)
}

/// [`run_online`] with instrumentation; also returns the final model.
pub fn run_online_observed(
    corpus: &Corpus,
    wl: WlConfig,
    mut model: OnlineModel,
    regimen: &RegimenSpec,
    observer: &mut dyn StreamObserver,
) -> Result<(StreamReport, OnlineModel), HarnessError> {
    if !regimen.kind.is_online() {
        return Err(HarnessError::NotOnline(regimen.kind));
    }
    regimen.validate()?;
    if corpus.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    let corpus = sorted(corpus);
    let graphs = corpus.graphs();
    let features: Vec<Vec<String>> = graphs.iter().map(|g| relabel(g, wl)).collect();
    let variable = regimen.kind == RegimenKind::OnlineVariable;

    let mut vocab = Vocabulary::new();
    if !variable {
        for (g, f) in graphs.iter().zip(&features) {
            if g.day() <= regimen.fixed_vocab_day {
                vocab.extend(f);
            }
        }
        model.grow(vocab.len().max(model.dimension()))?;
    }

    let mut tally = Tally::new(corpus.day_count());
    let mut degenerate = 0;
    for (g, f) in graphs.iter().zip(&features) {
        if variable {
            vocab.extend(f);
            model.grow(vocab.len().max(model.dimension()))?;
        }
        let x = vocab.count_features(f);
        let prediction = model.predict(&x);
        observer.on_event(StreamEvent::Predicted {
            graph: g.id(),
            day: g.day(),
            model: 0,
            predicted: prediction.label,
        });
        observer.on_event(StreamEvent::LabelRead {
            graph: g.id(),
            usage: LabelUse::Score,
        });
        let truth = g.label();
        tally.record(g.day(), prediction.label == truth);

        observer.on_event(StreamEvent::LabelRead {
            graph: g.id(),
            usage: LabelUse::Train { model: 0 },
        });
        match model.update(&x, truth) {
            Ok(_) => {}
            Err(LearnError::DegenerateSample) => degenerate += 1,
            Err(e) => return Err(e.into()),
        }
        tally.set_vocab(g.day(), vocab.len());
    }
    // Days without samples keep the previous day's feature-space size.
    let mut last = if variable { 0 } else { vocab.len() };
    for entry in &mut tally.days {
        if entry.0 == 0 {
            entry.2 = last;
        }
        last = entry.2;
    }

    let name = format!("{}-{}", regimen.kind.tag(), model.algorithm().tag());
    Ok((
        tally.finish(name, Vec::new(), Vec::new(), degenerate),
        model,
    ))
}

/// Runs one of the batch retraining baselines. Each model builds and freezes
/// its own vocabulary from its training window and only scores days after
/// that window.
pub fn run_batch_regimen(
    corpus: &Corpus,
    wl: WlConfig,
    regimen: &RegimenSpec,
    config: &TrainConfig,
) -> Result<StreamReport, HarnessError> {
    run_batch_regimen_observed(corpus, wl, regimen, config, &mut Quiet)
}

pub fn run_batch_regimen_observed(
    corpus: &Corpus,
    wl: WlConfig,
    regimen: &RegimenSpec,
    config: &TrainConfig,
    observer: &mut dyn StreamObserver,
) -> Result<StreamReport, HarnessError> {
    if regimen.kind.is_online() {
        return Err(HarnessError::NotBatch(regimen.kind));
    }
    regimen.validate()?;
    if corpus.is_empty() {
        return Err(HarnessError::EmptyCorpus);
    }
    let corpus = sorted(corpus);
    let graphs = corpus.graphs();
    let features: Vec<Vec<String>> = graphs.iter().map(|g| relabel(g, wl)).collect();
    let mut by_day: Vec<Vec<usize>> = vec![Vec::new(); corpus.day_count() as usize];
    for (i, g) in graphs.iter().enumerate() {
        by_day[g.day() as usize].push(i);
    }

    struct Active {
        window: RangeInclusive<u32>,
        trained: Option<(BatchModel, Vocabulary, u32)>,
    }

    let mut tally = Tally::new(corpus.day_count());
    let mut skipped = Vec::new();
    let mut single_class = Vec::new();
    let mut next_model = 0u32;
    let mut active: Option<Active> = None;

    for day in 0..corpus.day_count() {
        let Some(window) = regimen.training_window(day) else {
            continue;
        };
        if active.as_ref().map(|a| &a.window) != Some(&window) {
            let members: Vec<usize> = window
                .clone()
                .flat_map(|d| by_day[d as usize].iter().copied())
                .collect();
            let trained = if members.is_empty() {
                None
            } else {
                let model_id = next_model;
                next_model += 1;
                let mut vocab = Vocabulary::new();
                for &i in &members {
                    vocab.extend(&features[i]);
                }
                let samples: Vec<_> = members
                    .iter()
                    .map(|&i| {
                        observer.on_event(StreamEvent::LabelRead {
                            graph: graphs[i].id(),
                            usage: LabelUse::Train { model: model_id },
                        });
                        (vocab.count_features(&features[i]), graphs[i].label())
                    })
                    .collect();
                let model = train_batch(&samples, vocab.len(), config)?;
                Some((model, vocab, model_id))
            };
            active = Some(Active { window, trained });
        }

        let Some((model, vocab, model_id)) = active.as_ref().and_then(|a| a.trained.as_ref())
        else {
            skipped.push(day);
            continue;
        };
        if model.single_class() {
            single_class.push(day);
        }
        for &i in &by_day[day as usize] {
            let g = &graphs[i];
            let prediction = model.predict(&vocab.count_features(&features[i]));
            observer.on_event(StreamEvent::Predicted {
                graph: g.id(),
                day,
                model: *model_id,
                predicted: prediction.label,
            });
            observer.on_event(StreamEvent::LabelRead {
                graph: g.id(),
                usage: LabelUse::Score,
            });
            tally.record(day, prediction.label == g.label());
        }
        tally.set_vocab(day, vocab.len());
    }

    Ok(tally.finish(regimen.kind.tag().to_string(), skipped, single_class, 0))
}

/// Aligned cumulative-error columns for several reports over the same days.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    /// `(day, cumulative error per report)`.
    pub rows: Vec<(u32, Vec<Option<f64>>)>,
    /// `(name, final accuracy)`, best first; ties and undefined accuracies
    /// are ordered by name.
    pub ranking: Vec<(String, Option<f64>)>,
}

impl Comparison {
    /// Long-format CSV `day,regimen,cumulative_error_rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("day,regimen,cumulative_error_rate\n");
        for (day, rates) in &self.rows {
            for (name, rate) in self.names.iter().zip(rates) {
                out.push_str(&format!("{day},{name},{}\n", fmt_rate(*rate)));
            }
        }
        out
    }
}

pub fn compare(reports: &[(String, StreamReport)]) -> Result<Comparison, HarnessError> {
    let (first_name, first) = reports.first().ok_or(HarnessError::NoReports)?;
    let days = first.days();
    for (name, report) in &reports[1..] {
        if report.days() != days {
            return Err(HarnessError::DayRangeMismatch {
                first: first_name.clone(),
                other: name.clone(),
            });
        }
    }
    let rows = days
        .iter()
        .enumerate()
        .map(|(k, &day)| {
            let rates = reports
                .iter()
                .map(|(_, r)| r.per_day[k].cumulative_error_rate)
                .collect();
            (day, rates)
        })
        .collect();
    let mut ranking: Vec<(String, Option<f64>)> = reports
        .iter()
        .map(|(name, r)| (name.clone(), r.totals.accuracy))
        .collect();
    ranking.sort_by(|(na, a), (nb, b)| match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(x).then_with(|| na.cmp(nb)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => na.cmp(nb),
    });
    Ok(Comparison {
        names: reports.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        ranking,
    })
}
