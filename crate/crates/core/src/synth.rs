//! Deterministic generator of drifting, family-structured graph corpora.
//!
//! # Model
//!
//! * The label alphabet starts with `label_alphabet_base` labels and gains
//!   `new_labels_per_day` labels on every day after day 0.
//! * Graph "noise" is assembled from a pool of small out-closed fragments
//!   (chains of 2 to 4 labeled nodes). The pool starts with one fragment per
//!   [`LABELS_PER_BASE_FRAGMENT`] base labels and gains one fragment per new
//!   label, headed by that label.
//!   Noise draws prefer fragments created in the last [`RECENT_DAYS`] days
//!   with probability [`RECENT_BIAS`].
//! * A malware family owns a motif: `motif_size` labeled nodes joined by a
//!   chain plus `motif_size / 2` extra edges, with no edges leaving the motif.
//!   Its WL features therefore do not depend on the surrounding noise.
//! * `family_count` families are alive on day 0. On each later day one family
//!   is born with probability `family_birth_rate`. Lifetimes are drawn from
//!   `family_lifetime_days`. A newborn family receives the first
//!   [`BIRTH_BURST`] malware slots of its birth day.
//! * Each day has `round(samples_per_day * benign_fraction)` benign graphs
//!   (round half up) and the rest malware, in shuffled order. Malware picks an
//!   alive family with probability proportional to the family's weight. On a
//!   day with no alive family every sample is benign.
//! * Malware holds its family motif plus `noise` fragment nodes, with one
//!   edge from a noise node into the motif. Benign graphs hold
//!   `noise + motif_size` fragment nodes, so both classes have the same size
//!   distribution.
//!
//! # Randomness
//!
//! All draws come from ChaCha8 seeded with `seed` through
//! `SeedableRng::seed_from_u64`, on four streams selected with `set_stream`:
//! 0 family lifecycle, 1 family motifs, 2 fragment pool, 3 samples.
//! `unit()` is `(next_u64 >> 11) * 2^-53`; an integer below `n` is
//! `floor(unit() * n)`.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::graph::{Corpus, Label, LabeledGraph, NodeId};

/// Window, in days, within which labels and fragments count as recent.
pub const RECENT_DAYS: u32 = 7;
/// Probability that a draw prefers a recent label or fragment.
pub const RECENT_BIAS: f64 = 0.5;
/// Malware slots handed to a family on the day it is born.
pub const BIRTH_BURST: usize = 8;
/// One base fragment per this many base labels.
pub const LABELS_PER_BASE_FRAGMENT: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub days: u32,
    pub samples_per_day: u32,
    /// Families alive on day 0.
    pub family_count: u32,
    pub motif_size: u32,
    /// Inclusive range of noise nodes per graph.
    pub noise_nodes: (u32, u32),
    pub label_alphabet_base: u32,
    pub new_labels_per_day: u32,
    pub family_birth_rate: f64,
    /// Inclusive range of family lifetimes in days.
    pub family_lifetime_days: (u32, u32),
    pub benign_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            days: 60,
            samples_per_day: 50,
            family_count: 6,
            motif_size: 5,
            noise_nodes: (5, 15),
            label_alphabet_base: 40,
            new_labels_per_day: 3,
            family_birth_rate: 0.3,
            family_lifetime_days: (10, 60),
            benign_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no malware family is ever alive")]
    NoFamilies,
    #[error("{key}: {message}")]
    KeyValue { key: String, message: String },
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.days == 0 {
            return fail("days must be positive");
        }
        if self.samples_per_day == 0 {
            return fail("samples_per_day must be positive");
        }
        if self.motif_size == 0 {
            return fail("motif_size must be positive");
        }
        if self.noise_nodes.0 > self.noise_nodes.1 {
            return fail("noise_nodes range is empty");
        }
        if self.label_alphabet_base == 0 {
            return fail("label_alphabet_base must be positive");
        }
        if !(0.0..=1.0).contains(&self.family_birth_rate) {
            return fail("family_birth_rate must be in [0, 1]");
        }
        let (lo, hi) = self.family_lifetime_days;
        if lo == 0 || lo > hi {
            return fail("family_lifetime_days must be a non-empty range of positive days");
        }
        if !(self.benign_fraction > 0.0 && self.benign_fraction < 1.0) {
            return fail("benign_fraction must be in (0, 1)");
        }
        Ok(())
    }

    const KEYS: [&'static str; 13] = [
        "seed",
        "days",
        "samples_per_day",
        "family_count",
        "motif_size",
        "noise_nodes_min",
        "noise_nodes_max",
        "label_alphabet_base",
        "new_labels_per_day",
        "family_birth_rate",
        "family_lifetime_min",
        "family_lifetime_max",
        "benign_fraction",
    ];

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SynthError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SynthError> {
            value.trim().parse().map_err(|_| SynthError::KeyValue {
                key: key.to_string(),
                message: format!("cannot parse {value:?}"),
            })
        }
        match key {
            "seed" => self.seed = parse(key, value)?,
            "days" => self.days = parse(key, value)?,
            "samples_per_day" => self.samples_per_day = parse(key, value)?,
            "family_count" => self.family_count = parse(key, value)?,
            "motif_size" => self.motif_size = parse(key, value)?,
            "noise_nodes_min" => self.noise_nodes.0 = parse(key, value)?,
            "noise_nodes_max" => self.noise_nodes.1 = parse(key, value)?,
            "label_alphabet_base" => self.label_alphabet_base = parse(key, value)?,
            "new_labels_per_day" => self.new_labels_per_day = parse(key, value)?,
            "family_birth_rate" => self.family_birth_rate = parse(key, value)?,
            "family_lifetime_min" => self.family_lifetime_days.0 = parse(key, value)?,
            "family_lifetime_max" => self.family_lifetime_days.1 = parse(key, value)?,
            "benign_fraction" => self.benign_fraction = parse(key, value)?,
            other => {
                return Err(SynthError::KeyValue {
                    key: other.to_string(),
                    message: format!("unknown key (expected one of {})", Self::KEYS.join(", ")),
                })
            }
        }
        Ok(())
    }

    /// Parses a flat `key=value` file over the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_key_values(text: &str) -> Result<SynthConfig, SynthError> {
        let mut config = SynthConfig::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SynthError::KeyValue {
                key: line.to_string(),
                message: "expected key=value".into(),
            })?;
            config.set(key.trim(), value)?;
        }
        Ok(config)
    }

    pub fn to_key_values(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SynthConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "days={}", self.days)?;
        writeln!(f, "samples_per_day={}", self.samples_per_day)?;
        writeln!(f, "family_count={}", self.family_count)?;
        writeln!(f, "motif_size={}", self.motif_size)?;
        writeln!(f, "noise_nodes_min={}", self.noise_nodes.0)?;
        writeln!(f, "noise_nodes_max={}", self.noise_nodes.1)?;
        writeln!(f, "label_alphabet_base={}", self.label_alphabet_base)?;
        writeln!(f, "new_labels_per_day={}", self.new_labels_per_day)?;
        writeln!(f, "family_birth_rate={}", self.family_birth_rate)?;
        writeln!(f, "family_lifetime_min={}", self.family_lifetime_days.0)?;
        writeln!(f, "family_lifetime_max={}", self.family_lifetime_days.1)?;
        writeln!(f, "benign_fraction={}", self.benign_fraction)
    }
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream(rng)
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.unit() * n as f64) as usize
    }

    fn inclusive(&mut self, lo: u32, hi: u32) -> u32 {
        lo + self.below((hi - lo + 1) as usize) as u32
    }

    fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            items.swap(i, self.below(i + 1));
        }
    }
}

fn label_name(index: u32) -> String {
    format!("api{index:05}")
}

/// A small labeled subgraph with edges `(from, to)` between its own nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

/// A family in the generated population.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub name: String,
    pub born: u32,
    /// First day the family is no longer alive; `None` for immortal.
    pub retires: Option<u32>,
    pub weight: f64,
    pub motif: Pattern,
}

impl Family {
    pub fn alive_on(&self, day: u32) -> bool {
        self.born <= day && self.retires.is_none_or(|r| day < r)
    }
}

#[derive(Debug, Clone, Copy)]
struct Dynamics {
    births: bool,
    mortal: bool,
    new_labels_per_day: u32,
}

/// Output of the generator, with the family table for inspection.
#[derive(Debug, Clone)]
pub struct Generated {
    pub corpus: Corpus,
    pub families: Vec<Family>,
}

/// Labels available on `day`: the base alphabet plus everything introduced
/// on days `1..=day`.
fn alphabet_size(config: &SynthConfig, dynamics: Dynamics, day: u32) -> u32 {
    config.label_alphabet_base + day * dynamics.new_labels_per_day
}

fn draw_label(rng: &mut Stream, config: &SynthConfig, dynamics: Dynamics, day: u32) -> String {
    let size = alphabet_size(config, dynamics, day);
    let recent_from = alphabet_size(
        config,
        dynamics,
        day.saturating_sub(RECENT_DAYS - 1).max(1) - 1,
    );
    let pick_recent = rng.unit() < RECENT_BIAS;
    let index = if pick_recent && recent_from < size && day > 0 {
        recent_from + rng.below((size - recent_from) as usize) as u32
    } else {
        rng.below(size as usize) as u32
    };
    label_name(index)
}

fn chain(labels: Vec<String>) -> Pattern {
    let edges = (1..labels.len()).map(|i| (i - 1, i)).collect();
    Pattern { labels, edges }
}

/// Family schedule: births, retirements and motifs.
fn families(config: &SynthConfig, dynamics: Dynamics) -> Vec<Family> {
    let mut lifecycle = Stream::new(config.seed, 0);
    let mut motifs = Stream::new(config.seed, 1);
    let (lo, hi) = config.family_lifetime_days;

    let mut schedule: Vec<(u32, Option<u32>)> = Vec::new();
    for _ in 0..config.family_count {
        let lifetime = lifecycle.inclusive(lo, hi);
        schedule.push((0, dynamics.mortal.then_some(lifetime)));
    }
    for day in 1..config.days {
        let u = lifecycle.unit();
        let lifetime = lifecycle.inclusive(lo, hi);
        if dynamics.births && u < config.family_birth_rate {
            schedule.push((day, dynamics.mortal.then_some(day + lifetime)));
        }
    }

    let k = config.motif_size as usize;
    schedule
        .into_iter()
        .enumerate()
        .map(|(index, (born, retires))| {
            let weight = (2.0 * motifs.unit() - 1.0).exp();
            let labels = (0..k)
                .map(|_| draw_label(&mut motifs, config, dynamics, born))
                .collect();
            let mut motif = chain(labels);
            for _ in 0..k / 2 {
                let from = motifs.below(k);
                let to = motifs.below(k);
                motif.edges.push((from, to));
            }
            Family {
                name: format!("fam{index:03}"),
                born,
                retires,
                weight,
                motif,
            }
        })
        .collect()
}

struct FragmentPool {
    fragments: Vec<(u32, Pattern)>,
}

impl FragmentPool {
    fn build(config: &SynthConfig, dynamics: Dynamics) -> Self {
        let mut rng = Stream::new(config.seed, 2);
        let mut fragments = Vec::new();
        let make = |head: u32, day: u32, rng: &mut Stream| {
            let len = rng.inclusive(2, 4) as usize;
            let size = alphabet_size(config, dynamics, day) as usize;
            let mut labels = vec![label_name(head)];
            labels.extend((1..len).map(|_| label_name(rng.below(size) as u32)));
            let mut pattern = chain(labels);
            if len > 2 && rng.unit() < 0.5 {
                pattern.edges.push((0, len - 1));
            }
            (day, pattern)
        };
        let base_count = (config.label_alphabet_base / LABELS_PER_BASE_FRAGMENT).max(1);
        for i in 0..base_count {
            fragments.push(make(i * LABELS_PER_BASE_FRAGMENT, 0, &mut rng));
        }
        for day in 1..config.days {
            for k in 0..dynamics.new_labels_per_day {
                let head = alphabet_size(config, dynamics, day - 1) + k;
                fragments.push(make(head, day, &mut rng));
            }
        }
        FragmentPool { fragments }
    }

    /// Fragments available on `day` (they are stored in creation order).
    fn available(&self, day: u32) -> &[(u32, Pattern)] {
        let end = self.fragments.partition_point(|(d, _)| *d <= day);
        &self.fragments[..end]
    }

    fn draw(&self, rng: &mut Stream, day: u32) -> &Pattern {
        let available = self.available(day);
        let recent_start = available.partition_point(|(d, _)| *d + RECENT_DAYS <= day || *d == 0);
        let pick_recent = rng.unit() < RECENT_BIAS;
        let index = if pick_recent && recent_start < available.len() {
            recent_start + rng.below(available.len() - recent_start)
        } else {
            rng.below(available.len())
        };
        &available[index].1
    }
}

struct GraphBuilder {
    nodes: Vec<(NodeId, String)>,
    edges: Vec<(NodeId, NodeId)>,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn add(&mut self, pattern: &Pattern) -> usize {
        let base = self.nodes.len();
        for label in &pattern.labels {
            self.nodes.push((self.nodes.len() as NodeId, label.clone()));
        }
        self.edges.extend(
            pattern
                .edges
                .iter()
                .map(|&(a, b)| ((base + a) as NodeId, (base + b) as NodeId)),
        );
        base
    }

    fn add_noise(&mut self, pool: &FragmentPool, rng: &mut Stream, day: u32, target: u32) {
        let start = self.nodes.len();
        while self.nodes.len() - start < target as usize {
            self.add(pool.draw(rng, day));
        }
    }
}

fn generate_with(config: &SynthConfig, dynamics: Dynamics) -> Result<Generated, SynthError> {
    config.validate()?;
    let families = families(config, dynamics);
    if families.is_empty() {
        return Err(SynthError::NoFamilies);
    }
    let pool = FragmentPool::build(config, dynamics);
    let mut rng = Stream::new(config.seed, 3);

    let per_day = config.samples_per_day as usize;
    let benign_count = ((per_day as f64 * config.benign_fraction) + 0.5).floor() as usize;
    let (noise_lo, noise_hi) = config.noise_nodes;
    let mut graphs = Vec::with_capacity(per_day * config.days as usize);

    for day in 0..config.days {
        let alive: Vec<usize> = (0..families.len())
            .filter(|&f| families[f].alive_on(day))
            .collect();
        let newborn: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&f| day > 0 && families[f].born == day)
            .collect();
        let total_weight: f64 = alive.iter().map(|&f| families[f].weight).sum();

        let mut slots: Vec<Label> = (0..per_day)
            .map(|i| {
                if i < benign_count || alive.is_empty() {
                    Label::Benign
                } else {
                    Label::Malicious
                }
            })
            .collect();
        rng.shuffle(&mut slots);

        let mut malware_seen = 0usize;
        for (k, label) in slots.into_iter().enumerate() {
            let id = format!("d{day:04}-{k:04}");
            let noise = rng.inclusive(noise_lo, noise_hi);
            let mut builder = GraphBuilder::new();
            let family = match label {
                Label::Benign => {
                    builder.add_noise(&pool, &mut rng, day, noise + config.motif_size);
                    None
                }
                Label::Malicious => {
                    let burst_slot = malware_seen / BIRTH_BURST;
                    let f = if burst_slot < newborn.len() {
                        newborn[burst_slot]
                    } else {
                        let mut target = rng.unit() * total_weight;
                        let mut chosen = *alive.last().unwrap();
                        for &f in &alive {
                            target -= families[f].weight;
                            if target < 0.0 {
                                chosen = f;
                                break;
                            }
                        }
                        chosen
                    };
                    malware_seen += 1;
                    let entry = builder.add(&families[f].motif);
                    let noise_start = builder.nodes.len();
                    builder.add_noise(&pool, &mut rng, day, noise);
                    if builder.nodes.len() > noise_start {
                        let from = noise_start + rng.below(builder.nodes.len() - noise_start);
                        builder.edges.push((from as NodeId, entry as NodeId));
                    }
                    Some(families[f].name.clone())
                }
            };
            let graph = LabeledGraph::new(id, day, label, family, builder.nodes, builder.edges)
                .expect("generated graphs are well formed");
            graphs.push(graph);
        }
    }

    let name = format!("synthetic-seed{}", config.seed);
    let corpus = Corpus::new(name, config.days, graphs).expect("generated ids are unique");
    Ok(Generated { corpus, families })
}

/// Drifting corpus: families are born and retire, and new labels (with new
/// fragments) enter daily.
pub fn generate(config: &SynthConfig) -> Result<Corpus, SynthError> {
    generate_detailed(config).map(|g| g.corpus)
}

pub fn generate_detailed(config: &SynthConfig) -> Result<Generated, SynthError> {
    generate_with(
        config,
        Dynamics {
            births: true,
            mortal: true,
            new_labels_per_day: config.new_labels_per_day,
        },
    )
}

/// Control corpus: the day-0 families live forever, no family is born later
/// and the alphabet never grows, so every day is drawn from the same
/// distribution.
pub fn stationary_variant(config: &SynthConfig) -> Result<Corpus, SynthError> {
    stationary_detailed(config).map(|g| g.corpus)
}

pub fn stationary_detailed(config: &SynthConfig) -> Result<Generated, SynthError> {
    generate_with(
        config,
        Dynamics {
            births: false,
            mortal: false,
            new_labels_per_day: 0,
        },
    )
}
