//! Familial variant delays and their empirical distributions.
//!
//! For a malware sample `m` in family `f`, the variant delays are the
//! smallest and largest absolute day gaps between `m` and any other malware
//! sample of `f`. A sample with no other family member gets `(0, D)`, where
//! `D` is the gap between `m` and the latest sample of the corpus.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Corpus, Label};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDelay {
    pub id: String,
    pub family: String,
    pub delta_min: u32,
    pub delta_max: u32,
    pub has_variants: bool,
}

/// Which samples define "the latest day" for the no-variant default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Horizon {
    /// Latest graph of either class.
    #[default]
    AnyClass,
    /// Latest malware graph.
    MalwareOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelayError {
    #[error("malware samples without a family tag: {}", .0.join(", "))]
    MissingFamily(Vec<String>),
    #[error("distribution of an empty sample")]
    EmptyInput,
}

/// Delays for every malware sample in corpus order; benign samples are
/// skipped.
pub fn compute_delays(corpus: &Corpus, horizon: Horizon) -> Result<Vec<VariantDelay>, DelayError> {
    let malware: Vec<_> = corpus
        .graphs()
        .iter()
        .filter(|g| g.label() == Label::Malicious)
        .collect();
    let missing: Vec<String> = malware
        .iter()
        .filter(|g| g.family().is_none())
        .map(|g| g.id().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(DelayError::MissingFamily(missing));
    }

    let latest = match horizon {
        Horizon::AnyClass => corpus.latest_day(),
        Horizon::MalwareOnly => malware.iter().map(|g| g.day()).max(),
    }
    .unwrap_or(0);

    // Sorted member days per family.
    let mut families: HashMap<&str, Vec<u32>> = HashMap::new();
    for g in &malware {
        families
            .entry(g.family().unwrap())
            .or_default()
            .push(g.day());
    }
    for days in families.values_mut() {
        days.sort_unstable();
    }

    Ok(malware
        .iter()
        .map(|g| {
            let family = g.family().unwrap();
            let days = &families[family];
            let day = g.day();
            let (delta_min, delta_max, has_variants) = if days.len() < 2 {
                (0, latest.saturating_sub(day), false)
            } else {
                (
                    nearest_other(days, day),
                    (day - days[0]).max(days[days.len() - 1] - day),
                    true,
                )
            };
            VariantDelay {
                id: g.id().to_string(),
                family: family.to_string(),
                delta_min,
                delta_max,
                has_variants,
            }
        })
        .collect())
}

/// Smallest gap between `day` and another entry of the sorted `days`, which
/// contains `day` at least once and has length at least 2.
fn nearest_other(days: &[u32], day: u32) -> u32 {
    let first = days.partition_point(|&d| d < day);
    let last = days.partition_point(|&d| d <= day);
    if last - first >= 2 {
        return 0;
    }
    let below = first.checked_sub(1).map(|i| day - days[i]);
    let above = days.get(last).map(|&d| d - day);
    below
        .into_iter()
        .chain(above)
        .min()
        .expect("another member exists")
}

/// Empirical CDF: `(value, fraction of values <= value)` at each distinct
/// value, ascending.
pub fn cdf(values: &[u32]) -> Result<Vec<(u32, f64)>, DelayError> {
    if values.is_empty() {
        return Err(DelayError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut out: Vec<(u32, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = fraction,
            _ => out.push((v, fraction)),
        }
    }
    Ok(out)
}

/// Complementary CDF: `(value, fraction of values > value)`.
pub fn ccdf(values: &[u32]) -> Result<Vec<(u32, f64)>, DelayError> {
    Ok(cdf(values)?
        .into_iter()
        .map(|(v, f)| (v, 1.0 - f))
        .collect())
}

/// Evaluates a step function from [`cdf`] or [`ccdf`] at an arbitrary
/// point, given the value it takes below the first step.
pub fn step_at(steps: &[(u32, f64)], at: u32, below_first: f64) -> f64 {
    steps
        .iter()
        .take_while(|(v, _)| *v <= at)
        .last()
        .map_or(below_first, |&(_, f)| f)
}

pub fn delays_to_csv(delays: &[VariantDelay]) -> String {
    let mut out = String::from("id,family,delta_min,delta_max,has_variants\n");
    for d in delays {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&d.id),
            csv_field(&d.family),
            d.delta_min,
            d.delta_max,
            d.has_variants
        ));
    }
    out
}

pub fn distribution_to_csv(steps: &[(u32, f64)]) -> String {
    let mut out = String::from("value,fraction\n");
    for (v, f) in steps {
        out.push_str(&format!("{v},{f}\n"));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
