use proptest::prelude::*;
use wlstream::delays::{ccdf, cdf, compute_delays, step_at, Horizon};
use wlstream::{Corpus, Label, LabeledGraph};

#[derive(Debug, Clone)]
struct Sample {
    day: u32,
    family: Option<u8>,
}

fn corpus_of(samples: &[Sample]) -> Corpus {
    let graphs = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (label, family) = match s.family {
                Some(f) => (Label::Malicious, Some(format!("f{f}"))),
                None => (Label::Benign, None),
            };
            LabeledGraph::new(format!("s{i}"), s.day, label, family, vec![], vec![]).unwrap()
        })
        .collect();
    Corpus::from_graphs("random", graphs).unwrap()
}

/// Pairwise scan over all samples for each malware sample.
fn oracle(samples: &[Sample], horizon: Horizon) -> Vec<(String, u32, u32)> {
    let latest = samples
        .iter()
        .filter(|s| horizon == Horizon::AnyClass || s.family.is_some())
        .map(|s| s.day)
        .max()
        .unwrap_or(0);
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.family.is_some())
        .map(|(i, s)| {
            let gaps: Vec<u32> = samples
                .iter()
                .enumerate()
                .filter(|(j, o)| *j != i && o.family == s.family)
                .map(|(_, o)| o.day.abs_diff(s.day))
                .collect();
            let (lo, hi) = match (gaps.iter().min(), gaps.iter().max()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => (0, latest - s.day),
            };
            (format!("s{i}"), lo, hi)
        })
        .collect()
}

fn samples() -> impl Strategy<Value = Vec<Sample>> {
    prop::collection::vec(
        (0u32..800, prop::option::weighted(0.8, 0u8..12))
            .prop_map(|(day, family)| Sample { day, family }),
        1..250,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn delays_match_pairwise_oracle(s in samples(), malware_only in any::<bool>()) {
        let horizon = if malware_only { Horizon::MalwareOnly } else { Horizon::AnyClass };
        let got: Vec<_> = compute_delays(&corpus_of(&s), horizon)
            .unwrap()
            .into_iter()
            .map(|d| {
                assert!(d.delta_min <= d.delta_max);
                (d.id, d.delta_min, d.delta_max)
            })
            .collect();
        prop_assert_eq!(got, oracle(&s, horizon));
    }

    #[test]
    fn cdf_is_a_monotone_step_function(values in prop::collection::vec(0u32..50, 1..100)) {
        let steps = cdf(&values).unwrap();
        prop_assert!(steps.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(steps.last().unwrap().1, 1.0);
        for probe in 0..55 {
            let direct = values.iter().filter(|&&v| v <= probe).count() as f64 / values.len() as f64;
            prop_assert!((step_at(&steps, probe, 0.0) - direct).abs() < 1e-12);
            let tail = values.iter().filter(|&&v| v > probe).count() as f64 / values.len() as f64;
            prop_assert!((step_at(&ccdf(&values).unwrap(), probe, 1.0) - tail).abs() < 1e-12);
        }
    }
}
