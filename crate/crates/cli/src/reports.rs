//! Reading stream report CSVs back for `compare`.

use std::path::Path;

use serde::Deserialize;
use wlstream::harness::{DayRecord, StreamReport, Totals};

#[derive(Debug, Deserialize)]
struct Row {
    day: u32,
    regimen: String,
    samples: u64,
    mistakes: u64,
    cumulative_error_rate: Option<f64>,
    vocab_size: usize,
}

pub fn read_report(path: &Path) -> Result<StreamReport, String> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut regimen: Option<String> = None;
    let mut per_day = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        match &regimen {
            None => regimen = Some(row.regimen.clone()),
            Some(r) if *r != row.regimen => {
                return Err(format!(
                    "{}: mixes regimens {r:?} and {:?}",
                    path.display(),
                    row.regimen
                ))
            }
            Some(_) => {}
        }
        per_day.push(DayRecord {
            day: row.day,
            samples: row.samples,
            mistakes: row.mistakes,
            cumulative_error_rate: row.cumulative_error_rate,
            vocab_size: row.vocab_size,
        });
    }
    let regimen = regimen.ok_or_else(|| format!("{}: report has no rows", path.display()))?;
    let samples = per_day.iter().map(|d| d.samples).sum();
    let mistakes = per_day.iter().map(|d| d.mistakes).sum();
    let accuracy = per_day
        .iter()
        .rev()
        .find_map(|d| d.cumulative_error_rate)
        .map(|e| 1.0 - e);
    Ok(StreamReport {
        regimen,
        per_day,
        totals: Totals {
            samples,
            mistakes,
            accuracy,
        },
        skipped_days: Vec::new(),
        single_class_days: Vec::new(),
        degenerate_samples: 0,
    })
}
