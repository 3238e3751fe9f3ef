//! Trial ingest: JSON (array, single object or one object per line) and CSV
//! row groups.
//!
//! CSV files carry one RR interval per row; consecutive rows sharing
//! `subject_id` and `trial_id` form one trial. Ratings are read from the
//! first row of each group. Respiration and EEG are only accepted via JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_intervals, RespSignal, RrSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub subject_id: String,
    pub trial_id: String,
    pub rr_ms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resp: Option<RespSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valence: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arousal: Option<u8>,
    /// Optional EEG band powers, passed through to the EEG step untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eeg: Option<BTreeMap<String, f64>>,
}

impl Trial {
    pub fn key(&self) -> String {
        format!("{}_{}", self.subject_id, self.trial_id)
    }

    pub fn rr_series(&self) -> RrSeries {
        RrSeries {
            subject_id: self.subject_id.clone(),
            trial_id: self.trial_id.clone(),
            intervals_ms: self.rr_ms.clone(),
            t0: None,
        }
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let fail = |message: String| Error::Parse {
            path: origin.to_string(),
            message: format!("trial {}: {}", self.key(), message),
        };
        validate_intervals(&self.rr_ms).map_err(|e| fail(e.to_string()))?;
        for (name, v) in [("valence", self.valence), ("arousal", self.arousal)] {
            if let Some(v) = v {
                if !(1..=5).contains(&v) {
                    return Err(fail(format!("{name} rating {v} outside 1..=5")));
                }
            }
        }
        Ok(())
    }
}

/// Loads trials from a `.json`, `.jsonl` or `.csv` file.
pub fn load_trials(path: &Path) -> Result<Vec<Trial>> {
    let text = std::fs::read_to_string(path)?;
    let origin = path.display().to_string();
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_trials_csv(&text, &origin)
    } else {
        parse_trials_json(&text, &origin)
    }
}

pub fn parse_trials_json(text: &str, origin: &str) -> Result<Vec<Trial>> {
    let trimmed = text.trim_start();
    let trials: Vec<Trial> = if trimmed.starts_with('[') {
        serde_json::from_str(text).map_err(|e| parse_err(origin, e))?
    } else if trimmed.starts_with('{') && serde_json::from_str::<Trial>(text).is_ok() {
        vec![serde_json::from_str(text).map_err(|e| parse_err(origin, e))?]
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse {
                    path: origin.to_string(),
                    message: format!("line {}: {e}", i + 1),
                })
            })
            .collect::<Result<_>>()?
    };
    for t in &trials {
        t.validate(origin)?;
    }
    Ok(trials)
}

fn parse_err(origin: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    }
}

#[derive(Deserialize)]
struct CsvRow {
    subject_id: String,
    trial_id: String,
    rr_ms: String,
    #[serde(default)]
    valence: Option<u8>,
    #[serde(default)]
    arousal: Option<u8>,
}

pub fn parse_trials_csv(text: &str, origin: &str) -> Result<Vec<Trial>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut trials: Vec<Trial> = Vec::new();
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| parse_err(origin, e))?;
        let rr: f64 = row.rr_ms.parse().map_err(|_| Error::Parse {
            path: origin.to_string(),
            message: format!("row {}: rr_ms {:?} is not a number", i + 2, row.rr_ms),
        })?;
        match trials.last_mut() {
            Some(t) if t.subject_id == row.subject_id && t.trial_id == row.trial_id => t.rr_ms.push(rr),
            _ => trials.push(Trial {
                subject_id: row.subject_id,
                trial_id: row.trial_id,
                rr_ms: vec![rr],
                resp: None,
                valence: row.valence,
                arousal: row.arousal,
                eeg: None,
            }),
        }
    }
    for t in &trials {
        t.validate(origin)?;
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_array_and_lines() {
        let arr = r#"[{"subject_id":"S1","trial_id":"T1","rr_ms":[800,810],"valence":4,"arousal":2}]"#;
        let t = parse_trials_json(arr, "x").unwrap();
        assert_eq!(t[0].valence, Some(4));
        let lines = "{\"subject_id\":\"S1\",\"trial_id\":\"T1\",\"rr_ms\":[800,810]}\n\n{\"subject_id\":\"S1\",\"trial_id\":\"T2\",\"rr_ms\":[700,710]}\n";
        assert_eq!(parse_trials_json(lines, "x").unwrap().len(), 2);
        let single = r#"{"subject_id":"S1","trial_id":"T1","rr_ms":[800,810]}"#;
        assert_eq!(parse_trials_json(single, "x").unwrap().len(), 1);
    }

    #[test]
    fn csv_row_groups() {
        let csv = "subject_id,trial_id,rr_ms,valence,arousal\nS1,T1,800,4,2\nS1,T1,810,,\nS1,T2,700,1,5\nS1,T2,705,,\n";
        let t = parse_trials_csv(csv, "x").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].rr_ms, vec![800.0, 810.0]);
        assert_eq!(t[1].arousal, Some(5));
    }

    #[test]
    fn rejects_nan_negative_and_bad_ratings() {
        let csv = "subject_id,trial_id,rr_ms\nS1,T1,800\nS1,T1,NaN\n";
        assert!(parse_trials_csv(csv, "x").is_err());
        let neg = r#"[{"subject_id":"S1","trial_id":"T1","rr_ms":[800,-5]}]"#;
        assert!(parse_trials_json(neg, "x").is_err());
        let rating = r#"[{"subject_id":"S1","trial_id":"T1","rr_ms":[800,810],"valence":7}]"#;
        assert!(parse_trials_json(rating, "x").is_err());
    }
}
