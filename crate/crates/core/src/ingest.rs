//! Loading and cleaning of irregularly time-stamped proxy records.
//!
//! Ages are kept in Ma (millions of years before present) at full file
//! precision; conversion to kyr happens only when reporting gaps.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_AGE_COLUMN: &str = "age_Ma";
pub const DEFAULT_VALUE_COLUMN: &str = "d18O_corr";

const MISSING_TOKENS: [&str; 7] = ["", "NA", "NaN", "nan", "N/A", "NULL", "-"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Age in Ma before present.
    pub age: f64,
    pub value: f64,
}

/// An irregularly stamped record, normally ordered oldest to youngest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub observations: Vec<Observation>,
    pub source_label: String,
    /// File line numbers (header is line 1) of rows dropped for a missing value.
    #[serde(default)]
    pub dropped_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Mean spacing between consecutive distinct ages, kyr.
    pub mean_gap: f64,
    pub max_gap: f64,
    pub count_gaps_over_threshold: usize,
    pub threshold: f64,
    /// Observations sharing their time stamp with the preceding observation.
    pub duplicate_stamp_count: usize,
    /// Largest number of observations sharing one time stamp.
    pub max_simultaneous: usize,
}

impl RawSeries {
    /// Builds a series from `(age, value)` pairs, validating and sorting
    /// oldest to youngest (stable for equal ages).
    pub fn new(observations: Vec<Observation>, source_label: impl Into<String>) -> Result<Self> {
        for (i, o) in observations.iter().enumerate() {
            if !o.age.is_finite() || o.age < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "observation {i}: age {} is not a finite non-negative number",
                    o.age
                )));
            }
            if !o.value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "observation {i}: value {} is not finite",
                    o.value
                )));
            }
        }
        let mut s = RawSeries {
            observations,
            source_label: source_label.into(),
            dropped_rows: Vec::new(),
        };
        s.normalize();
        Ok(s)
    }

    fn normalize(&mut self) {
        self.observations
            .sort_by(|a, b| b.age.partial_cmp(&a.age).expect("ages are finite"));
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn ages(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.age)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.value)
    }

    /// Writes the normalized series as `age_Ma,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["age_Ma", "value"])?;
        for o in &self.observations {
            w.write_record([o.age.to_string(), o.value.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

/// Reversal of the time direction. Labels travel with their observations,
/// so ages stay in Ma before present.
pub trait Reverse {
    fn reverse_time(&self) -> Self;
}

impl Reverse for RawSeries {
    fn reverse_time(&self) -> Self {
        let mut out = self.clone();
        out.observations.reverse();
        out
    }
}

impl<T: Clone> Reverse for Vec<T> {
    fn reverse_time(&self) -> Self {
        self.iter().rev().cloned().collect()
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Loads `age_column` and `value_column` from a comma- or tab-delimited
/// file with a header row. Rows with a missing value are dropped and their
/// line numbers recorded; a missing or malformed age is an error.
pub fn load_csv(path: &Path, age_column: &str, value_column: &str) -> Result<RawSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_delimited(&text, age_column, value_column, label)
}

pub fn parse_delimited(
    text: &str,
    age_column: &str,
    value_column: &str,
    source_label: String,
) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let age_idx = find(age_column)?;
    let value_idx = find(value_column)?;

    let mut observations = Vec::new();
    let mut dropped = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw_age = record.get(age_idx).unwrap_or("");
        let raw_value = record.get(value_idx).unwrap_or("");
        let value = match parse_cell(raw_value, value_column, line)? {
            Some(v) => v,
            None => {
                dropped.push(line);
                continue;
            }
        };
        let age = parse_cell(raw_age, age_column, line)?.ok_or_else(|| Error::NonNumeric {
            row: line,
            column: age_column.to_string(),
            value: raw_age.to_string(),
        })?;
        if age < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "row {line}: negative age {age}"
            )));
        }
        observations.push(Observation { age, value });
    }
    let mut series = RawSeries::new(observations, source_label)?;
    series.dropped_rows = dropped;
    Ok(series)
}

fn parse_cell(raw: &str, column: &str, line: usize) -> Result<Option<f64>> {
    if MISSING_TOKENS.contains(&raw) {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(_) => Err(Error::NonNumeric {
            row: line,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Spacing statistics between consecutive distinct time stamps, in kyr.
pub fn gap_statistics(series: &RawSeries, threshold_kyr: f64) -> Result<GapReport> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: series.len(),
        });
    }
    let mut gaps = Vec::with_capacity(series.len());
    let mut duplicates = 0;
    let mut run = 1;
    let mut max_run = 1;
    for w in series.observations.windows(2) {
        let gap = (w[0].age - w[1].age).abs() * 1000.0;
        if w[0].age == w[1].age {
            duplicates += 1;
            run += 1;
            max_run = max_run.max(run);
        } else {
            run = 1;
            gaps.push(gap);
        }
    }
    let (mean_gap, max_gap) = if gaps.is_empty() {
        (0.0, 0.0)
    } else {
        (
            gaps.iter().sum::<f64>() / gaps.len() as f64,
            gaps.iter().cloned().fold(0.0, f64::max),
        )
    };
    Ok(GapReport {
        mean_gap,
        max_gap,
        count_gaps_over_threshold: gaps.iter().filter(|&&g| g > threshold_kyr).count(),
        threshold: threshold_kyr,
        duplicate_stamp_count: duplicates,
        max_simultaneous: max_run,
    })
}
