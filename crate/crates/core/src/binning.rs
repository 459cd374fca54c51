//! Mean binning of an irregular record onto an equidistant age grid.
//!
//! Bins are anchored at the present: bin `k` covers ages
//! `(k·Δ, (k+1)·Δ]` kyr, so an observation lying exactly on an edge joins the
//! younger bin. Each bin is labelled by its centre age. Interior empty bins
//! are filled by straight-line interpolation between the nearest filled
//! neighbours; empty bins beyond the oldest or youngest observation never
//! arise because the grid is clipped to the data.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RawSeries, Reverse};

/// Relative slack used to decide that an age sits exactly on a bin edge.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub bin_kyr: f64,
    /// Centre age (Ma) of the oldest bin.
    pub start_age: f64,
    /// `false`: index runs oldest to youngest. `true`: youngest to oldest.
    pub reversed: bool,
    pub values: Vec<f64>,
    pub interpolated: Vec<bool>,
    pub n_source_obs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateStats {
    pub state: usize,
    /// Older and younger limits of the state in Ma (`None` for the open ends).
    pub older_limit: Option<f64>,
    pub younger_limit: Option<f64>,
    pub mean: f64,
    /// Sample standard deviation (n-1 divisor); 0 for a single bin.
    pub sd: f64,
    pub max: f64,
    pub min: f64,
    pub n: usize,
}

impl BinnedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step_ma(&self) -> f64 {
        self.bin_kyr / 1000.0
    }

    /// Age in Ma of the bin at `index`. Accepts fractional and out-of-range
    /// indices so that confidence bounds beyond the sample map affinely.
    /// Rounded to 1e-9 Ma to drop representation noise.
    pub fn age_at(&self, index: f64) -> f64 {
        let age = if self.reversed {
            let last = self.len().saturating_sub(1) as f64;
            self.start_age - (last - index) * self.step_ma()
        } else {
            self.start_age - index * self.step_ma()
        };
        (age * 1e9).round() / 1e9
    }

    pub fn ages(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.age_at(i as f64)).collect()
    }

    /// Summary over all bins.
    pub fn summary(&self) -> StateStats {
        stats(0, None, None, &self.values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_index", "age_Ma", "value", "interpolated", "n_source_obs"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                self.age_at(i as f64).to_string(),
                self.values[i].to_string(),
                self.interpolated[i].to_string(),
                self.n_source_obs[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// Reads the format written by [`BinnedSeries::write_csv`]. The bin size
    /// is recovered from the age spacing unless given.
    pub fn read_csv(text: &str, bin_kyr: Option<f64>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut ages = Vec::new();
        let mut out = BinnedSeries {
            bin_kyr: 0.0,
            start_age: 0.0,
            reversed: false,
            values: Vec::new(),
            interpolated: Vec::new(),
            n_source_obs: Vec::new(),
        };
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize, name: &str| -> Result<f64> {
                let raw = rec.get(i).unwrap_or("");
                raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: line,
                    column: name.to_string(),
                    value: raw.to_string(),
                })
            };
            ages.push(num(1, "age_Ma")?);
            out.values.push(num(2, "value")?);
            out.interpolated
                .push(rec.get(3).map(|s| s == "true").unwrap_or(false));
            out.n_source_obs.push(num(4, "n_source_obs")? as usize);
        }
        if ages.is_empty() {
            return Err(Error::TooShort { needed: 1, have: 0 });
        }
        let spacing = if ages.len() >= 2 {
            Some(ages[1] - ages[0])
        } else {
            None
        };
        out.bin_kyr = match (bin_kyr, spacing) {
            (Some(b), _) => b,
            (None, Some(d)) => (d.abs() * 1000.0 * 1e6).round() / 1e6,
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "bin size required for a single-bin file".into(),
                ))
            }
        };
        out.reversed = spacing.map(|d| d > 0.0).unwrap_or(false);
        out.start_age = if out.reversed { ages[ages.len() - 1] } else { ages[0] };
        Ok(out)
    }
}

impl Reverse for BinnedSeries {
    fn reverse_time(&self) -> Self {
        BinnedSeries {
            bin_kyr: self.bin_kyr,
            start_age: self.start_age,
            reversed: !self.reversed,
            values: self.values.reverse_time(),
            interpolated: self.interpolated.reverse_time(),
            n_source_obs: self.n_source_obs.reverse_time(),
        }
    }
}

/// Index of the bin `(kΔ, (k+1)Δ]` containing `age_ma`.
fn bin_index(age_ma: f64, bin_kyr: f64) -> usize {
    let q = age_ma * 1000.0 / bin_kyr;
    let r = q.round();
    let k = if (q - r).abs() <= EDGE_EPS * r.max(1.0) {
        r - 1.0
    } else {
        q.floor()
    };
    k.max(0.0) as usize
}

/// Mean-bins `series` at `bin_kyr` resolution, oldest bin first.
pub fn bin_mean(series: &RawSeries, bin_kyr: f64) -> Result<BinnedSeries> {
    if !(bin_kyr > 0.0) || !bin_kyr.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bin size must be positive, got {bin_kyr}"
        )));
    }
    if series.is_empty() {
        return Err(Error::TooShort { needed: 1, have: 0 });
    }
    let ks: Vec<usize> = series.ages().map(|a| bin_index(a, bin_kyr)).collect();
    let k_max = *ks.iter().max().expect("non-empty");
    let k_min = *ks.iter().min().expect("non-empty");
    let n_bins = k_max - k_min + 1;

    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (k, v) in ks.iter().zip(series.values()) {
        let i = k_max - k;
        sums[i] += v;
        counts[i] += 1;
    }
    let holes: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    let values = interpolate_gaps(&holes)?;

    Ok(BinnedSeries {
        bin_kyr,
        start_age: (k_max as f64 + 0.5) * bin_kyr / 1000.0,
        reversed: false,
        values,
        interpolated: counts.iter().map(|&c| c == 0).collect(),
        n_source_obs: counts,
    })
}

/// Fills each interior run of `None` linearly between its filled neighbours.
pub fn interpolate_gaps(values: &[Option<f64>]) -> Result<Vec<f64>> {
    let filled: Vec<usize> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    if filled.is_empty() {
        return Err(Error::AllEmpty);
    }
    if values[0].is_none() || values[values.len() - 1].is_none() {
        return Err(Error::InvalidArgument(
            "first and last bins must be filled".into(),
        ));
    }
    let mut out: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    for w in filled.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gap = b - a;
        if gap < 2 {
            continue;
        }
        let (va, vb) = (out[a], out[b]);
        for j in 1..gap {
            out[a + j] = va + j as f64 * (vb - va) / gap as f64;
        }
    }
    Ok(out)
}

fn stats(state: usize, older: Option<f64>, younger: Option<f64>, xs: &[f64]) -> StateStats {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    StateStats {
        state,
        older_limit: older,
        younger_limit: younger,
        mean,
        sd,
        max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
        n,
    }
}

/// Per-state statistics for the states delimited by `boundaries` (Ma,
/// strictly decreasing). A bin belongs to the state whose age interval
/// `(younger, older]` contains its centre.
pub fn state_summary(binned: &BinnedSeries, boundaries: &[f64]) -> Result<Vec<StateStats>> {
    split_states(binned, boundaries)?
        .iter()
        .enumerate()
        .map(|(j, xs)| {
            if xs.is_empty() {
                return Err(Error::InsufficientData(format!("state {j} contains no bins")));
            }
            let older = (j > 0).then(|| boundaries[j - 1]);
            let younger = boundaries.get(j).copied();
            Ok(stats(j, older, younger, xs))
        })
        .collect()
}

/// Values of each state, oldest state first, in series order.
pub fn split_states(binned: &BinnedSeries, boundaries: &[f64]) -> Result<Vec<Vec<f64>>> {
    if binned.is_empty() {
        return Err(Error::TooShort { needed: 1, have: 0 });
    }
    if boundaries.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::NonMonotoneBoundaries);
    }
    let ages = binned.ages();
    let oldest = ages.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let youngest = ages.iter().cloned().fold(f64::INFINITY, f64::min);
    if let Some(&b) = boundaries.iter().find(|&&b| !(b < oldest && b > youngest)) {
        return Err(Error::BoundaryOutsideSpan(b));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); boundaries.len() + 1];
    for (age, &v) in ages.iter().zip(&binned.values) {
        let state = boundaries.iter().filter(|&&b| *age <= b).count();
        groups[state].push(v);
    }
    Ok(groups)
}
