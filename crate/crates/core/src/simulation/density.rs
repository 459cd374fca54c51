//! Histogram and kernel-density summaries of break estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityExport {
    pub n: usize,
    pub bin_width: f64,
    pub histogram: Vec<HistogramBin>,
    /// Gaussian kernel bandwidth; 0 for a degenerate sample.
    pub bandwidth: f64,
    /// `(x, density)` on a regular grid; a single unit-mass point when all
    /// estimates coincide.
    pub kde: Vec<(f64, f64)>,
}

impl DensityExport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["layer", "x", "count", "density"])?;
        for b in &self.histogram {
            w.write_record(["histogram", &b.left.to_string(), &b.count.to_string(), &b.density.to_string()])?;
        }
        for (x, d) in &self.kde {
            w.write_record(["kde", &x.to_string(), "", &d.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<density>", e))?;
        Ok(())
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Histogram with `bin_width`-wide bins anchored at integer multiples of the
/// width, and a Gaussian KDE with Silverman's bandwidth on `grid` points.
pub fn density_export(estimates: &[f64], bin_width: f64, grid: usize) -> Result<DensityExport> {
    if estimates.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "density needs at least 2 estimates, got {}",
            estimates.len()
        )));
    }
    if !(bin_width > 0.0) || estimates.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("bin width must be positive and estimates finite".into()));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let nf = n as f64;

    let first = (sorted[0] / bin_width).floor() as i64;
    let last = (sorted[n - 1] / bin_width).floor() as i64;
    let mut counts = vec![0usize; (last - first + 1) as usize];
    for v in &sorted {
        counts[((v / bin_width).floor() as i64 - first) as usize] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            left: (first + i as i64) as f64 * bin_width,
            count,
            density: count as f64 / (nf * bin_width),
        })
        .collect();

    let mean = sorted.iter().sum::<f64>() / nf;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = 0.9 * spread * nf.powf(-0.2);
    let kde = if bandwidth > 0.0 {
        let lo = sorted[0] - 3.0 * bandwidth;
        let hi = sorted[n - 1] + 3.0 * bandwidth;
        let g = grid.max(2);
        let norm = 1.0 / (nf * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        (0..g)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (g - 1) as f64;
                let d: f64 = sorted
                    .iter()
                    .map(|v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp())
                    .sum();
                (x, d * norm)
            })
            .collect()
    } else {
        vec![(sorted[0], 1.0)]
    };
    Ok(DensityExport {
        n,
        bin_width,
        histogram,
        bandwidth,
        kde,
    })
}
