//! Figure data: series, break markers, CI rectangles and reference dates,
//! as CSV layers and an optional static SVG.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use statebreak::{BinnedSeries, BreakCI, BreakFit, REFERENCE_BOUNDARIES_MA};

use crate::output::{write_atomic, Metadata};

pub struct PlotFit<'a> {
    pub fit: &'a BreakFit,
    pub cis: &'a [BreakCI],
}

fn header(meta: &Metadata, columns: &str) -> Result<String> {
    Ok(format!("{}{columns}\n", meta.csv_header()?))
}

pub fn series_layer(meta: &Metadata, series: &BinnedSeries) -> Result<String> {
    let mut s = header(meta, "age_Ma,value,interpolated")?;
    for (i, v) in series.values.iter().enumerate() {
        writeln!(s, "{},{},{}", series.age_at(i as f64), v, series.interpolated[i])?;
    }
    Ok(s)
}

pub fn break_layer(meta: &Metadata, fits: &[PlotFit]) -> Result<String> {
    let mut s = header(meta, "m,break,index,age_Ma")?;
    for f in fits {
        for (k, (idx, age)) in f.fit.break_indices.iter().zip(&f.fit.break_ages).enumerate() {
            writeln!(s, "{},{},{},{}", f.fit.m, k + 1, idx, age)?;
        }
    }
    Ok(s)
}

pub fn ci_layer(meta: &Metadata, fits: &[PlotFit]) -> Result<String> {
    let mut s = header(meta, "m,break,level,older_Ma,younger_Ma")?;
    for f in fits {
        for (k, ci) in f.cis.iter().enumerate() {
            let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| v.to_string());
            writeln!(s, "{},{},{},{},{}", f.fit.m, k + 1, ci.level, fmt(ci.lower), fmt(ci.upper))?;
        }
    }
    Ok(s)
}

pub fn reference_layer(meta: &Metadata) -> Result<String> {
    let mut s = header(meta, "age_Ma")?;
    for a in REFERENCE_BOUNDARIES_MA {
        writeln!(s, "{a}")?;
    }
    Ok(s)
}

/// Series panel on top, one row of break markers and CI rectangles per fit
/// below, reference dates as dashed verticals.
pub fn render_svg(series: &BinnedSeries, fits: &[PlotFit]) -> String {
    let (w, top, row_h, margin) = (960.0, 320.0, 16.0, 40.0);
    let h = top + row_h * fits.len() as f64 + margin;
    let ages = series.ages();
    let (old, young) = ages
        .iter()
        .fold((f64::MIN, f64::MAX), |(a, b), &x| (a.max(x), b.min(x)));
    let (vmax, vmin) = series
        .values
        .iter()
        .fold((f64::MIN, f64::MAX), |(a, b), &x| (a.max(x), b.min(x)));
    let span = (old - young).max(f64::EPSILON);
    let x = |age: f64| margin + (old - age) / span * (w - 2.0 * margin);
    // δ18O axis points down: warmer up
    let y = |v: f64| margin + (v - vmin) / (vmax - vmin).max(f64::EPSILON) * (top - 2.0 * margin);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for a in REFERENCE_BOUNDARIES_MA {
        if a <= old && a >= young {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="grey" stroke-dasharray="4 3"/>"#,
                x(a),
                margin,
                h - margin / 2.0
            );
        }
    }
    let pts: Vec<String> = ages
        .iter()
        .zip(&series.values)
        .map(|(a, v)| format!("{:.2},{:.2}", x(*a), y(*v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="black" stroke-width="0.6" points="{}"/>"#,
        pts.join(" ")
    );
    for (r, f) in fits.iter().enumerate() {
        let yc = top + row_h * (r as f64 + 0.5);
        for ci in f.cis {
            if let (Some(o), Some(yg)) = (ci.lower, ci.upper) {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue" fill-opacity="0.35"/>"#,
                    x(o),
                    yc - row_h * 0.4,
                    (x(yg) - x(o)).max(1.0),
                    row_h * 0.8
                );
            }
        }
        for a in &f.fit.break_ages {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{yc:.2}" r="2.5" fill="firebrick"/>"#, x(*a));
        }
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.2}" font-size="10" font-family="sans-serif">m={}</text>"#,
            yc + 3.0,
            f.fit.m
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_all(
    dir: &Path,
    meta: &Metadata,
    series: &BinnedSeries,
    fits: &[PlotFit],
    svg: bool,
) -> Result<()> {
    write_atomic(&dir.join("series.csv"), series_layer(meta, series)?.as_bytes())?;
    write_atomic(&dir.join("reference.csv"), reference_layer(meta)?.as_bytes())?;
    if fits.iter().any(|f| f.fit.m > 0) {
        write_atomic(&dir.join("breaks.csv"), break_layer(meta, fits)?.as_bytes())?;
        write_atomic(&dir.join("ci_rectangles.csv"), ci_layer(meta, fits)?.as_bytes())?;
    }
    if svg {
        write_atomic(&dir.join("plot.svg"), render_svg(series, fits).as_bytes())?;
    }
    Ok(())
}
