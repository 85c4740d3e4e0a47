//! CSV and SVG writers, and the path CSV reader.
//!
//! Every CSV has a header row, uses `.` as decimal separator and prints
//! floats with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::io::{Read, Write};

use anyhow::{bail, Context, Result};

use jumpvol_core::Path;

use crate::experiment::{CalibrationRow, ExperimentReport, FigureData};

/// Two-column `t,x` CSV of a path, one row per observation.
pub fn write_path_csv<W: Write>(path: &Path, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x"])?;
    for (k, x) in path.values.iter().enumerate() {
        let t = k as f64 * path.delta;
        w.write_record([t.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,x` CSV written by [`write_path_csv`]; the step is taken from
/// the first two time stamps and checked against the rest.
pub fn read_path_csv<R: Read>(input: R) -> Result<Path> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        bail!("path csv must have header `t,x`");
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: bad number `{}`", line + 2, &record[i]))
        };
        times.push(parse(0)?);
        values.push(parse(1)?);
    }
    if times.len() < 3 {
        bail!("path csv needs at least 3 rows");
    }
    let delta = times[1] - times[0];
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * delta;
        if delta.is_nan() || delta <= 0.0 || (t - expected).abs() > 1e-9 * expected.abs().max(delta) {
            bail!("path csv row {}: time stamps are not equally spaced", k + 2);
        }
    }
    Ok(Path::new(delta, values)?)
}

/// Curve CSV: an `x` column followed by named value columns.
pub fn write_columns_csv<W: Write>(xs: &[f64], columns: &[(String, Vec<f64>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    for (i, x) in xs.iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(columns.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_figure_csv<W: Write>(figure: &FigureData, out: W) -> Result<()> {
    let mut columns = vec![("truth".to_string(), figure.truth.clone())];
    for (i, curve) in figure.estimates.iter().enumerate() {
        columns.push((format!("estimate_{}", i + 1), curve.clone()));
    }
    write_columns_csv(&figure.xs, &columns, out)
}

pub const TABLE_HEADER: [&str; 12] = [
    "delta",
    "n",
    "risk_g",
    "oracle_g",
    "m_est_g",
    "r_est_g",
    "t_e_g",
    "risk_sigma2",
    "oracle_sigma2",
    "m_est_sigma2",
    "r_est_sigma2",
    "t_e_sigma2",
];

/// One row per `(delta, n)` cell, `g` columns then `sigma2` columns.
pub fn write_table_csv<W: Write>(rows: &[(f64, usize, [ExperimentReport; 2])], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for (delta, n, [g, s]) in rows {
        let mut row = vec![delta.to_string(), n.to_string()];
        for report in [g, s] {
            row.extend(
                [report.risk, report.oracle, report.m_est, report.r_est, report.t_e]
                    .iter()
                    .map(|v| v.to_string()),
            );
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibration_csv<W: Write>(rows: &[CalibrationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kappa", "risk_g", "mean_dim_g", "risk_sigma2", "mean_dim_sigma2"])?;
    for row in rows {
        w.write_record(
            [row.kappa, row.risk_g, row.mean_dim_g, row.risk_sigma2, row.mean_dim_sigma2]
                .iter()
                .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Minimal SVG 1.1 line chart: the first series solid, the others dashed.
pub fn svg_line_chart(title: &str, xs: &[f64], series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    const COLORS: [&str; 6] = ["#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

    let finite = |v: &&f64| v.is_finite();
    let (x_lo, x_hi) = bounds(xs.iter().filter(finite).copied());
    let (y_lo, y_hi) = bounds(series.iter().flat_map(|(_, v)| v.iter().filter(finite).copied()));
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#888888"/>"##,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for (label, value, x, y, anchor) in [
        ("x", x_lo, LEFT, H - BOTTOM + 16.0, "start"),
        ("x", x_hi, W - RIGHT, H - BOTTOM + 16.0, "end"),
        ("y", y_lo, LEFT - 6.0, H - BOTTOM, "end"),
        ("y", y_hi, LEFT - 6.0, TOP + 10.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}" data-axis="{label}">{}</text>"#,
            format_tick(value)
        );
    }
    for (i, (label, values)) in series.iter().enumerate() {
        let points: Vec<String> = xs
            .iter()
            .zip(values)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if i == 0 { "" } else { r#" stroke-dasharray="6,3""# };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"><title>{}</title></polyline>"#,
            COLORS[i % COLORS.len()],
            points.join(" "),
            escape(label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            LEFT + 8.0,
            TOP + 14.0 + 13.0 * i as f64,
            COLORS[i % COLORS.len()],
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn format_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
