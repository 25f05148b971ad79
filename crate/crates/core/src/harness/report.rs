use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};

use super::config::ExperimentKind;
use super::studies::{FitOutcome, Report, Row};

pub const CSV_HEADER: &str = "key,estimate,stderr,n_reps";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Plot,
}

/// CSV rows followed by `#` metadata lines. Floats use the shortest
/// representation that parses back to the same value.
pub fn render_csv(report: &Report) -> Result<String> {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "{CSV_HEADER}").unwrap();
    for r in &report.rows {
        writeln!(w, "{},{},{},{}", r.key, r.estimate, r.stderr, r.n_reps).unwrap();
    }
    let config = &report.config;
    writeln!(w, "# kind: {}", config.kind.name()).unwrap();
    writeln!(w, "# seed: {}", config.seed).unwrap();
    writeln!(w, "# config_sha256: {}", config.content_hash()?).unwrap();
    match &report.fit_window {
        Some(k) => writeln!(w, "# fit_window_start: {k}").unwrap(),
        None => writeln!(w, "# fit_window_start: none").unwrap(),
    }
    match &report.fit {
        Some(FitOutcome::Fitted(f)) => {
            writeln!(w, "# slope: {}", f.slope).unwrap();
            writeln!(w, "# slope_half_width_95: {}", f.half_width).unwrap();
            writeln!(w, "# slope_points: {}", f.points).unwrap();
        }
        Some(FitOutcome::Degenerate(why)) => writeln!(w, "# slope: degenerate ({why})").unwrap(),
        None => {}
    }
    if let Some(s) = report.reference_slope {
        writeln!(w, "# reference_slope: {s}").unwrap();
    }
    for (k, v) in &report.notes {
        writeln!(w, "# note {k}: {v}").unwrap();
    }
    for c in &report.checks {
        let verdict = if c.passed { "pass" } else { "fail" };
        writeln!(w, "# check {}: {verdict} ({})", c.name, c.detail).unwrap();
    }
    for line in config.to_toml()?.lines() {
        writeln!(w, "# config: {line}").unwrap();
    }
    Ok(out)
}

/// Reads the data rows back from [`render_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::config("missing CSV header"));
    }
    lines
        .map(|line| {
            let bad = || Error::config(format!("malformed row `{line}`"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(Row {
                key: f[0].to_string(),
                estimate: f[1].parse().map_err(|_| bad())?,
                stderr: f[2].parse().map_err(|_| bad())?,
                n_reps: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Writes `<kind>.csv` and, when requested and meaningful, `<kind>.svg`.
pub fn emit_report(report: &Report, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let stem = report.kind().name();
    if formats.contains(&ReportFormat::Csv) {
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, render_csv(report)?)?;
        written.push(path);
    }
    if formats.contains(&ReportFormat::Plot) {
        let path = dir.join(format!("{stem}.svg"));
        if write_plot(report, &path)? {
            written.push(path);
        }
    }
    Ok(written)
}

fn plot_points(report: &Report) -> Vec<(f64, f64, f64)> {
    let horizon = report.config.horizon;
    report
        .rows
        .iter()
        .filter_map(|r| {
            let key: f64 = r.key.parse().ok()?;
            let x = match report.kind() {
                ExperimentKind::Chaos => key,
                _ => horizon / key,
            };
            (r.estimate > 0.0).then_some((x, r.estimate, r.stderr))
        })
        .collect()
}

/// Log-log plot with error bars, fitted line and (for rate studies) the
/// theoretical reference slope. Returns `false` when there is nothing to draw.
pub fn write_plot(report: &Report, path: &Path) -> Result<bool> {
    let pts = plot_points(report);
    if pts.is_empty() || report.kind() == ExperimentKind::Oracle {
        return Ok(false);
    }
    draw(report, &pts, path).map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    Ok(true)
}

fn draw(report: &Report, pts: &[(f64, f64, f64)], path: &Path) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let (mut x0, mut x1) = (f64::INFINITY, 0.0f64);
    let (mut y0, mut y1) = (f64::INFINITY, 0.0f64);
    for &(x, y, se) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min((y - se).max(y / 2.0));
        y1 = y1.max(y + se);
    }
    let (x0, x1, y0, y1) = (x0 / 1.5, x1 * 1.5, y0 / 1.5, y1 * 1.5);

    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} study", report.kind().name()), ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())?;
    let x_desc = if report.kind() == ExperimentKind::Chaos { "N" } else { "h" };
    chart.configure_mesh().x_desc(x_desc).y_desc("estimate").draw()?;

    chart.draw_series(pts.iter().map(|&(x, y, se)| {
        ErrorBar::new_vertical(x, (y - se).max(y0), y, y + se, BLUE.filled(), 8)
    }))?;
    chart.draw_series(pts.iter().map(|&(x, y, _)| Circle::new((x, y), 4, BLUE.filled())))?;
    if let Some(FitOutcome::Fitted(f)) = &report.fit {
        chart
            .draw_series(LineSeries::new([(x0, f.predict(x0)), (x1, f.predict(x1))], RED.stroke_width(2)))?
            .label(format!("fit slope {:.3} ± {:.3}", f.slope, f.half_width))
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
    }
    if let Some(s) = report.reference_slope {
        let (px, py, _) = pts[0];
        let line = |x: f64| py * (x / px).powf(s);
        chart
            .draw_series(LineSeries::new([(x0, line(x0)), (x1, line(x1))], BLACK))?
            .label(format!("reference slope {s}"))
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLACK));
    }
    if report.fit.is_some() || report.reference_slope.is_some() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
    }
    root.present()?;
    Ok(())
}
