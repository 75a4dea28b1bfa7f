use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kobalt_core::CVector;
use serde::Serialize;

use crate::failure::Failure;

pub const RESULTS_FILE: &str = "results.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "plot.svg";

/// Shortest round-trip decimal form, so reruns produce identical bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column names `{prefix}_re{j}`, `{prefix}_im{j}` for a point of `C^d`.
pub fn point_header(prefix: &str, d: usize) -> Vec<String> {
    (0..d).flat_map(|j| [format!("{prefix}_re{j}"), format!("{prefix}_im{j}")]).collect()
}

pub fn point_cells(z: &CVector) -> Vec<String> {
    z.iter().flat_map(|w| [num(w.re), num(w.im)]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dots,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    pub colour: &'static str,
}

/// A 2D slice plot: series drawn with equal axis scales.
#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 480.0;
        const PAD: f64 = 36.0;
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let scale = (SIZE - 2.0 * PAD) / span;
        let map = |x: f64, y: f64| (SIZE / 2.0 + (x - cx) * scale, SIZE / 2.0 - (y - cy) * scale);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(&self.title));
        for (k, s) in self.series.iter().enumerate() {
            let finite: Vec<(f64, f64)> =
                s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| map(x, y)).collect();
            match s.mark {
                Mark::Line => {
                    let path: Vec<String> = finite.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                        s.colour,
                        path.join(" ")
                    );
                }
                Mark::Dots => {
                    for (x, y) in &finite {
                        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.2" fill="{}"/>"#, s.colour);
                    }
                }
            }
            let ly = SIZE - 12.0 - 14.0 * k as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{PAD}" y="{ly}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
                s.colour,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Serialize)]
pub struct Report<'a, P: Serialize, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub threads: usize,
    pub domain_spec: &'a kobalt_core::models::DomainSpec,
    pub params: &'a P,
    pub tolerances: &'a T,
    pub status: &'static str,
    pub inconsistencies: &'a [String],
    pub rows: usize,
    pub artifacts: Vec<String>,
    pub summary: &'a serde_json::Value,
}

/// Writes the CSV, the report and an optional plot into `dir`; returns the paths.
pub fn write_all<P: Serialize, T: Serialize>(
    dir: &Path,
    table: &Table,
    report: &Report<'_, P, T>,
    plot: Option<&Plot>,
) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir)?;
    let mut written = vec![dir.join(RESULTS_FILE)];
    table.write(&written[0])?;
    if let Some(p) = plot {
        let path = dir.join(PLOT_FILE);
        fs::write(&path, p.to_svg())?;
        written.push(path);
    }
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
