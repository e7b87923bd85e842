//! Tables, their CSV and JSON encodings, and the SVG line-chart emitter.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    /// Text for a leading label column; when present `columns[0]` names it.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            labels: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert!(self.labels.is_empty());
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_labeled(&mut self, label: impl Into<String>, row: Vec<f64>) {
        debug_assert_eq!(self.labels.len(), self.rows.len());
        debug_assert_eq!(row.len() + 1, self.columns.len());
        self.labels.push(label.into());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for (i, row) in self.rows.iter().enumerate() {
            let label = self.labels.get(i).cloned();
            w.write_record(label.into_iter().chain(row.iter().map(|v| v.to_string())))?;
        }
        w.into_inner().map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(bytes);
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut fields = rec.iter().peekable();
            if let Some(first) = fields.peek() {
                if first.parse::<f64>().is_err() {
                    labels.push(first.to_string());
                    fields.next();
                }
            }
            let row = fields
                .map(|v| v.parse::<f64>().map_err(|e| CliError::Output(format!("bad CSV value {v:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if !labels.is_empty() && labels.len() != rows.len() {
            return Err(CliError::Output("CSV mixes labeled and unlabeled rows".into()));
        }
        Ok(Table { columns, labels, rows })
    }
}

/// A named table written next to the main output as `<stem>.<suffix>.csv`.
#[derive(Clone, Debug)]
pub struct Extra {
    pub suffix: &'static str,
    pub table: Table,
}

pub fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = if suffix.is_empty() {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}.{suffix}.{ext}")
    };
    path.with_file_name(name)
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (64.0, 160.0, 28.0, 48.0);

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Line chart of every column against the first, from CSV bytes.
/// A label column is replaced by the row index.
pub fn svg_from_csv(csv_bytes: &[u8], title: &str) -> Result<String, CliError> {
    let mut table = Table::from_csv(csv_bytes)?;
    if !table.labels.is_empty() {
        table.columns[0] = "row".into();
        for (i, r) in table.rows.iter_mut().enumerate() {
            r.insert(0, i as f64);
        }
        table.labels.clear();
    }
    if table.columns.len() < 2 || table.rows.is_empty() {
        return Err(CliError::Output("SVG needs at least two columns and one row".into()));
    }
    let finite = |v: &f64| v.is_finite();
    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let ys = table.rows.iter().flat_map(|r| r[1..].iter().copied()).filter(finite);
    let (mut x0, mut x1) = xs.iter().copied().filter(finite).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(CliError::Output("SVG needs finite data".into()));
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5_f64.max(y0.abs() * 0.05) };
    y0 -= pad;
    y1 += pad;
    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" font-size="13">{}</text>"#, ml, escape(title));
    let _ = writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, mt + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 16.0, fmt_tick(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/>"##, ml + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 8.0,
        escape(&table.columns[0])
    );
    for (j, name) in table.columns.iter().enumerate().skip(1) {
        let color = PALETTE[(j - 1) % PALETTE.len()];
        let pts: Vec<String> = table
            .rows
            .iter()
            .filter(|r| r[0].is_finite() && r[j].is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r[0]), sy(r[j])))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = mt + 14.0 * j as f64;
        let lx = ml + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
