//! Report serialization and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stein_core::BoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 {
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "name",
    "target",
    "alternative",
    "observable",
    "lhs",
    "rhs",
    "slack",
    "tolerance",
    "pass",
    "quad_error",
];

fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn reports_to_string(reports: &[BoundReport], format: Format) -> String {
    match format {
        Format::Csv => csv_text(
            &REPORT_COLUMNS,
            reports.iter().map(|r| {
                vec![
                    r.name.clone(),
                    r.target.clone(),
                    r.alternative.clone(),
                    r.observable.clone(),
                    num(r.lhs),
                    num(r.rhs),
                    num(r.slack),
                    num(r.tolerance),
                    r.pass.to_string(),
                    num(r.quad_error),
                ]
            }),
        ),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

/// One line of `distance` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub target: String,
    pub alternative: String,
    pub value: f64,
    pub error_estimate: f64,
    /// Where a supremum is attained, when that is meaningful.
    pub at: Option<f64>,
}

pub fn metrics_to_string(rows: &[MetricRow], format: Format) -> String {
    match format {
        Format::Csv => csv_text(
            &["metric", "target", "alternative", "value", "error_estimate", "at"],
            rows.iter().map(|r| {
                vec![
                    r.metric.clone(),
                    r.target.clone(),
                    r.alternative.clone(),
                    num(r.value),
                    num(r.error_estimate),
                    r.at.map(num).unwrap_or_default(),
                ]
            }),
        ),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
    }
}

/// Write through a temporary file in the destination directory and rename
/// it into place, so readers never see a half-written report.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Send `contents` to `path`, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()
        }
    }
}
