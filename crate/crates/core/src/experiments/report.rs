use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ExperimentRow};

pub const CSV_HEADER: [&str; 11] = [
    "model_tag",
    "direction",
    "design",
    "start",
    "previous_ratio",
    "new_ratio",
    "increase",
    "keys_manual",
    "keys_auto",
    "n_claims",
    "skipped",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown format `{other}` (expected csv or markdown)")),
        }
    }
}

/// `0.6274` → `"62.7"`, rounding half to even.
pub fn format_percent(ratio: f64) -> String {
    let tenths = (ratio * 1000.0).round_ties_even() / 10.0;
    // avoid "-0.0"
    format!("{:.1}", tenths + 0.0)
}

fn percent_cell(ratio: Option<f64>) -> String {
    ratio.map(format_percent).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> ExperimentError {
    ExperimentError::Csv(e.to_string())
}

pub fn emit_report(rows: &[ExperimentRow], format: ReportFormat) -> Result<String, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::EmptyReport);
    }
    match format {
        ReportFormat::Csv => emit_csv(rows),
        ReportFormat::Markdown => emit_markdown(rows),
    }
}

fn emit_csv(rows: &[ExperimentRow]) -> Result<String, ExperimentError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.model_tag.clone(),
            r.direction.to_string(),
            r.design.clone(),
            r.start.clone(),
            percent_cell(r.previous_ratio),
            percent_cell(r.new_ratio),
            percent_cell(r.increase),
            r.keys_manual.to_string(),
            r.keys_auto.to_string(),
            r.n_claims.to_string(),
            r.skipped.to_string(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn md_percent(ratio: Option<f64>) -> String {
    ratio.map(|r| format!("{}%", format_percent(r))).unwrap_or_else(|| "n/a".into())
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn emit_markdown(rows: &[ExperimentRow]) -> Result<String, ExperimentError> {
    let comparisons = rows.iter().filter(|r| r.is_comparison()).count();
    let mut out = String::new();
    if comparisons == rows.len() {
        out.push_str("| Model | Direction | Previous Ratio | New Ratio | Increase |\n");
        out.push_str("|---|---|---|---|---|\n");
        for r in rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                md_escape(&r.model_tag),
                r.direction,
                md_percent(r.previous_ratio),
                md_percent(r.new_ratio),
                md_percent(r.increase)
            );
        }
        return Ok(out);
    }
    if comparisons > 0 {
        return Err(ExperimentError::MixedRows);
    }

    // pivot: one line per (model, design, direction), one column per start
    let mut starts: Vec<&str> = Vec::new();
    let mut keys: Vec<(&str, &str, String)> = Vec::new();
    for r in rows {
        if !starts.contains(&r.start.as_str()) {
            starts.push(&r.start);
        }
        let key = (r.model_tag.as_str(), r.design.as_str(), r.direction.to_string());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let show_design = keys.iter().any(|k| k.1 != keys[0].1);
    out.push_str("| Model |");
    if show_design {
        out.push_str(" Design |");
    }
    out.push_str(" Direction |");
    for s in &starts {
        let label = if s.starts_with('q') { s.to_uppercase() } else { s.to_string() };
        let _ = write!(out, " {label} |");
    }
    out.push('\n');
    let columns = 2 + usize::from(show_design) + starts.len();
    out.push('|');
    out.push_str(&"---|".repeat(columns));
    out.push('\n');
    for (tag, design, direction) in &keys {
        let _ = write!(out, "| {} |", md_escape(tag));
        if show_design {
            let _ = write!(out, " {design} |");
        }
        let _ = write!(out, " {direction} |");
        for s in &starts {
            let cell = rows
                .iter()
                .find(|r| r.model_tag == *tag && r.design == *design && r.direction.to_string() == *direction && r.start == *s)
                .map(|r| md_percent(r.new_ratio))
                .unwrap_or_default();
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_percent(cell: &str, line: usize) -> Result<Option<f64>, ExperimentError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(|p| Some(p / 100.0))
        .map_err(|_| ExperimentError::Csv(format!("line {line}: `{cell}` is not a percentage")))
}

fn parse_field<T: FromStr>(cell: &str, what: &str, line: usize) -> Result<T, ExperimentError> {
    cell.parse().map_err(|_| ExperimentError::Csv(format!("line {line}: bad {what} `{cell}`")))
}

/// Reads rows back from [`emit_report`]'s CSV. Ratios keep only the printed
/// precision.
pub fn parse_csv(text: &str) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(ExperimentError::Csv(format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let rec = record.map_err(csv_error)?;
        let f = |j: usize| rec.get(j).unwrap_or("");
        rows.push(ExperimentRow {
            model_tag: f(0).to_string(),
            direction: parse_field(f(1), "direction", line)?,
            design: f(2).to_string(),
            start: f(3).to_string(),
            previous_ratio: parse_percent(f(4), line)?,
            new_ratio: parse_percent(f(5), line)?,
            increase: parse_percent(f(6), line)?,
            keys_manual: parse_field(f(7), "keys_manual", line)?,
            keys_auto: parse_field(f(8), "keys_auto", line)?,
            n_claims: parse_field(f(9), "n_claims", line)?,
            skipped: parse_field(f(10), "skipped", line)?,
        });
    }
    if rows.is_empty() {
        return Err(ExperimentError::EmptyReport);
    }
    Ok(rows)
}
