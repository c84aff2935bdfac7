//! Table, CSV and JSON renderings of benchmark reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchReport};

pub const ONE_PERCENT: f64 = 0.01;
pub const QUARTER_PERCENT: f64 = 0.0025;

pub const BENCH_CSV_HEADER: &str = "label,avg_ms,avg_1pct_ms,avg_025pct_ms,pass,nodes,edges,mode";

/// Milliseconds with at most two decimals and no trailing zeros.
pub fn format_ms(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn format_percent(fraction: f64) -> String {
    let s = format!("{:.4}", fraction * 100.0);
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Aligned text table: interaction, tails from rarest to most common, then
/// the mean of all frames.
pub fn render_report_table(reports: &[BenchReport]) -> String {
    let mut fractions: Vec<f64> = reports
        .first()
        .map(|r| r.avg_slowest.iter().map(|t| t.fraction).collect())
        .unwrap_or_else(|| vec![ONE_PERCENT, QUARTER_PERCENT]);
    fractions.sort_by(f64::total_cmp);

    let mut header = vec!["Interaction".to_owned()];
    header.extend(fractions.iter().map(|f| format!("Avg. of {}% slowest", format_percent(*f))));
    header.push("Avg. of all".to_owned());

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.label.clone()];
            row.extend(fractions.iter().map(|&f| r.tail(f).map_or_else(|| "-".to_owned(), format_ms)));
            row.push(format_ms(r.avg_all_ms));
            row
        })
        .collect();

    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        padded.join(" | ").trim_end().to_owned()
    };
    let mut out = line(&header);
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|&w| "-".repeat(w))
            .collect::<Vec<_>>()
            .join("-+-"),
    );
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// One `bench.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub avg_ms: f64,
    pub avg_1pct_ms: Option<f64>,
    pub avg_025pct_ms: Option<f64>,
    pub pass: bool,
    pub nodes: usize,
    pub edges: usize,
    pub mode: String,
}

impl From<&BenchReport> for BenchRow {
    fn from(r: &BenchReport) -> Self {
        BenchRow {
            label: r.label.clone(),
            avg_ms: r.avg_all_ms,
            avg_1pct_ms: r.tail(ONE_PERCENT),
            avg_025pct_ms: r.tail(QUARTER_PERCENT),
            pass: r.pass,
            nodes: r.meta.nodes,
            edges: r.meta.edges,
            mode: r.meta.mode.clone(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// `bench.csv` text. Floats use the shortest round-tripping form.
pub fn to_bench_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in reports.iter().map(BenchRow::from) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label,
            r.avg_ms,
            opt(r.avg_1pct_ms),
            opt(r.avg_025pct_ms),
            r.pass,
            r.nodes,
            r.edges,
            r.mode
        );
    }
    out
}

pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || (i == 0 && line.trim() == BENCH_CSV_HEADER) {
            continue;
        }
        let bad = |what: &str| BenchError::Csv {
            line: line_no,
            msg: what.to_owned(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let opt_num = |s: &str, what: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        rows.push(BenchRow {
            label: f[0].to_owned(),
            avg_ms: num(f[1], "avg_ms")?,
            avg_1pct_ms: opt_num(f[2], "avg_1pct_ms")?,
            avg_025pct_ms: opt_num(f[3], "avg_025pct_ms")?,
            pass: f[4].parse().map_err(|_| bad("pass"))?,
            nodes: f[5].parse().map_err(|_| bad("nodes"))?,
            edges: f[6].parse().map_err(|_| bad("edges"))?,
            mode: f[7].to_owned(),
        });
    }
    Ok(rows)
}

/// Table rendering straight from CSV rows (as read back by `report`).
pub fn rows_to_reports(rows: &[BenchRow], budget_ms: f64) -> Vec<BenchReport> {
    use super::{ReportMeta, TailStat};
    rows.iter()
        .map(|r| {
            let mut tails = Vec::new();
            if let Some(v) = r.avg_1pct_ms {
                tails.push(TailStat { fraction: ONE_PERCENT, frames: 0, avg_ms: v });
            }
            if let Some(v) = r.avg_025pct_ms {
                tails.push(TailStat { fraction: QUARTER_PERCENT, frames: 0, avg_ms: v });
            }
            BenchReport {
                label: r.label.clone(),
                samples: 0,
                avg_all_ms: r.avg_ms,
                avg_slowest: tails,
                budget_ms,
                pass: r.pass,
                meta: ReportMeta {
                    nodes: r.nodes,
                    edges: r.edges,
                    mode: r.mode.clone(),
                    ..Default::default()
                },
            }
        })
        .collect()
}

/// File stem for a report label: lowercase alphanumerics, `_` elsewhere.
pub fn report_file_stem(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_owned()
}

pub fn report_to_json(report: &BenchReport) -> String {
    serde_json::to_string_pretty(report).expect("reports always serialize")
}
