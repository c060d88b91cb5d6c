//! Post-hoc summary of round CSV files.

use std::collections::BTreeMap;
use std::path::Path;

use super::{RunnerError, CSV_HEADER};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub k: Option<usize>,
    pub rows: usize,
    /// Mean accuracy at the last round present.
    pub final_acc: f64,
    /// First round whose layout-mean accuracy reaches the threshold.
    pub rounds_to_threshold: Option<u64>,
    pub mean_msg_total: f64,
}

impl SummaryRow {
    pub fn label(&self) -> String {
        match self.k {
            Some(k) => format!("{}(k={k})", self.scheme),
            None => self.scheme.clone(),
        }
    }
}

#[derive(Default)]
struct Group {
    rows: usize,
    msg_total: f64,
    acc_by_round: BTreeMap<u64, (f64, usize)>,
}

fn bad(path: &Path, line: u64, message: impl Into<String>) -> RunnerError {
    RunnerError::Csv {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path, line: u64) -> Result<T, RunnerError> {
    let raw = rec.get(i).ok_or_else(|| bad(path, line, format!("missing `{name}`")))?;
    raw.parse()
        .map_err(|_| bad(path, line, format!("invalid `{name}` value `{raw}`")))
}

/// Group rows by scheme (and k), ordered by scheme name then k.
pub fn summarize<P: AsRef<Path>>(paths: &[P], threshold: f64) -> Result<Vec<SummaryRow>, RunnerError> {
    let mut groups: BTreeMap<(String, Option<usize>), Group> = BTreeMap::new();
    for path in paths {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)
            .map_err(|e| bad(path, 0, e.to_string()))?;
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| bad(path, 1, "empty file"))?
            .map_err(|e| bad(path, 1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(bad(path, 1, format!("unexpected header, expected `{CSV_HEADER}`")));
        }
        for rec in records {
            let rec = rec.map_err(|e| bad(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 12 {
                return Err(bad(path, line, format!("expected 12 fields, found {}", rec.len())));
            }
            let scheme: String = field(&rec, 2, "scheme", path, line)?;
            let k = match rec.get(3) {
                Some("") => None,
                _ => Some(field::<usize>(&rec, 3, "k", path, line)?),
            };
            let round: u64 = field(&rec, 1, "round", path, line)?;
            let acc: f64 = field(&rec, 5, "acc_mean", path, line)?;
            let total: f64 = field(&rec, 11, "msg_total", path, line)?;
            let g = groups.entry((scheme, k)).or_default();
            g.rows += 1;
            g.msg_total += total;
            let slot = g.acc_by_round.entry(round).or_insert((0.0, 0));
            slot.0 += acc;
            slot.1 += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|((scheme, k), g)| {
            let means: Vec<(u64, f64)> = g
                .acc_by_round
                .iter()
                .map(|(&r, &(sum, n))| (r, sum / n as f64))
                .collect();
            SummaryRow {
                scheme,
                k,
                rows: g.rows,
                final_acc: means.last().map_or(f64::NAN, |&(_, a)| a),
                rounds_to_threshold: means.iter().find(|&&(_, a)| a >= threshold).map(|&(r, _)| r),
                mean_msg_total: g.msg_total / g.rows as f64,
            }
        })
        .collect())
}

/// Aligned human-readable table; unreached thresholds show as `—`.
pub fn format_summary_text(rows: &[SummaryRow]) -> String {
    let mut lines = vec![[
        "scheme".to_owned(),
        "rows".to_owned(),
        "final_acc".to_owned(),
        "rounds_to_threshold".to_owned(),
        "mean_msg_total".to_owned(),
    ]];
    for r in rows {
        lines.push([
            r.label(),
            r.rows.to_string(),
            format!("{:.4}", r.final_acc),
            r.rounds_to_threshold.map_or("—".to_owned(), |v| v.to_string()),
            format!("{:.1}", r.mean_msg_total),
        ]);
    }
    let mut widths = [0usize; 5];
    for l in &lines {
        for (w, cell) in widths.iter_mut().zip(l) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (cell, w))| {
                let pad = w - cell.chars().count();
                if i == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Tab-separated rows with a header; unreached thresholds are blank.
pub fn format_summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("scheme\tk\trows\tfinal_acc\trounds_to_threshold\tmean_msg_total\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{}\t{:.3}\n",
            r.scheme,
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.rows,
            r.final_acc,
            r.rounds_to_threshold.map(|v| v.to_string()).unwrap_or_default(),
            r.mean_msg_total
        ));
    }
    out
}
