//! Plain-text and CSV renderings shared by the command-line front end.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{MseError, Result};
use crate::freq::{format_point_interval, SweepEntry};

/// Column-aligned table: a label column followed by one column per header entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TextTable {
    pub corner: String,
    pub header: Vec<String>,
    pub rows: Vec<(String, Vec<String>)>,
}

impl TextTable {
    pub fn new(corner: impl Into<String>, header: Vec<String>) -> Self {
        Self { corner: corner.into(), header, rows: Vec::new() }
    }

    pub fn push_row(&mut self, label: impl Into<String>, cells: Vec<String>) {
        self.rows.push((label.into(), cells));
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let label_w = self
            .rows
            .iter()
            .map(|(l, _)| l.chars().count())
            .chain([self.corner.chars().count()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|(_, cells)| cells.get(c))
                    .chain([&self.header[c]])
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |label: &str, cells: &[String]| {
            let mut s = format!("{label:<label_w$}");
            for (c, w) in widths.iter().enumerate() {
                let cell = cells.get(c).map(String::as_str).unwrap_or("");
                s.push_str(&format!("  {cell:>w$}"));
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&self.corner, &self.header);
        for (label, cells) in &self.rows {
            out.push_str(&line(label, cells));
        }
        out
    }
}

/// `xi` formatted without trailing zeros.
pub fn format_xi(xi: f64) -> String {
    let s = format!("{xi:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One row of point estimates and intervals across `xi` values; failures are shown by error name.
pub fn sweep_cells(entries: &[SweepEntry<f64>]) -> Vec<String> {
    entries
        .iter()
        .map(|e| match &e.result {
            Ok(est) => est.display_row(),
            Err(err) => format!("({})", err.name()),
        })
        .collect()
}

pub fn sweep_table(label: &str, entries: &[SweepEntry<f64>]) -> TextTable {
    let mut t = TextTable::new("xi", entries.iter().map(|e| format_xi(e.xi)).collect());
    t.push_row(label, sweep_cells(entries));
    t
}

/// One point of an estimate-versus-`xi` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub method: String,
    pub xi: f64,
    pub point: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// `ok` or the error name.
    pub status: String,
}

pub fn series_from_sweep(method: &str, entries: &[SweepEntry<f64>]) -> Vec<SeriesPoint> {
    entries
        .iter()
        .map(|e| match &e.result {
            Ok(est) => {
                let (lo, hi) = est.interval();
                SeriesPoint {
                    method: method.into(),
                    xi: e.xi,
                    point: Some(est.n_hat_real),
                    lo: Some(lo),
                    hi: Some(hi),
                    status: "ok".into(),
                }
            }
            Err(err) => SeriesPoint {
                method: method.into(),
                xi: e.xi,
                point: None,
                lo: None,
                hi: None,
                status: err.name().into(),
            },
        })
        .collect()
}

/// CSV `method,xi,point,lo,hi,status` for plotting estimates and bands against `xi`.
pub fn write_series_csv<W: Write>(writer: W, series: &[SeriesPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["method", "xi", "point", "lo", "hi", "status"])?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for p in series {
        w.write_record([
            p.method.clone(),
            format_xi(p.xi),
            num(p.point),
            num(p.lo),
            num(p.hi),
            p.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `"9540 [8123, 11242]"` for a posterior mean and interval.
pub fn format_posterior(mean: f64, lo: f64, hi: f64) -> String {
    format_point_interval(mean, (lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if values.is_empty() || bins == 0 {
        return Err(MseError::InvalidInput("histogram needs values and at least one bin".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect())
}

pub fn write_histogram_csv<W: Write>(writer: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["lo", "hi", "count"])?;
    for b in bins {
        w.write_record([format!("{:.6}", b.lo), format!("{:.6}", b.hi), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
