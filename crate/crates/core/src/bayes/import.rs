//! Working draws of `pi~` exchanged as CSV.
//!
//! Columns are named `p_<pattern label>`, e.g. `p_011` for lists 1 and 2 of three.
//! In the full-probability layout a `p_000` column carries `pi0` and the other
//! cells are probabilities over the complete table.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contingency::{CellProbs, InclusionPattern};
use crate::error::{MseError, Result};

/// Absolute tolerance on the row sum of imported draws.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawFormat {
    ObservedProbs,
    FullProbs,
}

impl FromStr for DrawFormat {
    type Err = MseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "observed_probs" | "observed" => Ok(DrawFormat::ObservedProbs),
            "full_probs" | "full" => Ok(DrawFormat::FullProbs),
            other => Err(MseError::Parse(format!("unknown draw format {other:?}"))),
        }
    }
}

fn column_name(p: InclusionPattern) -> String {
    format!("p_{}", p.label())
}

fn parse_column(name: &str) -> Option<(usize, u32)> {
    let digits = name.trim().strip_prefix("p_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b == b'0' || b == b'1') {
        return None;
    }
    u32::from_str_radix(digits, 2).ok().map(|code| (digits.len(), code))
}

pub fn import_working_draws<R: Read>(reader: R, format: DrawFormat) -> Result<Vec<CellProbs<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut k = None;
    let mut slots = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let (len, code) = parse_column(h)
            .ok_or_else(|| MseError::Parse(format!("unexpected column {h:?} in draw file")))?;
        if *k.get_or_insert(len) != len {
            return Err(MseError::Parse("draw columns disagree on the number of lists".into()));
        }
        slots.push(code as usize);
    }
    let k = k.ok_or_else(|| MseError::Parse("draw file has no columns".into()))?;
    let cells = 1usize << k;
    let mut seen = vec![false; cells];
    for &s in &slots {
        if std::mem::replace(&mut seen[s], true) {
            return Err(MseError::Parse(format!("duplicate draw column for code {s}")));
        }
    }
    let has_zero = seen[0];
    match format {
        DrawFormat::FullProbs if !has_zero => {
            return Err(MseError::Parse("full_probs draws need a p_".to_string() + &"0".repeat(k) + " column"))
        }
        DrawFormat::ObservedProbs if has_zero => {
            return Err(MseError::Parse("observed_probs draws cannot carry the unobserved cell".into()))
        }
        _ => {}
    }
    if seen[1..].iter().any(|s| !s) {
        return Err(MseError::Parse(format!("draw file must have a column for each of the {} observed cells", cells - 1)));
    }

    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row + 1;
        let mut full = vec![0.0; cells];
        for (field, &slot) in rec.iter().zip(&slots) {
            let v: f64 = field.parse().map_err(|_| MseError::MalformedDraw {
                row,
                reason: format!("{field:?} is not a number"),
            })?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(MseError::MalformedDraw { row, reason: format!("invalid probability {v}") });
            }
            full[slot] = v;
        }
        let total: f64 = full.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(MseError::MalformedDraw { row, reason: format!("row sums to {total}") });
        }
        let probs = CellProbs::from_weights(k, full[1..].to_vec())
            .map_err(|e| MseError::MalformedDraw { row, reason: e.to_string() })?;
        out.push(probs);
    }
    Ok(out)
}

pub fn export_working_draws<W: Write>(writer: W, draws: &[CellProbs<f64>]) -> Result<()> {
    let Some(first) = draws.first() else {
        return Err(MseError::InvalidInput("no draws to export".into()));
    };
    let k = first.k();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(InclusionPattern::observed(k).map(column_name))?;
    for d in draws {
        if d.k() != k {
            return Err(MseError::InvalidInput("draws disagree on the number of lists".into()));
        }
        w.write_record(d.as_slice().iter().map(|p| format!("{p:e}")))?;
    }
    w.flush()?;
    Ok(())
}
