use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pattern::{check_k, observed_cells, InclusionPattern};
use crate::error::{MseError, Result};

/// Incomplete `2^K` contingency table: counts for every nonzero inclusion pattern.
///
/// Counts are stored densely in canonical order (index `code - 1`), zeros included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedTable {
    list_names: Vec<String>,
    counts: Vec<u64>,
    n: u64,
}

impl ObservedTable {
    /// `counts[i]` is the count for the pattern with code `i + 1`.
    pub fn new(list_names: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let k = list_names.len();
        check_k(k)?;
        if counts.len() != observed_cells(k) {
            return Err(MseError::InvalidInput(format!(
                "expected {} cells for K={k}, got {}",
                observed_cells(k),
                counts.len()
            )));
        }
        for (i, a) in list_names.iter().enumerate() {
            if list_names[..i].contains(a) {
                return Err(MseError::InvalidInput(format!("duplicate list name {a:?}")));
            }
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| MseError::InvalidInput("total count overflows u64".into()))?;
        if n == 0 {
            return Err(MseError::InvalidInput("table has no observed individuals".into()));
        }
        Ok(Self {
            list_names,
            counts,
            n,
        })
    }

    /// Builds a table from sparse cells; absent patterns get a count of zero.
    pub fn from_cells(
        list_names: Vec<String>,
        cells: impl IntoIterator<Item = (InclusionPattern, u64)>,
    ) -> Result<Self> {
        let k = list_names.len();
        check_k(k)?;
        let mut counts = vec![0u64; observed_cells(k)];
        let mut seen = vec![false; observed_cells(k)];
        for (p, c) in cells {
            if p.k() != k {
                return Err(MseError::InvalidInput(format!(
                    "pattern {p} has {} lists, table has {k}",
                    p.k()
                )));
            }
            if p.is_zero() {
                return Err(MseError::IllegalCell);
            }
            let idx = p.code() as usize - 1;
            if seen[idx] {
                return Err(MseError::DuplicateCell(p.label()));
            }
            seen[idx] = true;
            counts[idx] = c;
        }
        Self::new(list_names, counts)
    }

    /// Default list names `L1..LK`.
    pub fn default_names(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("L{i}")).collect()
    }

    pub fn k(&self) -> usize {
        self.list_names.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn list_names(&self) -> &[String] {
        &self.list_names
    }

    /// Counts in canonical order.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Count at a nonzero pattern; the zero pattern has no count.
    pub fn count(&self, p: InclusionPattern) -> Option<u64> {
        if p.is_zero() || p.k() != self.k() {
            None
        } else {
            Some(self.counts[p.code() as usize - 1])
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (InclusionPattern, u64)> + '_ {
        InclusionPattern::observed(self.k()).zip(self.counts.iter().copied())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.list_names.iter().position(|l| l == name)
    }

    /// Resolves list names to indices, keeping the given order.
    pub fn resolve_lists<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|s| {
                self.index_of(s.as_ref()).ok_or_else(|| {
                    MseError::InvalidSubset(format!("unknown list {:?}", s.as_ref()))
                })
            })
            .collect()
    }

    /// SHA-256 of the canonical CSV serialization, hex encoded.
    pub fn checksum(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        crate::report::sha256_hex(&buf)
    }

    /// Canonical CSV: header `list1,...,listK,count`, one row per nonzero pattern.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header: Vec<&str> = self.list_names.iter().map(String::as_str).collect();
        header.push("count");
        wtr.write_record(&header)?;
        for (p, c) in self.cells() {
            let mut rec: Vec<String> = (0..self.k())
                .map(|i| if p.bit(i) { "1".into() } else { "0".into() })
                .collect();
            rec.push(c.to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> TableJson {
        TableJson {
            lists: self.list_names.clone(),
            cells: self
                .cells()
                .map(|(p, c)| CellJson {
                    pattern: p.bits().into_iter().map(u8::from).collect(),
                    count: c,
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &TableJson) -> Result<Self> {
        let k = doc.lists.len();
        let cells = doc
            .cells
            .iter()
            .map(|c| {
                if c.pattern.len() != k {
                    return Err(MseError::Parse(format!(
                        "pattern {:?} has {} flags, expected {k}",
                        c.pattern,
                        c.pattern.len()
                    )));
                }
                let bits = c
                    .pattern
                    .iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(MseError::Parse(format!("non-binary flag {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((InclusionPattern::from_bits(&bits)?, c.count))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(doc.lists.clone(), cells)
    }
}

/// JSON table document `{ "lists": [...], "cells": [{"pattern": [0,1,...], "count": n}] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableJson {
    pub lists: Vec<String>,
    pub cells: Vec<CellJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellJson {
    pub pattern: Vec<u8>,
    pub count: u64,
}

fn parse_flag(field: &str, row: usize) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(MseError::Parse(format!(
            "row {row}: non-binary flag {other:?}"
        ))),
    }
}

/// Reads a table from CSV text.
///
/// `list_columns = None` takes every column except `count_column`, in header order.
/// Rows may be in any order; missing patterns are filled with zero. An all-zero
/// row is tolerated only with a blank count.
pub fn load_table<R: Read>(
    source: R,
    list_columns: Option<&[String]>,
    count_column: &str,
) -> Result<ObservedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let count_idx = headers
        .iter()
        .position(|h| h == count_column)
        .ok_or_else(|| MseError::Parse(format!("missing count column {count_column:?}")))?;
    let (names, list_idx): (Vec<String>, Vec<usize>) = match list_columns {
        Some(cols) => {
            let idx = cols
                .iter()
                .map(|c| {
                    headers
                        .iter()
                        .position(|h| h == c)
                        .ok_or_else(|| MseError::Parse(format!("missing list column {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            (cols.to_vec(), idx)
        }
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != count_idx)
            .map(|(i, h)| (h.to_string(), i))
            .unzip(),
    };
    check_k(names.len()).map_err(|e| MseError::Parse(e.to_string()))?;

    let mut cells = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2;
        let bits = list_idx
            .iter()
            .map(|&i| parse_flag(rec.get(i).unwrap_or(""), row))
            .collect::<Result<Vec<_>>>()?;
        let pattern = InclusionPattern::from_bits(&bits)?;
        let raw = rec.get(count_idx).unwrap_or("").trim();
        if pattern.is_zero() {
            if raw.is_empty() {
                continue;
            }
            return Err(MseError::IllegalCell);
        }
        let count: u64 = raw
            .parse()
            .map_err(|_| MseError::Parse(format!("row {row}: invalid count {raw:?}")))?;
        cells.push((pattern, count));
    }
    ObservedTable::from_cells(names, cells)
}

/// Reads the JSON table form.
pub fn load_table_json<R: Read>(source: R) -> Result<ObservedTable> {
    let doc: TableJson = serde_json::from_reader(source)?;
    ObservedTable::from_json(&doc)
}

/// Loads a table file, choosing JSON for `.json` paths and CSV otherwise.
pub fn load_table_path(
    path: &Path,
    list_columns: Option<&[String]>,
    count_column: &str,
) -> Result<ObservedTable> {
    let file = std::fs::File::open(path)
        .map_err(|e| MseError::Io(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        load_table_json(file)
    } else {
        load_table(file, list_columns, count_column)
    }
}
