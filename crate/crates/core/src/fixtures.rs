//! Bundled data sets.

use crate::contingency::{load_table, ObservedTable};
use crate::error::{MseError, Result};

/// Kosovo casualty lists (ABA, EXH, HRW, OSCE), canonical CSV, unobserved cell absent.
pub const KOSOVO_CSV: &str = include_str!("../fixtures/kosovo.csv");

/// SHA-256 of [`KOSOVO_CSV`].
pub const KOSOVO_SHA256: &str = "ddad938992d21a2cbfe111b5d6c3ab43c289642947e07d460aba83e4ea951df2";

pub fn kosovo() -> Result<ObservedTable> {
    let table = load_table(KOSOVO_CSV.as_bytes(), None, "count")?;
    if table.checksum() != KOSOVO_SHA256 {
        return Err(MseError::ChecksumMismatch);
    }
    Ok(table)
}

/// Looks up a fixture by name.
pub fn by_name(name: &str) -> Result<ObservedTable> {
    match name.to_ascii_lowercase().as_str() {
        "kosovo" => kosovo(),
        other => Err(MseError::InvalidInput(format!("unknown fixture {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kosovo_loads_and_is_pinned() {
        let t = kosovo().unwrap();
        assert_eq!(t.n(), 4400);
        assert_eq!(t.list_names(), &["ABA", "EXH", "HRW", "OSCE"]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), KOSOVO_CSV);
    }
}
