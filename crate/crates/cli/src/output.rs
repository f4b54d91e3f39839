use std::fs;
use std::io::Write;
use std::path::Path;

use idmse::report::sha256_hex;
use serde_json::{json, Value};

use crate::args::Format;
use crate::error::{CliError, CliResult};

pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    /// Resolved options, recorded in the manifest.
    pub args: Value,
    pub json: Value,
    pub text: String,
    pub csv: String,
    /// Additional files written only with `--out`.
    pub extra: Vec<(String, Vec<u8>)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, seed: u64, args: Value) -> Self {
        Self {
            command,
            seed,
            args,
            json: Value::Null,
            text: String::new(),
            csv: String::new(),
            extra: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn json_text(&self) -> String {
        serde_json::to_string_pretty(&self.json).expect("serializable report") + "\n"
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        let body = match format {
            Format::Table => self.text.clone(),
            Format::Json => self.json_text(),
            Format::Csv => self.csv.clone(),
        };
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(body.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Output(e.to_string()))?;
        if let Some(dir) = out {
            self.write_dir(dir)?;
        }
        Ok(())
    }

    fn write_dir(&self, dir: &Path) -> CliResult<()> {
        let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(fail)?;
        let mut files: Vec<(String, Vec<u8>)> = vec![
            (format!("{}.json", self.command), self.json_text().into_bytes()),
            (format!("{}.txt", self.command), self.text.clone().into_bytes()),
            (format!("{}.csv", self.command), self.csv.clone().into_bytes()),
        ];
        files.extend(self.extra.iter().cloned());
        let mut listing = Vec::new();
        for (name, bytes) in &files {
            fs::write(dir.join(name), bytes).map_err(fail)?;
            listing.push(json!({"name": name, "bytes": bytes.len(), "sha256": sha256_hex(bytes)}));
        }
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "args": self.args,
            "warnings": self.warnings,
            "files": listing,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
        fs::write(dir.join("manifest.json"), text).map_err(fail)?;
        Ok(())
    }
}

/// Two-column `key  value` listing.
pub fn key_values(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}
