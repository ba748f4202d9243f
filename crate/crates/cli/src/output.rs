use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use finepot::io::{fmt_f64, Table};
use finepot::Result;
use sha2::{Digest, Sha256};

/// Owns the output directory of one run and records what it wrote.
pub struct Run {
    pub out: PathBuf,
    pub seed: u64,
    pub command: String,
    pub parameters: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A TOML basic string.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Run {
    pub fn new(out: &Path, seed: u64, command: &str) -> Result<Self> {
        std::fs::create_dir_all(out)?;
        Ok(Self {
            out: out.to_path_buf(),
            seed,
            command: command.to_string(),
            parameters: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `table` with a leading `seed` column.
    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        let mut t =
            Table::new(std::iter::once("seed".to_string()).chain(table.header.iter().cloned()));
        let seed = self.seed.to_string();
        for r in &table.rows {
            t.push(
                std::iter::once(seed.clone())
                    .chain(r.iter().cloned())
                    .collect(),
            );
        }
        let bytes = t.to_bytes()?;
        std::fs::write(self.out.join(name), &bytes)?;
        self.outputs.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    /// `manifest.toml`: parameters, input and output hashes, and a status
    /// that marks the outputs as partial when the run failed.
    pub fn manifest(&self, status: &str) -> Result<()> {
        let mut s = String::new();
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(s, "command = {}", quote(&self.command));
        let _ = writeln!(s, "status = {}", quote(status));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "created_unix = {created}");
        let _ = writeln!(s, "\n[versions]");
        let _ = writeln!(s, "finepot = {}", quote(env!("CARGO_PKG_VERSION")));
        let _ = writeln!(s, "\n[parameters]");
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "{} = {}", quote(k), quote(v));
        }
        let _ = writeln!(s, "\n[inputs]");
        for p in &self.inputs {
            let hash = std::fs::read(p)
                .map(|b| sha256_hex(&b))
                .unwrap_or_else(|e| format!("unreadable: {e}"));
            let _ = writeln!(s, "{} = {}", quote(&p.display().to_string()), quote(&hash));
        }
        let _ = writeln!(s, "\n[outputs]");
        for (name, hash) in &self.outputs {
            let _ = writeln!(s, "{} = {}", quote(name), quote(hash));
        }
        std::fs::write(self.out.join("manifest.toml"), s)?;
        Ok(())
    }
}

/// Error record as TOML, for stderr and `error.toml`.
pub fn error_record(command: &str, kind: &str, message: &str, seed: Option<u64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[error]");
    let _ = writeln!(s, "command = {}", quote(command));
    let _ = writeln!(s, "kind = {}", quote(kind));
    let _ = writeln!(s, "message = {}", quote(message));
    if let Some(seed) = seed {
        let _ = writeln!(s, "seed = {seed}");
    }
    s
}

/// `quantity,value,tolerance` summary tables.
pub struct Summary(pub Table);

impl Summary {
    pub fn new() -> Self {
        Self(Table::new(["quantity", "value", "tolerance"]))
    }

    pub fn add(&mut self, q: &str, value: f64, tol: f64) {
        self.0
            .push(vec![q.to_string(), fmt_f64(value), fmt_f64(tol)]);
    }

    pub fn flag(&mut self, q: &str, value: bool) {
        self.0.push(vec![
            q.to_string(),
            u8::from(value).to_string(),
            "0".to_string(),
        ]);
    }
}
