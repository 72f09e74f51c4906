//! CSV tables with a provenance header, and the checks an experiment asserts.

use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Floats use 17 significant digits so values round-trip exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    /// Values of one column parsed back as floats.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

/// Quotes a field when RFC 4180 requires it.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `lo ≤ value ≤ hi`, either side optional.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo: None,
            hi: Some(hi),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo: Some(lo),
            hi: None,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn holds(&self) -> bool {
        self.lo.is_none_or(|lo| self.value >= lo) && self.hi.is_none_or(|hi| self.value <= hi)
    }

    /// Distance to the nearest violated side; negative when violated.
    pub fn margin(&self) -> f64 {
        let lo = self.lo.map_or(f64::INFINITY, |lo| self.value - lo);
        let hi = self.hi.map_or(f64::INFINITY, |hi| hi - self.value);
        if self.value.is_nan() {
            f64::NEG_INFINITY
        } else {
            lo.min(hi)
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.holds() { "ok  " } else { "FAIL" };
        write!(f, "{status} {}: ", self.name)?;
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => write!(f, "{lo:e} ≤ {:e} ≤ {hi:e}", self.value)?,
            (Some(lo), None) => write!(f, "{:e} ≥ {lo:e}", self.value)?,
            (None, Some(hi)) => write!(f, "{:e} ≤ {hi:e}", self.value)?,
            (None, None) => write!(f, "{:e}", self.value)?,
        }
        write!(f, " (margin {:e})", self.margin())
    }
}

/// Output of one experiment.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub table: Table,
    /// Extra `# key value` lines after the provenance header.
    pub notes: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn note_num(&mut self, key: &str, value: f64) {
        self.note(key, num(value));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds())
    }

    pub fn note_value(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Header comment, column names and rows; the bytes depend only on the config.
    pub fn render(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let exp = cfg.experiment.map_or("unknown", |e| e.name());
        let _ = writeln!(s, "# matphi {VERSION}");
        let _ = writeln!(s, "# experiment {exp}");
        let _ = writeln!(s, "# config-sha256 {}", cfg.hash());
        let _ = writeln!(s, "# seed {}", cfg.seed);
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k} {v}");
        }
        let header: Vec<String> = self.table.columns.iter().map(|c| field(c)).collect();
        s.push_str(&header.join(","));
        s.push_str("\r\n");
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(|c| field(c)).collect();
            s.push_str(&cells.join(","));
            s.push_str("\r\n");
        }
        s
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
