//! CSV and JSON emission.
//!
//! Every CSV starts with one `#` metadata line naming the case hash, load
//! scale, σ and tool version, followed by a header row.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::Serialize;

pub const TOOL_VERSION: &str = concat!("pgrid ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub case_hash: String,
    /// Load scale, or a sweep spec such as `0.5:2.5:0.1`.
    pub scale: String,
    /// Uniform σ, `per-bus`, or `none`.
    pub sigma: String,
    /// Extra `key=value` pairs appended after the fixed fields.
    pub extra: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(case_hash: &str, scale: impl Into<String>, sigma: impl Into<String>) -> Self {
        Metadata {
            case_hash: case_hash.to_string(),
            scale: scale.into(),
            sigma: sigma.into(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.extra.push((key.to_string(), value.into()));
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "# case={} scale={} sigma={} version={}",
            self.case_hash,
            self.scale,
            self.sigma,
            TOOL_VERSION.replace(' ', "-")
        );
        for (k, v) in &self.extra {
            let _ = write!(s, " {}={}", k, v);
        }
        s
    }
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{:?}", v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub meta: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn new(meta: Metadata, header: Vec<String>) -> Self {
        Csv {
            meta,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.meta.line());
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    match path {
        Some(p) => fs::write(p, text + "\n"),
        None => writeln!(io::stdout().lock(), "{}", text),
    }
}

/// Parses a CSV produced by [`Csv::render`]: metadata line, header, numeric rows.
pub fn parse_csv(text: &str) -> Option<(String, Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let meta = lines.next()?.strip_prefix("# ")?.to_string();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for l in lines {
        let row: Option<Vec<f64>> = l.split(',').map(|c| c.parse().ok()).collect();
        rows.push(row?);
    }
    Some((meta, header, rows))
}
