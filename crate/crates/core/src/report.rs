//! Plain-text `key: value` report format.
//!
//! Every report starts with a `# fuselab <kind> report v1` line, followed by
//! one `key: value` pair per line. Blank lines and other `#` lines are
//! ignored by the parser. Floats are written in Rust's shortest round-trip
//! form, so parsing a value back gives the exact bits. The only field that
//! varies between identical runs is `generated_at`.

use std::fmt::Display;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

pub const TIMESTAMP_KEY: &str = "generated_at";

#[derive(Debug, Default, Clone)]
pub struct ReportWriter {
    lines: Vec<String>,
}

impl ReportWriter {
    pub fn new(kind: &str) -> Self {
        let mut w = Self::default();
        w.lines.push(format!("# fuselab {kind} report v1"));
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        w.field(TIMESTAMP_KEY, now);
        w
    }

    pub fn field(&mut self, key: &str, value: impl Display) -> &mut Self {
        debug_assert!(!key.contains(':') && !key.contains('\n'));
        self.lines.push(format!("{key}: {value}"));
        self
    }

    pub fn list<T: Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        self.field(key, joined)
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        self.lines.push(format!("# {text}"));
        self
    }

    pub fn finish(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Parsed report: ordered `(key, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub kind: String,
    pub entries: Vec<(String, String)>,
}

impl ParsedReport {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.get(key).ok_or_else(|| Error::parse(key, "missing from report"))?;
        raw.parse().map_err(|_| Error::parse(key, format!("not a number: `{raw}`")))
    }

    /// The report text without its timestamp line.
    pub fn without_timestamp(text: &str) -> String {
        text.lines()
            .filter(|l| !l.starts_with(&format!("{TIMESTAMP_KEY}:")))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse("header", "empty report"))?;
    let kind = header
        .strip_prefix("# fuselab ")
        .and_then(|s| s.strip_suffix(" report v1"))
        .ok_or_else(|| Error::parse("header", format!("unrecognized header `{header}`")))?
        .to_string();
    let mut entries = Vec::new();
    for line in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| Error::parse("report", format!("line `{line}` is not `key: value`")))?;
        entries.push((k.to_string(), v.to_string()));
    }
    Ok(ParsedReport { kind, entries })
}

/// Format an optional float; `inf` and `nan` are spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}
