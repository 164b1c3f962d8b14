//! Column tables and their deterministic CSV/JSON rendering.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone)]
pub enum Column {
    Int(Vec<i64>),
    Float(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Float(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            Column::Int(v) => v[i].to_string(),
            // 17 significant digits round-trip every f64.
            Column::Float(v) => format!("{:.16e}", v[i]),
            Column::Text(v) => v[i].clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Column::Int(v) => json!(v),
            Column::Float(v) => json!(v),
            Column::Text(v) => json!(v),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<(&'static str, Column)>,
}

impl Table {
    pub fn with(mut self, name: &'static str, col: Column) -> Self {
        self.columns.push((name, col));
        self
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn render(&self, config: &RunConfig) -> String {
        debug_assert!(self.columns.iter().all(|(_, c)| c.len() == self.rows()));
        match config.format {
            Format::Csv => self.csv(config),
            Format::Json => self.json(config),
        }
    }

    fn csv(&self, config: &RunConfig) -> String {
        let mut s = format!("{}\n", header(config));
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| *n).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|(_, c)| c.cell(i)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    fn json(&self, config: &RunConfig) -> String {
        let columns: serde_json::Map<String, Value> =
            self.columns.iter().map(|(n, c)| (n.to_string(), c.to_json())).collect();
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| *n).collect();
        let doc = json!({
            "tool": "bouncer",
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": config.hash(),
            "config": config,
            "column_order": names,
            "columns": columns,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

pub fn header(config: &RunConfig) -> String {
    format!("# bouncer {} config-sha256={}", env!("CARGO_PKG_VERSION"), config.hash())
}

/// Write to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes()).context("writing to stdout")?;
        return out.flush().context("writing to stdout");
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file next to {}", path.display()))?;
    tmp.write_all(text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    tmp.as_file().sync_all().with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
