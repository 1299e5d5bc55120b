//! Report rendering and artifact writing.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Rows with a header; cells are preformatted.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Space-aligned columns.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.header[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                let pad = widths[c] - cell.chars().count();
                if c > 0 {
                    s.push_str("  ");
                }
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            }
            s.trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Key/value rows flattened from a JSON document, dotted paths for nesting.
pub fn flatten(value: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, child, t);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), child, t);
                }
            }
            Value::String(s) => t.push(vec![prefix.to_string(), s.clone()]),
            other => t.push(vec![prefix.to_string(), other.to_string()]),
        }
    }
    let mut t = Table::new(["key", "value"]);
    walk("", value, &mut t);
    t
}

/// The flattened document as a single CSV row under a header of its keys.
pub fn single_row(value: &Value) -> Table {
    let kv = flatten(value);
    let mut t = Table::new(kv.rows.iter().map(|r| r[0].clone()));
    t.push(kv.rows.into_iter().map(|mut r| r.swap_remove(1)).collect());
    t
}

/// Everything a subcommand produces.
pub struct Report {
    /// Base name for artifacts in the output directory.
    pub name: &'static str,
    pub text: String,
    pub table: Table,
    pub json: Value,
    /// Extra artifacts `(file name, contents)`, written only to the output
    /// directory.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Text => self.text.clone(),
            Format::Csv => self.table.to_csv()?,
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)?;
                s.push('\n');
                s
            }
        })
    }

    /// Writes `<name>.csv`, `<name>.json` and the extra artifacts.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let mut written = Vec::new();
        let mut files = vec![
            (format!("{}.csv", self.name), self.render(Format::Csv)?),
            (format!("{}.json", self.name), self.render(Format::Json)?),
        ];
        files.extend(self.files.iter().cloned());
        for (file, contents) in files {
            let path = dir.join(&file);
            std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}
