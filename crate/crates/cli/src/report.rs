//! Deterministic CSV and JSON rendering of command results.

use serde_json::{Map, Value};
use sha1::{Digest, Sha1};

use crate::config::{ExperimentConfig, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits in scientific notation: round-trip exact.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.push((key.to_owned(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> String {
        match cfg.format {
            Format::Csv => self.csv(cfg),
            Format::Json => self.json(cfg),
        }
    }

    fn csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        for (k, v) in header(cfg) {
            out.push_str(&format!("# {k}: {}\n", v.csv()));
        }
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {}\n", v.csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, cfg: &ExperimentConfig) -> String {
        let header: Map<String, Value> = header(cfg)
            .into_iter()
            .map(|(k, v)| (k, v.json()))
            .collect();
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.clone(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("header".into(), Value::Object(header));
        doc.insert("meta".into(), Value::Object(meta));
        doc.insert("rows".into(), Value::Array(rows));
        let mut text =
            serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Git blob object id of `bytes`.
pub fn git_blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn header(cfg: &ExperimentConfig) -> Vec<(String, Cell)> {
    let p = &cfg.params;
    let mut h = vec![
        (
            "tool".to_owned(),
            Cell::Text(format!("antiito {}", env!("CARGO_PKG_VERSION"))),
        ),
        (
            "command".to_owned(),
            Cell::Text(cfg.command.map_or("none", |c| c.name()).to_owned()),
        ),
        (
            "params".to_owned(),
            Cell::Text(format!(
                "q={} r={} v={} c={} sigma={}",
                format_float(p.q),
                format_float(p.r),
                format_float(p.v),
                format_float(p.c),
                format_float(p.sigma)
            )),
        ),
    ];
    h.push((
        "seed".to_owned(),
        if cfg.simulates() {
            Cell::Int(cfg.sim_or_default().seed)
        } else {
            Cell::Missing
        },
    ));
    h.push((
        "config_hash".to_owned(),
        Cell::Text(git_blob_hash(cfg.canonical_json().as_bytes())),
    ));
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(
            git_blob_hash(b"hello\n"),
            "ce013625030ba8dba906f756967f9e9ca394464a"
        );
        assert_eq!(
            git_blob_hash(b""),
            "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 4.0 * (-2.0f64).exp(), 1e-300, 6.02e23] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new(&["x", "p"]);
        r.meta("k0", 4.0);
        r.row(vec![Cell::Num(1.0), Cell::Missing]);
        let text = r.render(&ExperimentConfig::default());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool: antiito "));
        assert!(lines.iter().any(|l| l.starts_with("# config_hash: ")));
        assert!(lines.contains(&"# k0: 4.0000000000000000e0"));
        assert_eq!(lines[lines.len() - 2], "x,p");
        assert_eq!(lines[lines.len() - 1], "1.0000000000000000e0,");
    }

    #[test]
    fn json_layout() {
        let mut r = Report::new(&["x"]);
        r.row(vec![Cell::Num(f64::INFINITY)]);
        let cfg = ExperimentConfig {
            format: Format::Json,
            ..ExperimentConfig::default()
        };
        let v: Value = serde_json::from_str(&r.render(&cfg)).unwrap();
        assert_eq!(v["rows"][0]["x"], Value::Null);
        assert!(v["header"]["config_hash"].is_string());
    }
}
