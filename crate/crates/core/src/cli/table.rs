//! Result tables and their CSV/JSON encodings.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Numbers keep 17 significant digits so the text round-trips exactly.
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf".into() } else { "-inf".into() },
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Unit label, empty for dimensionless or text columns.
    pub unit: String,
}

/// Rectangular table with `#`-prefixed metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// File stem.
    pub name: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

/// Metadata key whose value changes between otherwise identical runs.
pub const TIMESTAMP_KEY: &str = "generated_unix";

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            metadata: Vec::new(),
            columns: columns
                .iter()
                .map(|(n, u)| Column { name: n.to_string(), unit: u.to_string() })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            for (i, line) in v.lines().enumerate() {
                if i == 0 {
                    out.push_str(&format!("# {k}: {line}\n"));
                } else {
                    out.push_str(&format!("#   {line}\n"));
                }
            }
            if v.is_empty() {
                out.push_str(&format!("# {k}:\n"));
            }
        }
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}={}", c.name, if c.unit.is_empty() { "1" } else { &c.unit }))
            .collect();
        out.push_str(&format!("# units: {}\n", units.join(" ")));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("writing to memory");
        }
        let body = w.into_inner().expect("flushing to memory");
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        out
    }

    pub fn to_json(&self) -> Value {
        let metadata: serde_json::Map<String, Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "name": self.name,
            "metadata": metadata,
            "columns": self.columns.iter().map(|c| json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        f.sync_all()
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("table serializes");
        std::fs::write(path, text + "\n")
    }
}

/// Lines of a CSV document that do not depend on when it was produced.
pub fn stable_lines(csv: &str) -> Vec<&str> {
    let stamp = format!("# {TIMESTAMP_KEY}:");
    csv.lines().filter(|l| !l.starts_with(&stamp)).collect()
}
