//! Table output with provenance header lines: `# spec:`, `# seed:`, `# build:`.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::precondition(format!("unknown format {other}, expected csv or json"))),
        }
    }
}

/// Version plus the commit given at build time through WEYLCHAMBER_COMMIT, if any.
pub fn build_id() -> String {
    format!(
        "weylchamber {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("WEYLCHAMBER_COMMIT").unwrap_or("unversioned")
    )
}

/// Rows of a table with named columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }

    /// Concatenate rows, prefixing each with a section label.
    pub fn with_section(mut self, name: &str) -> Self {
        self.headers.insert(0, "section".into());
        for r in &mut self.rows {
            r.insert(0, name.to_string());
        }
        self
    }
}

fn cell_value(s: &str) -> Value {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null),
        _ => match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            "" => Value::Null,
            _ => Value::String(s.to_string()),
        },
    }
}

/// Write the table after the provenance lines. CSV gets `#` comment lines; JSON wraps the
/// rows (flat objects) together with spec, seed and build.
pub fn write_table<W: Write>(out: &mut W, spec: &Value, seed: u64, format: Format, table: &Table) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# spec: {}", serde_json::to_string(spec)?)?;
            writeln!(out, "# seed: {seed}")?;
            writeln!(out, "# build: {}", build_id())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.headers)?;
            for r in &table.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (h, c) in table.headers.iter().zip(r) {
                        m.insert(h.clone(), cell_value(c));
                    }
                    Value::Object(m)
                })
                .collect();
            let doc = serde_json::json!({
                "spec": spec,
                "seed": seed,
                "build": build_id(),
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Read back the CSV body (skipping `#` lines) of a file written by `write_table`.
pub fn read_csv_table(text: &str) -> Result<Table> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let headers = rd.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(Table { headers, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["s", "value"]);
        t.push(["Id", "1"]);
        t.push(["s1", "-0.5"]);
        t
    }

    #[test]
    fn csv_round_trip_with_header_lines() {
        let mut buf = Vec::new();
        write_table(&mut buf, &serde_json::json!({"cmd": "weyl"}), 7, Format::Csv, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# spec: {\"cmd\":\"weyl\"}");
        assert_eq!(lines[1], "# seed: 7");
        assert!(lines[2].starts_with("# build: weylchamber"));
        assert_eq!(read_csv_table(&text).unwrap(), sample());
    }

    #[test]
    fn json_rows_are_flat_objects() {
        let mut buf = Vec::new();
        write_table(&mut buf, &Value::Null, 1, Format::Json, &sample()).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["seed"], 1);
        assert_eq!(v["rows"][1]["value"], -0.5);
        assert_eq!(v["rows"][0]["s"], "Id");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
