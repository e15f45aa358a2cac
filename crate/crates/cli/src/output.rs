use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    #[value(name = "json-text")]
    Json,
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Round every float in `v` to 12 significant digits. Non-finite values
/// become strings since JSON has no representation for them.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            Number::from_f64(round12(x)).map_or_else(|| Value::String(x.to_string()), Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

pub fn float(x: f64) -> Value {
    Number::from_f64(round12(x)).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn columns(rows: &[Value]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        if let Value::Object(m) = r {
            for k in m.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    cols
}

fn row_cells(cols: &[String], r: &Value) -> Vec<String> {
    cols.iter()
        .map(|c| r.get(c).map(cell).unwrap_or_default())
        .collect()
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header);
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn object_table(m: &Map<String, Value>) -> String {
    let w = m.keys().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in m {
        out.push_str(&format!("{k:<w$}  {}\n", cell(v)));
    }
    out
}

/// Render an already-rounded result. Objects print one field per line in
/// table form and a header plus one row in CSV; arrays of objects print as
/// one row per element.
pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("value serializes");
            s.push('\n');
            s
        }
        Format::Table | Format::Csv => {
            let (header, rows): (Vec<String>, Vec<Vec<String>>) = match v {
                Value::Array(items) => {
                    let cols = columns(items);
                    let rows = items.iter().map(|r| row_cells(&cols, r)).collect();
                    (cols, rows)
                }
                Value::Object(m) if format == Format::Table => return object_table(m),
                Value::Object(m) => (m.keys().cloned().collect(), vec![m.values().map(cell).collect()]),
                other => (vec!["value".into()], vec![vec![cell(other)]]),
            };
            if format == Format::Csv {
                csv_text(&header, &rows)
            } else {
                aligned(&header, &rows)
            }
        }
    }
}
