use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{Map, Number, Value as Json};
use sirsql::kernel::{RowSet, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    JsonLines,
}

pub fn write_rows(out: &mut dyn Write, rows: &RowSet, format: Format) -> io::Result<()> {
    match format {
        Format::Table => table(out, rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&rows.columns)?;
            for r in &rows.rows {
                w.write_record(r.iter().map(Value::to_string))?;
            }
            w.flush()
        }
        Format::JsonLines => {
            for r in &rows.rows {
                let obj: Map<String, Json> = rows.columns.iter().cloned().zip(r.iter().map(json)).collect();
                writeln!(out, "{}", Json::Object(obj))?;
            }
            Ok(())
        }
    }
}

fn json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Integer(i) => Json::from(*i),
        Value::Real(r) => Number::from_f64(*r).map(Json::Number).unwrap_or(Json::Null),
        Value::Text(t) => Json::String(t.clone()),
    }
}

fn table(out: &mut dyn Write, rows: &RowSet) -> io::Result<()> {
    let cells: Vec<Vec<String>> = rows.rows.iter().map(|r| r.iter().map(Value::to_string).collect()).collect();
    let mut widths: Vec<usize> = rows.columns.iter().map(|c| c.chars().count()).collect();
    for r in &cells {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |out: &mut dyn Write, items: &[String]| -> io::Result<()> {
        let padded: Vec<String> = items.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
        writeln!(out, "{}", padded.join(" | ").trim_end())
    };
    line(out, &rows.columns)?;
    writeln!(out, "{}", widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("-+-"))?;
    for r in &cells {
        line(out, r)?;
    }
    writeln!(out, "({} row{})", cells.len(), if cells.len() == 1 { "" } else { "s" })
}
