//! CSV and JSON encodings of states and experiment tables.
//!
//! Floats are written in their shortest round-trip decimal form, so reading a
//! file back reproduces every bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{GridFunction1D, SeqVector};

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {line}: '{s}': {e}")))
}

/// Column-labelled numeric table written as CSV with a header row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.headers)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(|&v| fmt_f64(v)))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Table> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut t = Table { headers, rows: Vec::new() };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec.iter().map(|s| parse_f64(s, i + 2)).collect::<Result<Vec<_>>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }
}

pub fn grid_to_csv(g: &GridFunction1D) -> Result<String> {
    let mut t = Table::new(["x", "value"]);
    for (k, &v) in g.values().iter().enumerate() {
        t.push(vec![g.x(k), v]);
    }
    t.to_csv_string()
}

/// Reads a grid function; the window is taken from the first and last `x`.
pub fn grid_from_csv(s: &str) -> Result<GridFunction1D> {
    let t = Table::read_csv(s.as_bytes())?;
    if t.headers != ["x", "value"] {
        return Err(Error::Parse(format!("expected header x,value, got {:?}", t.headers)));
    }
    let (first, last) = match (t.rows.first(), t.rows.last()) {
        (Some(f), Some(l)) => (f[0], l[0]),
        _ => return Err(Error::Parse("empty grid table".into())),
    };
    GridFunction1D::new(first, last, t.rows.iter().map(|r| r[1]).collect())
}

pub fn seq_to_csv(s: &SeqVector) -> Result<String> {
    let mut t = Table::new(["index", "value"]);
    for (k, &v) in s.values().iter().enumerate() {
        t.push(vec![k as f64, v]);
    }
    t.to_csv_string()
}

pub fn seq_from_csv(s: &str) -> Result<SeqVector> {
    let t = Table::read_csv(s.as_bytes())?;
    if t.headers != ["index", "value"] {
        return Err(Error::Parse(format!("expected header index,value, got {:?}", t.headers)));
    }
    for (k, r) in t.rows.iter().enumerate() {
        if r[0] != k as f64 {
            return Err(Error::Parse(format!("row {}: index {} out of order", k + 2, r[0])));
        }
    }
    SeqVector::new(t.rows.iter().map(|r| r[1]).collect())
}
