//! CSV ingestion and emission.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Cells treated as missing; their rows are dropped and reported.
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "NaN"];

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub data: Dataset,
    /// 1-based data rows (header excluded) dropped for missing cells.
    pub dropped_rows: Vec<usize>,
}

/// Reads a headed CSV file. Without `covariates`, every column except the
/// response is used, in file order.
pub fn load_csv(path: impl AsRef<Path>, response: &str, covariates: Option<&[String]>) -> Result<Loaded> {
    let file = File::open(path.as_ref())?;
    read_csv(file, response, covariates)
}

pub fn read_csv<R: Read>(reader: R, response: &str, covariates: Option<&[String]>) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Empty("file has no header".into()));
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(Error::InvalidArgument(format!("duplicate column `{h}`")));
        }
    }
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_col = find(response)?;
    let x_names: Vec<String> = match covariates {
        Some(c) => c.to_vec(),
        None => header.iter().filter(|h| *h != response).cloned().collect(),
    };
    if x_names.is_empty() {
        return Err(Error::Empty("no covariate columns".into()));
    }
    let x_cols = x_names.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut dropped = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let mut missing = false;
        let mut parse = |col: usize| -> Result<f64> {
            let cell = rec.get(col).unwrap_or("");
            if MISSING_TOKENS.contains(&cell) {
                missing = true;
                return Ok(f64::NAN);
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumeric {
                    row,
                    column: header[col].clone(),
                    value: cell.to_string(),
                }),
            }
        };
        let yv = parse(y_col)?;
        let xv = x_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        if missing {
            dropped.push(row);
            continue;
        }
        y.push(yv);
        x.extend(xv);
    }
    if y.is_empty() {
        return Err(Error::Empty(if dropped.is_empty() {
            "file has no data rows".into()
        } else {
            "every row has a missing cell".into()
        }));
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, x_names.len(), &x);
    let data = Dataset::with_response(x, DVector::from_vec(y), x_names, response.to_string())?;
    Ok(Loaded {
        data,
        dropped_rows: dropped,
    })
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Response first, then the covariates, full precision.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![data.response().to_string()];
    header.extend(data.labels().iter().cloned());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![fmt_f64(data.y()[i])];
        rec.extend((0..data.p()).map(|j| fmt_f64(data.x()[(i, j)])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes rows of a `Serialize` type as a headed CSV table.
pub fn write_rows<W: Write, T: Serialize>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
