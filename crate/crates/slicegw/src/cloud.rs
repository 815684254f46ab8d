//! Point clouds as plain CSV: one point per row, comma-separated decimal
//! values, no header.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use slicegw_core::data::LabeledDataset;
use slicegw_core::geometry::PointCloud;

use crate::error::{Error, Result};

/// Parses a cloud from CSV text. `origin` names the source in errors.
pub fn parse_cloud(reader: impl Read, origin: &Path) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(origin, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Csv {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("ragged row: expected {d} values, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                path: origin.to_path_buf(),
                line,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv { path: origin.to_path_buf(), line, message: format!("non-finite value {field}") });
            }
            values.push(v);
        }
        rows += 1;
    }
    let Some(d) = dim else {
        return Err(Error::Csv { path: origin.to_path_buf(), line: 0, message: "no points".into() });
    };
    Ok(PointCloud::new(values, rows, d)?)
}

fn csv_error(origin: &Path, e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} values, found {len}")
        }
        _ => e.to_string(),
    };
    Error::Csv { path: origin.to_path_buf(), line, message }
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(file, path)
}

/// Writes each row with the shortest decimal form that round-trips.
pub fn write_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    write_rows(path.as_ref(), cloud.rows().map(|r| (r, None)))
}

/// Writes the features of `ds` followed by a label column.
pub fn write_labeled(path: impl AsRef<Path>, ds: &LabeledDataset) -> Result<()> {
    let f = ds.features();
    write_rows(path.as_ref(), (0..ds.len()).map(|i| (f.row(i), Some(ds.labels()[i]))))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = (&'a [f64], Option<usize>)>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        for (row, label) in rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{v:?}")?;
            }
            if let Some(l) = label {
                write!(w, ",{l}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
