//! `id,label,f_1,...,f_d` text format.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same `f32` (scientific notation for very large or small magnitudes), so a
//! write followed by a read reproduces every bit pattern.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::store::{Dataset, EmbeddingRecord};

pub fn read_csv(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(BufReader::new(file), expected_dim).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_csv<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<Dataset> {
    let mut dataset: Option<Dataset> = None;
    let mut first_content_line = true;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(id), Some(label)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected `id,label,f_1,...,f_d`".into(),
            });
        };
        let raw: Vec<&str> = fields.collect();
        if raw.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "record has no feature columns".into(),
            });
        }

        if std::mem::take(&mut first_content_line) && raw[0].trim().parse::<f32>().is_err() {
            // header row
            continue;
        }

        let mut vector = Vec::with_capacity(raw.len());
        for field in &raw {
            let value = field.trim().parse::<f32>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid float {field:?}"),
            })?;
            vector.push(value);
        }

        let ds = match dataset.as_mut() {
            Some(ds) => ds,
            None => {
                let dim = vector.len();
                if let Some(expected) = expected_dim {
                    if expected != dim {
                        return Err(Error::DimensionMismatch {
                            id: id.to_owned(),
                            expected,
                            found: dim,
                        });
                    }
                }
                dataset.insert(Dataset::new(dim)?)
            }
        };
        ds.push(EmbeddingRecord::new(id, label, vector))?;
    }

    dataset.ok_or(Error::EmptyInput)
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv_to(dataset, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, out: &mut W) -> std::io::Result<()> {
    for record in dataset.records() {
        write!(out, "{},{}", record.id, record.label)?;
        for x in &record.vector {
            write!(out, ",{x:?}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
