//! Sample file ingestion and persistence.
//!
//! Two formats are accepted: plain text with one nonnegative decimal per line
//! (blank lines and `#` comments ignored), and CSV with a header row, from
//! which one named column is read.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::transforms::SampleSet;

fn parse_value(raw: &str, line: usize) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::InvalidSample {
        line,
        reason: format!("cannot parse {:?} as a number", raw.trim()),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidSample {
            line,
            reason: format!("value {v} is not a finite nonnegative number"),
        });
    }
    Ok(v)
}

/// Reads the plain one-value-per-line format.
pub fn read_plain<R: Read>(reader: R) -> Result<SampleSet> {
    let mut values = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let body = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        if body.trim().is_empty() {
            continue;
        }
        values.push(parse_value(body, i + 1)?);
    }
    SampleSet::new(values)
}

/// Reads one column of a CSV file with a header row. Line numbers in errors
/// count the header as line 1.
pub fn read_csv_column<R: Read>(reader: R, column: &str) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::InvalidSample {
            line: 1,
            reason: format!("column {column:?} not found in CSV header"),
        })?;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw = record.get(idx).ok_or_else(|| Error::InvalidSample {
            line,
            reason: format!("missing column {column:?}"),
        })?;
        values.push(parse_value(raw, line)?);
    }
    SampleSet::new(values)
}

/// Reads a sample file; `column` selects CSV mode.
pub fn read_samples(path: &Path, column: Option<&str>) -> Result<SampleSet> {
    let file = File::open(path)?;
    match column {
        Some(col) => read_csv_column(file, col),
        None => read_plain(file),
    }
}

pub fn write_plain<W: Write>(mut out: W, samples: &SampleSet) -> Result<()> {
    for v in samples.values() {
        // shortest representation that round-trips
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

pub fn write_samples(path: &Path, samples: &SampleSet) -> Result<()> {
    let file = File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_plain(&mut out, samples)?;
    out.flush()?;
    Ok(())
}
