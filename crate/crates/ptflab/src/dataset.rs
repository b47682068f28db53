//! Example-set files: a one-line JSON header followed by CSV rows
//! `y_1,…,y_dim,b`.
//!
//! Floats are written in scientific notation with the shortest digit string
//! that round-trips, so write-then-read reproduces every example bit for bit
//! (including `-0.0`); non-finite values are rejected on both sides.

use crate::gadgets::LabeledExample;
use crate::gauss::RngSeed;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Cap on rows a single materialize call will write.
pub const MAX_MATERIALIZE: usize = 10_000_000;

/// First line of an example-set file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub dim: usize,
    pub seed: RngSeed,
    pub count: usize,
    /// Free-form description of the generating configuration.
    pub source: serde_json::Value,
}

fn validate(header: &DatasetHeader, examples: &[LabeledExample]) -> Result<()> {
    if header.count != examples.len() {
        return Err(Error::invalid(format!(
            "header count {} but {} examples",
            header.count,
            examples.len()
        )));
    }
    for (i, ex) in examples.iter().enumerate() {
        if ex.y.len() != header.dim {
            return Err(Error::DimensionMismatch { expected: header.dim, got: ex.y.len() });
        }
        if ex.b != 1 && ex.b != -1 {
            return Err(Error::invalid(format!("row {i}: label must be +1 or -1, got {}", ex.b)));
        }
        if let Some(bad) = ex.y.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {i}: non-finite coordinate {bad}")));
        }
    }
    Ok(())
}

/// Writes a validated example set to any sink.
pub fn write_to(w: &mut impl Write, header: &DatasetHeader, examples: &[LabeledExample]) -> Result<()> {
    validate(header, examples)?;
    let mut w = BufWriter::new(w);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    let mut line = String::new();
    for ex in examples {
        line.clear();
        for v in &ex.y {
            line.push_str(&format!("{v:e}"));
            line.push(',');
        }
        line.push_str(if ex.b > 0 { "1" } else { "-1" });
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_examples(
    path: &Path,
    header: &DatasetHeader,
    examples: &[LabeledExample],
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_to(&mut file, header, examples)
}

/// Reads and validates an example set from any source.
pub fn read_from(r: &mut impl Read) -> Result<(DatasetHeader, Vec<LabeledExample>)> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::invalid("empty example-set file"))??;
    let header: DatasetHeader = serde_json::from_str(&header_line)?;
    let mut examples = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut y = Vec::with_capacity(header.dim);
        let mut last: Option<&str> = None;
        for f in fields.by_ref() {
            if let Some(prev) = last.replace(f) {
                let v: f64 = prev
                    .parse()
                    .map_err(|_| Error::invalid(format!("row {i}: bad float '{prev}'")))?;
                y.push(v);
            }
        }
        let b_str = last.ok_or_else(|| Error::invalid(format!("row {i}: empty line body")))?;
        let b: i8 = b_str
            .parse()
            .map_err(|_| Error::invalid(format!("row {i}: bad label '{b_str}'")))?;
        if y.len() != header.dim {
            return Err(Error::invalid(format!(
                "row {i}: {} coordinates, header says {}",
                y.len(),
                header.dim
            )));
        }
        examples.push(LabeledExample::new(y, b)?);
    }
    validate(&header, &examples)?;
    Ok((header, examples))
}

pub fn read_examples(path: &Path) -> Result<(DatasetHeader, Vec<LabeledExample>)> {
    let mut file = std::fs::File::open(path)?;
    read_from(&mut file)
}

/// Materializes `count` examples from a lazy stream into a file, recording
/// the seed and source config in the header.
pub fn materialize(
    path: &Path,
    dim: usize,
    seed: RngSeed,
    source: serde_json::Value,
    stream: impl Iterator<Item = Result<LabeledExample>>,
    count: usize,
) -> Result<DatasetHeader> {
    if count > MAX_MATERIALIZE {
        return Err(Error::capacity(format!(
            "requested {count} rows, cap is {MAX_MATERIALIZE}"
        )));
    }
    let examples: Vec<LabeledExample> = stream.take(count).collect::<Result<_>>()?;
    if examples.len() < count {
        return Err(Error::invalid(format!(
            "stream ended after {} of {count} examples",
            examples.len()
        )));
    }
    let header = DatasetHeader { dim, seed, count, source };
    write_examples(path, &header, &examples)?;
    Ok(header)
}
