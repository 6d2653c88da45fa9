//! Reading and writing expansions and raw samples.
//!
//! Expansion CSV:
//!
//! ```text
//! # spec {"kernel":"gaussian","sigma":0.5}
//! weight,x0,x1
//! 0.25,1.0,-2.0
//! ```
//!
//! A raw sample file holds one point per line, coordinates separated by commas
//! or whitespace. Blank lines and `#` comments are skipped, and a first line
//! that is not numeric is taken as a header.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::embedding::{embed_sample, WeightedExpansion};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::points::PointSet;

const SPEC_PREFIX: &str = "# spec ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

fn ser_err(context: impl std::fmt::Display) -> Error {
    Error::Serialization(context.to_string())
}

/// Shortest text that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_expansion_csv<W: Write>(mu: &WeightedExpansion, mut out: W) -> Result<()> {
    let spec = serde_json::to_string(mu.spec()).map_err(ser_err)?;
    writeln!(out, "{SPEC_PREFIX}{spec}").map_err(ser_err)?;
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["weight".to_string()];
    header.extend((0..mu.dim()).map(|k| format!("x{k}")));
    writer.write_record(&header).map_err(ser_err)?;
    for (w, p) in mu.weights().iter().zip(mu.points().iter()) {
        let mut row = vec![format_float(*w)];
        row.extend(p.iter().map(|v| format_float(*v)));
        writer.write_record(&row).map_err(ser_err)?;
    }
    writer.flush().map_err(ser_err)
}

pub fn read_expansion_csv<R: Read>(input: R) -> Result<WeightedExpansion> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(ser_err)?;
    let spec_text = first
        .trim_end()
        .strip_prefix(SPEC_PREFIX)
        .ok_or_else(|| ser_err("expansion CSV must start with a `# spec` line"))?;
    let spec: KernelSpec = serde_json::from_str(spec_text).map_err(ser_err)?;

    let mut csv_reader = csv::Reader::from_reader(reader);
    let dim = csv_reader
        .headers()
        .map_err(ser_err)?
        .len()
        .saturating_sub(1);
    if dim == 0 {
        return Err(ser_err(
            "expansion CSV needs a weight column and at least one coordinate",
        ));
    }
    let mut weights = Vec::new();
    let mut coords = Vec::new();
    for (row, record) in csv_reader.records().enumerate() {
        let record = record.map_err(ser_err)?;
        if record.len() != dim + 1 {
            return Err(ser_err(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                record.len(),
                dim + 1
            )));
        }
        let mut values = record.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| ser_err(format!("row {}: `{f}` is not a number", row + 1)))
        });
        weights.push(values.next().expect("non-empty record")?);
        for v in values {
            coords.push(v?);
        }
    }
    if weights.is_empty() {
        return Err(Error::EmptyInput("expansion CSV"));
    }
    WeightedExpansion::new(PointSet::new(dim, coords)?, weights, spec)
}

pub fn write_expansion_json<W: Write>(mu: &WeightedExpansion, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, mu).map_err(ser_err)
}

pub fn read_expansion_json<R: Read>(input: R) -> Result<WeightedExpansion> {
    serde_json::from_reader(input).map_err(ser_err)
}

/// Parse a raw sample, one point per line.
pub fn read_sample<R: Read>(input: R) -> Result<PointSet> {
    let reader = BufReader::new(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_line = false;
    for (number, line) in reader.lines().enumerate() {
        let line = line.map_err(ser_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if !seen_line => {}
            Err(_) => {
                return Err(ser_err(format!(
                    "line {}: non-numeric field in `{line}`",
                    number + 1
                )))
            }
        }
        seen_line = true;
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("sample file"));
    }
    PointSet::from_rows(&rows)
}

/// Contents of a file that is either a serialized expansion or a raw sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Expansion(WeightedExpansion),
    Sample(PointSet),
}

/// JSON by extension, expansion CSV by its `# spec` line, raw sample otherwise.
pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).map_err(|e| ser_err(format!("{}: {e}", path.display())))?;
    let located = |e: Error| ser_err(format!("{}: {e}", path.display()));
    if path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("json"))
    {
        return read_expansion_json(text.as_bytes())
            .map(Loaded::Expansion)
            .map_err(located);
    }
    if text.starts_with(SPEC_PREFIX) {
        return read_expansion_csv(text.as_bytes())
            .map(Loaded::Expansion)
            .map_err(located);
    }
    read_sample(text.as_bytes())
        .map(Loaded::Sample)
        .map_err(located)
}

/// Like [`load`], embedding a raw sample with uniform weights under `sample_spec`.
pub fn load_expansion(path: &Path, sample_spec: KernelSpec) -> Result<WeightedExpansion> {
    match load(path)? {
        Loaded::Expansion(mu) => Ok(mu),
        Loaded::Sample(points) => embed_sample(&points, sample_spec),
    }
}

pub fn save_expansion(path: &Path, mu: &WeightedExpansion, format: Format) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_expansion_csv(mu, &mut buf)?,
        Format::Json => write_expansion_json(mu, &mut buf)?,
    }
    fs::write(path, buf).map_err(|e| ser_err(format!("{}: {e}", path.display())))
}
