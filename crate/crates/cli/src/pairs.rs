//! Cause-effect pair files, metadata and the benchmark runner.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kernel_rv::anm::MIN_OBSERVATIONS;
use kernel_rv::anm::{
    accuracy_curve, infer_pair, AnmConfig, AnmReport, CausalDirection, CurvePoint, PairedSample,
};
use kernel_rv::io::format_float;
use kernel_rv::seeding::derive_seed_label;

use crate::error::{CliError, Result};

const PAIR_EXTENSIONS: [&str; 4] = ["", "txt", "dat", "csv"];

/// Read the first two whitespace-separated columns of a pair file. Blank
/// lines are skipped and further columns are ignored. The pair id is the
/// file stem.
pub fn ingest_pair_file(path: &Path) -> Result<PairedSample> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(first) = fields.next() else { continue };
        let parse_error = |message: String| CliError::Parse {
            file: path.to_path_buf(),
            line: index + 1,
            message,
        };
        let second = fields
            .next()
            .ok_or_else(|| parse_error("expected at least two columns".into()))?;
        let value = |field: &str| {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(format!("`{field}` is not a finite number")))
        };
        x.push(value(first)?);
        y.push(value(second)?);
        for extra in fields {
            value(extra)?;
        }
    }
    if x.len() < MIN_OBSERVATIONS {
        return Err(CliError::TooFewRows {
            file: path.to_path_buf(),
            rows: x.len(),
            required: MIN_OBSERVATIONS,
        });
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(PairedSample::new(id, x, y, None)?)
}

/// `pair_id,ground_truth` rows with ground truth `x->y` or `y->x`.
pub fn read_metadata(path: &Path) -> Result<Vec<(String, CausalDirection)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Metadata(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Metadata(format!("{}: {e}", path.display())))?
        .clone();
    if headers.get(0) != Some("pair_id") || headers.get(1) != Some("ground_truth") {
        return Err(CliError::Metadata(format!(
            "{}: header must be `pair_id,ground_truth`",
            path.display()
        )));
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Metadata(format!("{}: {e}", path.display())))?;
        let line = i + 2;
        let id = record.get(0).unwrap_or_default().to_string();
        let truth: CausalDirection =
            record
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|e| CliError::Parse {
                    file: path.to_path_buf(),
                    line,
                    message: format!("{e}"),
                })?;
        if id.is_empty() || !seen.insert(id.clone()) {
            return Err(CliError::Metadata(format!(
                "{}:{line}: empty or duplicate pair id `{id}`",
                path.display()
            )));
        }
        rows.push((id, truth));
    }
    Ok(rows)
}

/// `dir/id`, `dir/id.txt`, `dir/id.dat` or `dir/id.csv`, whichever exists first.
pub fn locate_pair_file(dir: &Path, id: &str) -> Result<PathBuf> {
    PAIR_EXTENSIONS
        .iter()
        .map(|ext| {
            if ext.is_empty() {
                dir.join(id)
            } else {
                dir.join(format!("{id}.{ext}"))
            }
        })
        .find(|p| p.is_file())
        .ok_or_else(|| CliError::Metadata(format!("no pair file for `{id}` in {}", dir.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairsOutcome {
    pub reports: Vec<AnmReport>,
    pub curve: Vec<CurvePoint>,
}

impl PairsOutcome {
    pub fn correct_count(&self) -> usize {
        self.reports
            .iter()
            .filter(|r| r.correct() == Some(true))
            .count()
    }

    /// Accuracy at full decision rate.
    pub fn full_rate_accuracy(&self) -> f64 {
        self.curve.first().map_or(0.0, |p| p.accuracy)
    }
}

/// Infer every sample with a per-pair seed derived from `config.seed` and the
/// pair id, then build the accuracy curve.
pub fn run_samples(samples: &[PairedSample], config: &AnmConfig) -> Result<PairsOutcome> {
    let reports = samples
        .iter()
        .map(|s| {
            let seeded = AnmConfig {
                seed: derive_seed_label(config.seed, &s.id),
                ..*config
            };
            infer_pair(s, &seeded).map_err(|source| CliError::Pair {
                id: s.id.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = accuracy_curve(&reports)?;
    Ok(PairsOutcome { reports, curve })
}

/// Run every pair listed in `meta`, in metadata order.
pub fn run_pairs(dir: &Path, meta: &Path, config: &AnmConfig) -> Result<PairsOutcome> {
    let rows = read_metadata(meta)?;
    if rows.is_empty() {
        return Err(CliError::Metadata(format!(
            "{} lists no pairs",
            meta.display()
        )));
    }
    let samples = rows
        .iter()
        .map(|(id, truth)| {
            let mut sample = ingest_pair_file(&locate_pair_file(dir, id)?)?;
            sample.id = id.clone();
            sample.ground_truth = Some(*truth);
            Ok(sample)
        })
        .collect::<Result<Vec<_>>>()?;
    run_samples(&samples, config)
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn write_reports_csv<W: Write>(reports: &[AnmReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "pair_id", "delta_xy", "delta_yx", "margin", "decision", "correct",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let correct = match r.correct() {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        w.write_record([
            r.pair_id.as_str(),
            &format_float(r.delta_xy),
            &format_float(r.delta_yx),
            &format_float(r.margin),
            r.decision.as_str(),
            correct,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["decision_rate", "accuracy"])
        .map_err(csv_err)?;
    for p in curve {
        w.write_record([format_float(p.decision_rate), format_float(p.accuracy)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
