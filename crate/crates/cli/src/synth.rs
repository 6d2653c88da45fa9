//! Synthetic convergence studies for propagated embeddings.
//!
//! Random streams are split by position: every quantity draws from a ChaCha8
//! generator seeded with `derive_seed_path(seed, path)`, where `path` names the
//! m value, the repetition and the role (estimator sample, proxy sample,
//! reduction). Changing one role never shifts the draws of another.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use kernel_rv::io::format_float;
use kernel_rv::propagate::PointFunction;
use kernel_rv::seeding::derive_seed_path;
use kernel_rv::{
    apply_binary, apply_paired, builtins, embed_sample, median_heuristic, mmd_sq, reduce_random,
    KernelSpec, PointSet, Ridge, WeightedExpansion,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Samples closer than this to a singular input are redrawn.
pub const GUARD_TOLERANCE: f64 = 1e-6;

/// Ridge of the reduced-set refit for the second estimator: 1% of the
/// Gaussian Gram diagonal. Near-interpolating refits produce large
/// alternating coefficients that `pow` amplifies without bound.
pub const REDUCTION_RIDGE: f64 = 1e-2;

const MAX_REDRAWS: usize = 10_000;

const ROLE_SAMPLE: usize = 0;
const ROLE_PROXY: usize = 1;
const ROLE_REDUCE_X: usize = 2;
const ROLE_REDUCE_Y: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Add,
    Mul,
    Div,
    Pow,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Add => "add",
            Operation::Mul => "mul",
            Operation::Div => "div",
            Operation::Pow => "pow",
        }
    }

    pub fn function(self) -> PointFunction {
        match self {
            Operation::Add => builtins::add(),
            Operation::Mul => builtins::mul(),
            Operation::Div => builtins::div(),
            Operation::Pow => builtins::pow(),
        }
    }

    fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            Operation::Add => x + y,
            Operation::Mul => x * y,
            Operation::Div => x / y,
            Operation::Pow => x.powf(y),
        }
    }

    fn rejects_x(self, x: f64) -> bool {
        self == Operation::Pow && x <= GUARD_TOLERANCE
    }

    fn rejects_y(self, y: f64) -> bool {
        self == Operation::Div && y.abs() <= GUARD_TOLERANCE
    }
}

impl FromStr for Operation {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Operation::Add),
            "mul" => Ok(Operation::Mul),
            "div" => Ok(Operation::Div),
            "pow" => Ok(Operation::Pow),
            other => Err(CliError::Input(format!("unknown operation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Full product grid of both samples.
    Mu1,
    /// Product grid of reduced-set approximations of both inputs.
    Mu2,
    /// Paired single sum.
    Mu3,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mu1, Estimator::Mu2, Estimator::Mu3];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mu1 => "mu1",
            Estimator::Mu2 => "mu2",
            Estimator::Mu3 => "mu3",
        }
    }
}

impl FromStr for Estimator {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Input(format!("unknown estimator `{s}`")))
    }
}

/// Independent normal inputs `X ~ N(mean_x, var_x)`, `Y ~ N(mean_y, var_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputLaw {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_y: f64,
    pub var_y: f64,
}

impl Default for InputLaw {
    fn default() -> Self {
        Self {
            mean_x: 3.0,
            var_x: 0.5,
            mean_y: 4.0,
            var_y: 0.5,
        }
    }
}

impl InputLaw {
    fn validate(&self) -> Result<()> {
        let ok = [self.mean_x, self.mean_y].iter().all(|v| v.is_finite())
            && [self.var_x, self.var_y]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(CliError::Input(
                "input means must be finite and variances positive".into(),
            ))
        }
    }

    fn normals(&self) -> (Normal<f64>, Normal<f64>) {
        (
            Normal::new(self.mean_x, self.var_x.sqrt()).expect("validated"),
            Normal::new(self.mean_y, self.var_y.sqrt()).expect("validated"),
        )
    }

    /// `n` draws of `X` and `n` of `Y`, redrawing values in the guard region
    /// of `op`.
    fn draw(&self, op: Operation, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (nx, ny) = self.normals();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut guarded = |dist: &Normal<f64>, reject: &dyn Fn(f64) -> bool| -> Result<f64> {
            for _ in 0..MAX_REDRAWS {
                let v = dist.sample(&mut rng);
                if !reject(v) {
                    return Ok(v);
                }
            }
            Err(CliError::Input(format!(
                "could not draw a valid `{}` input in {MAX_REDRAWS} attempts",
                op.as_str()
            )))
        };
        let xs = (0..n)
            .map(|_| guarded(&nx, &|v| op.rejects_x(v)))
            .collect::<Result<Vec<_>>>()?;
        let ys = (0..n)
            .map(|_| guarded(&ny, &|v| op.rejects_y(v)))
            .collect::<Result<Vec<_>>>()?;
        Ok((xs, ys))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub operation: Operation,
    pub inputs: InputLaw,
    pub m_values: Vec<usize>,
    /// Sample size ℓ of the product-grid proxy for the true embedding.
    pub proxy_size: usize,
    pub repetitions: usize,
    /// Reduced-set size for the second estimator, as a fraction of m.
    pub reduced_fraction: f64,
    pub ridge: Ridge,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            operation: Operation::Mul,
            inputs: InputLaw::default(),
            m_values: vec![10, 20, 30, 40, 50],
            proxy_size: 100,
            repetitions: 30,
            reduced_fraction: 0.4,
            ridge: Ridge::Value(REDUCTION_RIDGE),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.inputs.validate()?;
        let largest = self
            .m_values
            .iter()
            .copied()
            .max()
            .ok_or_else(|| CliError::Input("no sample sizes given".into()))?;
        if self.m_values.contains(&0) {
            return Err(CliError::Input("sample sizes must be positive".into()));
        }
        if self.proxy_size < largest {
            return Err(CliError::Input(format!(
                "proxy size {} is below the largest sample size {largest}",
                self.proxy_size
            )));
        }
        if self.repetitions == 0 {
            return Err(CliError::Input(
                "at least one repetition is required".into(),
            ));
        }
        if !(self.reduced_fraction > 0.0 && self.reduced_fraction <= 1.0) {
            return Err(CliError::Input(
                "reduced fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// `⌈fraction · m⌉`, at least 1.
    pub fn reduced_size(&self, m: usize) -> usize {
        ((self.reduced_fraction * m as f64).ceil() as usize).clamp(1, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub operation: Operation,
    pub estimator: Estimator,
    pub m: usize,
    pub repetition: usize,
    /// Squared RKHS distance to the proxy embedding.
    pub loss: f64,
    /// Time spent building the estimate; not part of the default CSV output.
    pub wall_time: Duration,
}

fn uniform_embedding(values: Vec<f64>, spec: KernelSpec) -> Result<WeightedExpansion> {
    Ok(embed_sample(&PointSet::from_scalars(values)?, spec)?)
}

fn sample_bandwidth_spec(values: &[f64]) -> Result<KernelSpec> {
    let sigma = median_heuristic(&PointSet::from_scalars(values.to_vec())?)?;
    Ok(KernelSpec::gaussian(sigma)?)
}

/// Every (m, repetition, estimator) loss, sorted by m, then repetition, then
/// estimator.
pub fn run_synth(config: &SynthConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let op = config.operation;
    let f = op.function();
    let mut records = Vec::with_capacity(config.m_values.len() * config.repetitions * 3);
    for &m in &config.m_values {
        for rep in 0..config.repetitions {
            let seed_for = |role: usize| derive_seed_path(config.seed, &[m, rep, role]);

            let (px, py) = config
                .inputs
                .draw(op, config.proxy_size, seed_for(ROLE_PROXY))?;
            let proxy_grid = apply_binary(
                &uniform_embedding(px.clone(), KernelSpec::Linear)?,
                &uniform_embedding(py, KernelSpec::Linear)?,
                &f,
                KernelSpec::Linear,
            )?;
            let spec = KernelSpec::gaussian(median_heuristic(proxy_grid.points())?)?;
            let proxy = proxy_grid.with_spec(spec)?;

            let (xs, ys) = config.inputs.draw(op, m, seed_for(ROLE_SAMPLE))?;
            for estimator in Estimator::ALL {
                let start = Instant::now();
                let estimate = match estimator {
                    Estimator::Mu1 => apply_binary(
                        &uniform_embedding(xs.clone(), spec)?,
                        &uniform_embedding(ys.clone(), spec)?,
                        &f,
                        spec,
                    )?,
                    Estimator::Mu2 => {
                        let target = config.reduced_size(m);
                        let mu_x = uniform_embedding(xs.clone(), sample_bandwidth_spec(&xs)?)?;
                        let mu_y = uniform_embedding(ys.clone(), sample_bandwidth_spec(&ys)?)?;
                        let rx =
                            reduce_random(&mu_x, target, config.ridge, seed_for(ROLE_REDUCE_X))?;
                        let ry =
                            reduce_random(&mu_y, target, config.ridge, seed_for(ROLE_REDUCE_Y))?;
                        apply_binary(&rx.reduced, &ry.reduced, &f, spec)?
                    }
                    Estimator::Mu3 => apply_paired(
                        &PointSet::from_scalars(xs.clone())?,
                        &PointSet::from_scalars(ys.clone())?,
                        &f,
                        spec,
                    )?,
                };
                let wall_time = start.elapsed();
                records.push(RunRecord {
                    operation: op,
                    estimator,
                    m,
                    repetition: rep,
                    loss: mmd_sq(&estimate, &proxy)?,
                    wall_time,
                });
            }
        }
    }
    records.sort_by_key(|r| (r.m, r.repetition, r.estimator));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub operation: Operation,
    pub estimator: Estimator,
    pub m: usize,
    pub mean_loss: f64,
    /// Sample standard deviation across repetitions (0 for one repetition).
    pub std_loss: f64,
    pub repetitions: usize,
}

/// Mean and standard deviation of the loss per (operation, estimator, m).
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(&str, Estimator, usize), (Operation, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for r in records {
        groups
            .entry((r.operation.as_str(), r.estimator, r.m))
            .or_insert_with(|| (r.operation, Vec::new()))
            .1
            .push(r.loss);
    }
    groups
        .into_iter()
        .map(|((_, estimator, m), (operation, losses))| {
            let n = losses.len() as f64;
            let mean = losses.iter().sum::<f64>() / n;
            let std = if losses.len() > 1 {
                (losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                operation,
                estimator,
                m,
                mean_loss: mean,
                std_loss: std,
                repetitions: losses.len(),
            }
        })
        .collect()
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(e.to_string())
}

pub fn write_runs_csv<W: Write>(records: &[RunRecord], out: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["operation", "estimator", "m", "rep", "loss"];
    if with_timing {
        header.push("wall_time_s");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.operation.as_str().to_string(),
            r.estimator.as_str().to_string(),
            r.m.to_string(),
            r.repetition.to_string(),
            format_float(r.loss),
        ];
        if with_timing {
            row.push(format_float(r.wall_time.as_secs_f64()));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

/// Parse the output of [`write_runs_csv`] (timing column optional).
pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let field = |k: usize| {
            row.get(k)
                .ok_or_else(|| CliError::Input(format!("runs row {}: missing column {k}", i + 1)))
        };
        let number = |k: usize| -> Result<f64> {
            field(k)?.parse::<f64>().map_err(|_| {
                CliError::Input(format!("runs row {}: column {k} is not a number", i + 1))
            })
        };
        let count = |k: usize| -> Result<usize> {
            field(k)?.parse::<usize>().map_err(|_| {
                CliError::Input(format!("runs row {}: column {k} is not an integer", i + 1))
            })
        };
        let wall = if row.len() > 5 { number(5)? } else { 0.0 };
        records.push(RunRecord {
            operation: field(0)?.parse()?,
            estimator: field(1)?.parse()?,
            m: count(2)?,
            repetition: count(3)?,
            loss: number(4)?,
            wall_time: Duration::from_secs_f64(wall.max(0.0)),
        });
    }
    Ok(records)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "operation",
        "estimator",
        "m",
        "mean_loss",
        "std_loss",
        "repetitions",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.operation.as_str().to_string(),
            r.estimator.as_str().to_string(),
            r.m.to_string(),
            format_float(r.mean_loss),
            format_float(r.std_loss),
            r.repetitions.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

/// Error of the full product-grid estimator against a large i.i.d. reference
/// sample of `f(X, Y)`, averaged over independent seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub operation: Operation,
    pub inputs: InputLaw,
    pub m_values: Vec<usize>,
    pub seeds: usize,
    pub reference_size: usize,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            operation: Operation::Add,
            inputs: InputLaw::default(),
            m_values: vec![10, 20, 40, 80, 160],
            seeds: 30,
            reference_size: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub m: usize,
    pub mean_loss: f64,
}

pub fn run_convergence(config: &ConvergenceConfig) -> Result<Vec<ConvergencePoint>> {
    config.inputs.validate()?;
    if config.seeds == 0
        || config.m_values.is_empty()
        || config.m_values.contains(&0)
        || config.reference_size < 2
    {
        return Err(CliError::Input(
            "convergence study needs seeds, positive sizes and a reference".into(),
        ));
    }
    let op = config.operation;
    let f = op.function();
    let mut totals = vec![0.0; config.m_values.len()];
    for s in 0..config.seeds {
        let (rx, ry) = config.inputs.draw(
            op,
            config.reference_size,
            derive_seed_path(config.seed, &[s, ROLE_PROXY]),
        )?;
        let reference: Vec<f64> = rx.iter().zip(&ry).map(|(x, y)| op.apply(*x, *y)).collect();
        let spec = sample_bandwidth_spec(&reference)?;
        let reference = uniform_embedding(reference, spec)?;
        for (k, &m) in config.m_values.iter().enumerate() {
            let (xs, ys) =
                config
                    .inputs
                    .draw(op, m, derive_seed_path(config.seed, &[s, m, ROLE_SAMPLE]))?;
            let estimate = apply_binary(
                &uniform_embedding(xs, spec)?,
                &uniform_embedding(ys, spec)?,
                &f,
                spec,
            )?;
            totals[k] += mmd_sq(&estimate, &reference)?;
        }
    }
    Ok(config
        .m_values
        .iter()
        .zip(totals)
        .map(|(&m, total)| ConvergencePoint {
            m,
            mean_loss: total / config.seeds as f64,
        })
        .collect())
}

/// Least-squares slope of `log(mean_loss)` against `log(m)`.
pub fn log_log_slope(points: &[ConvergencePoint]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|p| !(p.mean_loss > 0.0)) {
        return Err(CliError::Input(
            "slope needs two or more positive losses".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.m as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_loss.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(op: Operation) -> SynthConfig {
        SynthConfig {
            operation: op,
            m_values: vec![5, 10],
            proxy_size: 20,
            repetitions: 2,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn output_shape_and_order() {
        let records = run_synth(&small_config(Operation::Mul)).unwrap();
        assert_eq!(records.len(), 2 * 2 * 3);
        let keys: Vec<_> = records
            .iter()
            .map(|r| (r.m, r.repetition, r.estimator))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(records.iter().all(|r| r.loss >= 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(Operation::Div);
        c.proxy_size = 8;
        assert!(run_synth(&c).is_err());
        let mut c = small_config(Operation::Div);
        c.repetitions = 0;
        assert!(run_synth(&c).is_err());
        let mut c = small_config(Operation::Div);
        c.inputs.var_x = 0.0;
        assert!(run_synth(&c).is_err());
        assert_eq!(SynthConfig::default().reduced_size(10), 4);
        assert_eq!(SynthConfig::default().reduced_size(11), 5);
    }

    #[test]
    fn guard_region_is_redrawn() {
        let law = InputLaw {
            mean_x: 0.0,
            var_x: 1.0,
            mean_y: 0.0,
            var_y: 1e-14,
        };
        let (_, ys) = law.draw(Operation::Add, 10, 1).unwrap();
        assert!(ys.iter().any(|y| y.abs() <= GUARD_TOLERANCE));
        assert!(law.draw(Operation::Div, 10, 1).is_err());
        let (xs, _) = law.draw(Operation::Pow, 200, 1).unwrap();
        assert!(xs.iter().all(|x| *x > GUARD_TOLERANCE));
    }

    #[test]
    fn csv_round_trip_and_summary() {
        let records = run_synth(&small_config(Operation::Pow)).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&records, &mut buf, false).unwrap();
        let back = read_runs_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            assert_eq!(
                (a.m, a.repetition, a.estimator, a.loss),
                (b.m, b.repetition, b.estimator, b.loss)
            );
        }
        let summary = summarize(&records);
        assert_eq!(summary.len(), 6);
        let mu1_5: Vec<f64> = records
            .iter()
            .filter(|r| r.m == 5 && r.estimator == Estimator::Mu1)
            .map(|r| r.loss)
            .collect();
        let row = summary
            .iter()
            .find(|r| r.m == 5 && r.estimator == Estimator::Mu1)
            .unwrap();
        let mean = (mu1_5[0] + mu1_5[1]) / 2.0;
        assert!((row.mean_loss - mean).abs() < 1e-15);
        assert!((row.std_loss - (mu1_5[0] - mu1_5[1]).abs() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<ConvergencePoint> = [10, 20, 40]
            .iter()
            .map(|&m| ConvergencePoint {
                m,
                mean_loss: 3.0 / m as f64,
            })
            .collect();
        assert!((log_log_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
    }
}
