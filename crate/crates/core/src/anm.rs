//! Additive-noise-model inference of cause-effect direction.
//!
//! For a pair `(x, y)` both models `y = f(x) + u` and `x = g(y) + v` are
//! fitted by polynomial least squares. Each direction is scored by
//!
//! ```text
//! Δ = ‖ (1/m) Σᵢ Φ(effectᵢ) − (1/m²) Σᵢⱼ Φ(f(causeᵢ) + residⱼ) ‖²
//! ```
//!
//! The double sum pairs every fitted value with every residual, i.e. it embeds
//! `f(C) + U` under independence of `C` and `U`. Under an additive noise model
//! the forward score vanishes as `m` grows and the backward one does not. The
//! paired single sum `(1/m) Σᵢ Φ(f(causeᵢ) + residᵢ)` would reproduce the
//! effect sample exactly in both directions and cannot discriminate.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{clamp_distance, kernel_sum};
use crate::error::{Error, Result};
use crate::kernels::{median_heuristic, rff_build, Bandwidth, BandwidthRule, KernelSpec};
use crate::points::PointSet;

/// Fewest observations a pair may have (a degree-4 fit needs five).
pub const MIN_OBSERVATIONS: usize = 5;

/// Largest point set the median heuristic sees; larger unions are subsampled.
pub const BANDWIDTH_SUBSAMPLE: usize = 2000;

/// Largest reconstruction grid evaluated in exact mode.
pub const EXACT_GRID_CAP: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalDirection {
    #[serde(rename = "x->y")]
    XtoY,
    #[serde(rename = "y->x")]
    YtoX,
}

impl CausalDirection {
    pub fn reversed(self) -> Self {
        match self {
            CausalDirection::XtoY => CausalDirection::YtoX,
            CausalDirection::YtoX => CausalDirection::XtoY,
        }
    }
}

impl std::fmt::Display for CausalDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CausalDirection::XtoY => "x->y",
            CausalDirection::YtoX => "y->x",
        })
    }
}

impl std::str::FromStr for CausalDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x->y" => Ok(CausalDirection::XtoY),
            "y->x" => Ok(CausalDirection::YtoX),
            other => Err(Error::InvalidParameter(format!(
                "ground truth must be `x->y` or `y->x`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    XtoY,
    YtoX,
    Abstain,
}

impl Decision {
    pub fn direction(self) -> Option<CausalDirection> {
        match self {
            Decision::XtoY => Some(CausalDirection::XtoY),
            Decision::YtoX => Some(CausalDirection::YtoX),
            Decision::Abstain => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::XtoY => "x->y",
            Decision::YtoX => "y->x",
            Decision::Abstain => "abstain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub id: String,
    x: Vec<f64>,
    y: Vec<f64>,
    pub ground_truth: Option<CausalDirection>,
}

impl PairedSample {
    pub fn new(
        id: impl Into<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        ground_truth: Option<CausalDirection>,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.len() < MIN_OBSERVATIONS {
            return Err(Error::TooFewObservations {
                actual: x.len(),
                required: MIN_OBSERVATIONS,
            });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "pair contains non-finite values".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            x,
            y,
            ground_truth,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pair with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            id: self.id.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
            ground_truth: self.ground_truth.map(CausalDirection::reversed),
        }
    }
}

/// Least-squares polynomial in standardized coordinates:
/// `predict(x) = output_mean + output_scale · Σₖ cₖ zᵏ`, `z = (x − input_mean) / input_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    pub input_mean: f64,
    pub input_scale: f64,
    pub output_mean: f64,
    pub output_scale: f64,
}

impl PolyFit {
    /// A fixed polynomial `Σₖ cₖ xᵏ` in raw coordinates.
    pub fn from_monomial(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            input_mean: 0.0,
            input_scale: 1.0,
            output_mean: 0.0,
            output_scale: 1.0,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn predict(&self, x: f64) -> f64 {
        let z = (x - self.input_mean) / self.input_scale;
        let poly = self
            .coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * z + c);
        self.output_mean + self.output_scale * poly
    }
}

fn mean_and_scale(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
}

/// Ridge-regularized least squares (`ridge` acts in standardized
/// coordinates). With `ridge = 0` a rank-deficient design is an error.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize, ridge: f64) -> Result<PolyFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let cols = degree + 1;
    if x.len() < cols {
        return Err(Error::TooFewObservations {
            actual: x.len(),
            required: cols,
        });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    let (input_mean, input_scale) = mean_and_scale(x);
    let (output_mean, output_scale) = mean_and_scale(y);

    let n = x.len();
    let design = DMatrix::from_fn(n, cols, |i, k| {
        ((x[i] - input_mean) / input_scale).powi(k as i32)
    });
    let target = DVector::from_iterator(n, y.iter().map(|v| (v - output_mean) / output_scale));

    let svd = design.svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.iter().fold(0.0f64, |m, v| m.max(*v));
    let tol = (n.max(cols) as f64) * f64::EPSILON * s_max;
    let rank = s.iter().filter(|v| **v > tol).count();
    if ridge == 0.0 && rank < cols {
        return Err(Error::RankDeficient {
            rank,
            columns: cols,
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let projected = u.transpose() * target;
    let mut coeffs = DVector::zeros(cols);
    for (k, &sk) in s.iter().enumerate() {
        let factor = if ridge == 0.0 {
            if sk > tol {
                1.0 / sk
            } else {
                0.0
            }
        } else {
            sk / (sk * sk + ridge)
        };
        coeffs += v_t.row(k).transpose() * (factor * projected[k]);
    }
    Ok(PolyFit {
        coefficients: coeffs.iter().copied().collect(),
        input_mean,
        input_scale,
        output_mean,
        output_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `u = y − f(x)`
    Forward,
    /// `v = x − g(y)`
    Backward,
}

pub fn residuals(sample: &PairedSample, fit: &PolyFit, direction: Direction) -> Vec<f64> {
    let (cause, effect) = match direction {
        Direction::Forward => (sample.x(), sample.y()),
        Direction::Backward => (sample.y(), sample.x()),
    };
    cause
        .iter()
        .zip(effect)
        .map(|(&c, &e)| e - fit.predict(c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Full kernel double sums.
    Exact,
    /// Distances between mean random Fourier feature vectors with `features`
    /// frequencies.
    Rff { features: usize },
}

impl EstimatorMode {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorMode::Exact => "exact",
            EstimatorMode::Rff { .. } => "rff",
        }
    }
}

/// Bandwidth rule, estimator and seed for one Δ evaluation. The seed drives
/// both the bandwidth subsample and the Fourier frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaOptions {
    pub bandwidth: Bandwidth,
    pub mode: EstimatorMode,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaScore {
    pub delta: f64,
    pub sigma: f64,
}

/// Δ for the model `effect = fit(cause) + resid` with a Gaussian kernel.
pub fn anm_delta(
    cause: &[f64],
    effect: &[f64],
    fit: &PolyFit,
    resid: &[f64],
    options: &DeltaOptions,
) -> Result<DeltaScore> {
    if cause.is_empty() || resid.is_empty() || effect.is_empty() {
        return Err(Error::EmptyInput("anm sample"));
    }
    if cause.len() != effect.len() {
        return Err(Error::LengthMismatch {
            left: cause.len(),
            right: effect.len(),
        });
    }
    let fitted: Vec<f64> = cause.iter().map(|&c| fit.predict(c)).collect();

    let sigma = match options.bandwidth {
        Bandwidth::Fixed(s) => {
            KernelSpec::gaussian(s)?;
            s
        }
        Bandwidth::Rule(BandwidthRule::Median) => {
            let pool = bandwidth_pool(effect, &fitted, resid, options.seed);
            median_heuristic(&PointSet::from_scalars(pool)?)
                .map_err(|e| Error::DegenerateBandwidth(e.to_string()))?
        }
    };

    let raw = match options.mode {
        EstimatorMode::Exact => exact_delta(effect, &fitted, resid, sigma)?,
        EstimatorMode::Rff { features } => {
            rff_delta(effect, &fitted, resid, sigma, features, options.seed)?
        }
    };
    Ok(DeltaScore {
        delta: clamp_distance(raw)?,
        sigma,
    })
}

/// Effect values plus the reconstruction grid `fittedᵢ + residⱼ`, subsampled
/// without replacement to at most [`BANDWIDTH_SUBSAMPLE`] points.
fn bandwidth_pool(effect: &[f64], fitted: &[f64], resid: &[f64], seed: u64) -> Vec<f64> {
    let m = effect.len();
    let r = resid.len();
    let total = m + fitted.len() * r;
    let value = |k: usize| {
        if k < m {
            effect[k]
        } else {
            let g = k - m;
            fitted[g / r] + resid[g % r]
        }
    };
    if total <= BANDWIDTH_SUBSAMPLE {
        return (0..total).map(value).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut picks = index::sample(&mut rng, total, BANDWIDTH_SUBSAMPLE).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(value).collect()
}

fn exact_delta(effect: &[f64], fitted: &[f64], resid: &[f64], sigma: f64) -> Result<f64> {
    let grid_len = fitted.len().saturating_mul(resid.len());
    if grid_len > EXACT_GRID_CAP {
        return Err(Error::SizeCapExceeded {
            requested: grid_len,
            cap: EXACT_GRID_CAP,
        });
    }
    let spec = KernelSpec::gaussian(sigma)?;
    let grid: Vec<f64> = fitted
        .iter()
        .flat_map(|&f| resid.iter().map(move |&u| f + u))
        .collect();
    let effect_pts = PointSet::from_scalars(effect.to_vec())?;
    let grid_pts = PointSet::from_scalars(grid)?;
    let we = vec![1.0 / effect.len() as f64; effect.len()];
    let wg = vec![1.0 / grid_len as f64; grid_len];
    let ee = kernel_sum(&spec, &effect_pts, &we, &effect_pts, &we);
    let eg = kernel_sum(&spec, &effect_pts, &we, &grid_pts, &wg);
    let gg = kernel_sum(&spec, &grid_pts, &wg, &grid_pts, &wg);
    Ok(ee - 2.0 * eg + gg)
}

/// The grid mean factorizes over the two indices:
/// `mean cos(ω(a + u)) = C_a C_u − S_a S_u`, `mean sin(ω(a + u)) = S_a C_u + C_a S_u`.
fn rff_delta(
    effect: &[f64],
    fitted: &[f64],
    resid: &[f64],
    sigma: f64,
    features: usize,
    seed: u64,
) -> Result<f64> {
    let map = rff_build(sigma, features, 1, seed)?;
    let (ce, se) = map.cos_sin_means(effect)?;
    let (ca, sa) = map.cos_sin_means(fitted)?;
    let (cu, su) = map.cos_sin_means(resid)?;
    let sum: f64 = (0..features)
        .map(|k| {
            let grid_cos = ca[k] * cu[k] - sa[k] * su[k];
            let grid_sin = sa[k] * cu[k] + ca[k] * su[k];
            (ce[k] - grid_cos).powi(2) + (se[k] - grid_sin).powi(2)
        })
        .sum();
    Ok(sum / features as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnmConfig {
    pub degree: usize,
    /// Ridge of the polynomial fits, in standardized coordinates.
    pub fit_ridge: f64,
    pub bandwidth: Bandwidth,
    pub mode: EstimatorMode,
    /// Abstain whenever `|Δ_xy − Δ_yx| < abstain_margin`.
    pub abstain_margin: f64,
    /// Fit on even-indexed observations and score on the odd-indexed ones.
    pub split_fit: bool,
    pub seed: u64,
}

impl Default for AnmConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            fit_ridge: 0.0,
            bandwidth: Bandwidth::MEDIAN,
            mode: EstimatorMode::Rff { features: 100 },
            abstain_margin: 0.0,
            split_fit: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnmReport {
    pub pair_id: String,
    pub delta_xy: f64,
    pub delta_yx: f64,
    pub margin: f64,
    pub decision: Decision,
    pub estimator_mode: EstimatorMode,
    pub sigma_xy: f64,
    pub sigma_yx: f64,
    pub forward_fit: PolyFit,
    pub backward_fit: PolyFit,
    pub forward_residuals: Vec<f64>,
    pub backward_residuals: Vec<f64>,
    pub ground_truth: Option<CausalDirection>,
}

impl AnmReport {
    /// Direction a forced decision would pick, ignoring the abstain margin.
    pub fn forced_direction(&self) -> Option<CausalDirection> {
        decide(self.delta_xy, self.delta_yx, 0.0).direction()
    }

    pub fn correct(&self) -> Option<bool> {
        let truth = self.ground_truth?;
        Some(self.decision.direction() == Some(truth))
    }
}

/// `XtoY` when `Δ_xy < Δ_yx`, `YtoX` when greater, `Abstain` on ties or when
/// the scores are closer than `abstain_margin`.
pub fn decide(delta_xy: f64, delta_yx: f64, abstain_margin: f64) -> Decision {
    let margin = (delta_xy - delta_yx).abs();
    if margin < abstain_margin || delta_xy == delta_yx {
        Decision::Abstain
    } else if delta_xy < delta_yx {
        Decision::XtoY
    } else {
        Decision::YtoX
    }
}

struct DirectionScore {
    fit: PolyFit,
    resid: Vec<f64>,
    score: DeltaScore,
}

fn score_direction(cause: &[f64], effect: &[f64], config: &AnmConfig) -> Result<DirectionScore> {
    let options = DeltaOptions {
        bandwidth: config.bandwidth,
        mode: config.mode,
        seed: config.seed,
    };
    if config.split_fit {
        let (fit_c, score_c) = split_even_odd(cause);
        let (fit_e, score_e) = split_even_odd(effect);
        let fit = polyfit(&fit_c, &fit_e, config.degree, config.fit_ridge)?;
        let resid: Vec<f64> = score_c
            .iter()
            .zip(&score_e)
            .map(|(&c, &e)| e - fit.predict(c))
            .collect();
        let score = anm_delta(&score_c, &score_e, &fit, &resid, &options)?;
        Ok(DirectionScore { fit, resid, score })
    } else {
        let fit = polyfit(cause, effect, config.degree, config.fit_ridge)?;
        let resid: Vec<f64> = cause
            .iter()
            .zip(effect)
            .map(|(&c, &e)| e - fit.predict(c))
            .collect();
        let score = anm_delta(cause, effect, &fit, &resid, &options)?;
        Ok(DirectionScore { fit, resid, score })
    }
}

fn split_even_odd(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let even = v.iter().step_by(2).copied().collect();
    let odd = v.iter().skip(1).step_by(2).copied().collect();
    (even, odd)
}

/// Fit both directions, score them and decide.
pub fn infer_pair(sample: &PairedSample, config: &AnmConfig) -> Result<AnmReport> {
    if !(config.abstain_margin >= 0.0) {
        return Err(Error::InvalidParameter(
            "abstain margin must be >= 0".into(),
        ));
    }
    if config.split_fit && sample.len() < 2 * (config.degree + 1) {
        return Err(Error::TooFewObservations {
            actual: sample.len(),
            required: 2 * (config.degree + 1),
        });
    }
    let forward = score_direction(sample.x(), sample.y(), config)?;
    let backward = score_direction(sample.y(), sample.x(), config)?;
    let (delta_xy, delta_yx) = (forward.score.delta, backward.score.delta);
    Ok(AnmReport {
        pair_id: sample.id.clone(),
        delta_xy,
        delta_yx,
        margin: (delta_xy - delta_yx).abs(),
        decision: decide(delta_xy, delta_yx, config.abstain_margin),
        estimator_mode: config.mode,
        sigma_xy: forward.score.sigma,
        sigma_yx: backward.score.sigma,
        forward_fit: forward.fit,
        backward_fit: backward.fit,
        forward_residuals: forward.resid,
        backward_residuals: backward.resid,
        ground_truth: sample.ground_truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub decision_rate: f64,
    pub accuracy: f64,
}

/// Accuracy among the `k` pairs with the largest margin, for `k = n, …, 1`.
/// Equal margins are ordered by pair id. A pair with exactly equal scores
/// counts as a wrong forced decision.
pub fn accuracy_curve(reports: &[AnmReport]) -> Result<Vec<CurvePoint>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("reports"));
    }
    let mut order: Vec<&AnmReport> = reports.iter().collect();
    for r in &order {
        if r.ground_truth.is_none() {
            return Err(Error::InvalidParameter(format!(
                "pair `{}` has no ground truth",
                r.pair_id
            )));
        }
    }
    order.sort_by(|a, b| {
        b.margin
            .total_cmp(&a.margin)
            .then_with(|| a.pair_id.cmp(&b.pair_id))
    });
    let mut correct_prefix = Vec::with_capacity(order.len());
    let mut correct = 0usize;
    for r in &order {
        if r.forced_direction() == r.ground_truth {
            correct += 1;
        }
        correct_prefix.push(correct);
    }
    let n = order.len();
    Ok((1..=n)
        .rev()
        .map(|k| CurvePoint {
            decision_rate: k as f64 / n as f64,
            accuracy: correct_prefix[k - 1] as f64 / k as f64,
        })
        .collect())
}
