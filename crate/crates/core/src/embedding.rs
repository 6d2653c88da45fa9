//! Kernel mean estimates as weighted expansions `Σₖ γₖ Φ(zₖ)`.
//!
//! The feature map is never materialized: every quantity is expressed through
//! kernel evaluations between expansion points. Weights may be negative and
//! need not sum to one, which is what reduced-set fits produce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_transform::GaussTransform;
use crate::kernels::KernelSpec;
use crate::points::PointSet;

/// Below this many kernel evaluations the direct double loop is used.
const FAST_TRANSFORM_MIN_PAIRS: usize = 1 << 16;

/// Values of `mmd_sq` in `[-NEGATIVE_FLOOR, 0)` are rounding noise.
pub const NEGATIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExpansion", into = "RawExpansion")]
pub struct WeightedExpansion {
    points: PointSet,
    weights: Vec<f64>,
    spec: KernelSpec,
}

impl WeightedExpansion {
    pub fn new(points: PointSet, weights: Vec<f64>, spec: KernelSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("expansion points"));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite weight {w}")));
        }
        spec.validate()?;
        Ok(Self {
            points,
            weights,
            spec,
        })
    }

    /// Single point with weight one: the embedding of a degenerate distribution.
    pub fn point_mass(point: &[f64], spec: KernelSpec) -> Result<Self> {
        Self::new(PointSet::new(point.len(), point.to_vec())?, vec![1.0], spec)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn with_spec(self, spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, ..self })
    }

    pub fn into_parts(self) -> (PointSet, Vec<f64>, KernelSpec) {
        (self.points, self.weights, self.spec)
    }

    /// `self + scale · other`, concatenating expansion points.
    pub fn add_scaled(&self, other: &WeightedExpansion, scale: f64) -> Result<Self> {
        check_compatible(self, other)?;
        let mut points = self.points.clone();
        points.extend(&other.points);
        let weights = self
            .weights
            .iter()
            .copied()
            .chain(other.weights.iter().map(|w| w * scale))
            .collect();
        Self::new(points, weights, self.spec)
    }

    /// Merge exactly duplicated points, summing their weights. Output order
    /// follows first occurrence.
    pub fn canonicalize(&self) -> Self {
        use std::collections::HashMap;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut points = PointSet::empty(self.dim());
        let mut weights = Vec::new();
        for (p, &w) in self.points.iter().zip(&self.weights) {
            // +0.0 and -0.0 are the same point
            let key: Vec<u64> = p.iter().map(|c| (c + 0.0).to_bits()).collect();
            match index.get(&key) {
                Some(&k) => weights[k] += w,
                None => {
                    index.insert(key, weights.len());
                    points.push(p);
                    weights.push(w);
                }
            }
        }
        Self {
            points,
            weights,
            spec: self.spec,
        }
    }
}

/// Uniform weights `1/m` over the sample.
pub fn embed_sample(sample: &PointSet, spec: KernelSpec) -> Result<WeightedExpansion> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("sample"));
    }
    let w = 1.0 / sample.len() as f64;
    WeightedExpansion::new(sample.clone(), vec![w; sample.len()], spec)
}

fn check_compatible(a: &WeightedExpansion, b: &WeightedExpansion) -> Result<()> {
    if a.spec != b.spec {
        return Err(Error::KernelMismatch {
            left: a.spec.to_string(),
            right: b.spec.to_string(),
        });
    }
    a.points.check_dim(b.dim())
}

/// `Σᵢ Σⱼ aᵢ bⱼ k(xᵢ, yⱼ)` for one kernel.
pub(crate) fn kernel_sum(
    spec: &KernelSpec,
    xs: &PointSet,
    a: &[f64],
    ys: &PointSet,
    b: &[f64],
) -> f64 {
    if let (KernelSpec::Gaussian { sigma }, Some(x1), Some(y1)) =
        (spec, xs.as_scalars(), ys.as_scalars())
    {
        if x1.len().saturating_mul(y1.len()) >= FAST_TRANSFORM_MIN_PAIRS {
            // transform over the larger side, evaluate at the smaller
            return if x1.len() >= y1.len() {
                GaussTransform::new(x1, a, *sigma).weighted_sum(y1, b)
            } else {
                GaussTransform::new(y1, b, *sigma).weighted_sum(x1, a)
            };
        }
        let c = -1.0 / (2.0 * sigma * sigma);
        return x1
            .iter()
            .zip(a)
            .map(|(&x, &ai)| {
                ai * y1
                    .iter()
                    .zip(b)
                    .map(|(&y, &bj)| bj * (c * (x - y) * (x - y)).exp())
                    .sum::<f64>()
            })
            .sum();
    }
    kernel_sum_direct(spec, xs, a, ys, b)
}

/// Plain double loop; the reference for every accelerated path.
pub(crate) fn kernel_sum_direct(
    spec: &KernelSpec,
    xs: &PointSet,
    a: &[f64],
    ys: &PointSet,
    b: &[f64],
) -> f64 {
    xs.iter()
        .zip(a)
        .map(|(x, &ai)| {
            ai * ys
                .iter()
                .zip(b)
                .map(|(y, &bj)| bj * spec.eval_unchecked(x, y))
                .sum::<f64>()
        })
        .sum()
}

/// Weighted kernel sums `Σᵢ aᵢ k(xᵢ, t)` evaluated at each target.
pub(crate) fn kernel_transform(
    spec: &KernelSpec,
    xs: &PointSet,
    a: &[f64],
    targets: &PointSet,
) -> Vec<f64> {
    if let (KernelSpec::Gaussian { sigma }, Some(x1), Some(t1)) =
        (spec, xs.as_scalars(), targets.as_scalars())
    {
        if x1.len().saturating_mul(t1.len()) >= FAST_TRANSFORM_MIN_PAIRS {
            let gt = GaussTransform::new(x1, a, *sigma);
            return t1.iter().map(|&t| gt.eval(t)).collect();
        }
    }
    targets
        .iter()
        .map(|t| {
            xs.iter()
                .zip(a)
                .map(|(x, &ai)| ai * spec.eval_unchecked(x, t))
                .sum()
        })
        .collect()
}

/// RKHS inner product `⟨Σ aᵢ Φ(xᵢ), Σ bⱼ Φ(yⱼ)⟩`.
pub fn inner(a: &WeightedExpansion, b: &WeightedExpansion) -> Result<f64> {
    check_compatible(a, b)?;
    Ok(kernel_sum(
        &a.spec, &a.points, &a.weights, &b.points, &b.weights,
    ))
}

/// Same as [`inner`] but always by direct double summation.
pub fn inner_exact(a: &WeightedExpansion, b: &WeightedExpansion) -> Result<f64> {
    check_compatible(a, b)?;
    Ok(kernel_sum_direct(
        &a.spec, &a.points, &a.weights, &b.points, &b.weights,
    ))
}

/// Squared RKHS distance `‖a − b‖²`, clamped at zero for rounding noise.
pub fn mmd_sq(a: &WeightedExpansion, b: &WeightedExpansion) -> Result<f64> {
    check_compatible(a, b)?;
    let aa = inner(a, a)?;
    let ab = inner(a, b)?;
    let bb = inner(b, b)?;
    clamp_distance(aa - 2.0 * ab + bb)
}

pub(crate) fn clamp_distance(value: f64) -> Result<f64> {
    if value < -NEGATIVE_FLOOR {
        Err(Error::NegativeDistance(value))
    } else {
        Ok(value.max(0.0))
    }
}

/// Estimate of `E[f(X)]` for `f = Σ aᵢ k(xᵢ, ·)` under the embedded distribution.
pub fn expect_function(mu: &WeightedExpansion, f: &WeightedExpansion) -> Result<f64> {
    inner(mu, f)
}

/// Deviation bound `(2/m)·√(tr K) + √(2 ln(2/δ) / m)` holding with probability
/// at least `1 − δ` when functions in the RKHS unit ball are bounded by one.
/// `trace_k` is the realized trace of the sample Gram matrix, used in place of
/// its expectation.
pub fn error_bound(m: usize, trace_k: f64, delta: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    if !(trace_k >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trace must be non-negative, got {trace_k}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let m = m as f64;
    Ok(2.0 / m * trace_k.sqrt() + (2.0 * (2.0 / delta).ln() / m).sqrt())
}

#[derive(Serialize, Deserialize)]
struct RawExpansion {
    spec: KernelSpec,
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawExpansion> for WeightedExpansion {
    type Error = Error;

    fn try_from(raw: RawExpansion) -> Result<Self> {
        let points = if raw.points.is_empty() {
            PointSet::empty(raw.dim)
        } else {
            PointSet::from_rows(&raw.points)?
        };
        points.check_dim(raw.dim)?;
        WeightedExpansion::new(points, raw.weights, raw.spec)
    }
}

impl From<WeightedExpansion> for RawExpansion {
    fn from(e: WeightedExpansion) -> Self {
        RawExpansion {
            spec: e.spec,
            dim: e.dim(),
            points: e.points.iter().map(<[f64]>::to_vec).collect(),
            weights: e.weights,
        }
    }
}
