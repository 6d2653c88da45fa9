//! Positive definite kernels on ℝᵈ, Gram matrices, bandwidth selection and
//! random Fourier features.
//!
//! Three kernel families are supported:
//!
//! | variant | k(x, x') |
//! |---------|----------|
//! | `Gaussian { sigma }` | exp(−‖x − x'‖² / (2σ²)) |
//! | `Linear` | ⟨x, x'⟩ |
//! | `Polynomial { degree, offset }` | (⟨x, x'⟩ + c)ⁿ |
//!
//! The Gaussian kernel is bounded with k(x, x) = 1 and is the only one with a
//! random Fourier feature approximation.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{dot, squared_distance, PointSet};

/// Kernel family and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian {
        sigma: f64,
    },
    Linear,
    #[serde(rename = "poly")]
    Polynomial {
        degree: u32,
        offset: f64,
    },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Gaussian { sigma };
        spec.validate()?;
        Ok(spec)
    }

    /// `(⟨x, x'⟩ + offset)^degree`.
    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "gaussian bandwidth must be positive, got {sigma}"
                )))
            }
            KernelSpec::Polynomial { degree, .. } if degree < 1 => Err(Error::InvalidParameter(
                "polynomial degree must be at least 1".into(),
            )),
            KernelSpec::Polynomial { offset, .. } if !(offset.is_finite() && offset >= 0.0) => Err(
                Error::InvalidParameter(format!("polynomial offset must be >= 0, got {offset}")),
            ),
            _ => Ok(()),
        }
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                (-squared_distance(x, y) / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Gaussian { sigma } => Some(sigma),
            _ => None,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, offset } => {
                write!(f, "poly(degree={degree}, offset={offset})")
            }
        }
    }
}

/// Kernel family as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Gaussian,
    Linear,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    Median,
}

/// Gaussian bandwidth: a fixed value or the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Rule(BandwidthRule),
}

impl Bandwidth {
    pub const MEDIAN: Bandwidth = Bandwidth::Rule(BandwidthRule::Median);
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::MEDIAN
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Bandwidth::MEDIAN);
        }
        let v: f64 = s.parse().map_err(|_| {
            Error::InvalidParameter(format!("bandwidth `{s}` is neither a number nor `median`"))
        })?;
        KernelSpec::gaussian(v)?;
        Ok(Bandwidth::Fixed(v))
    }
}

/// Unresolved kernel choice: `kernel = gaussian|linear|poly`,
/// `sigma = <float>|median`, `degree`, `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub kernel: KernelKind,
    pub sigma: Bandwidth,
    pub degree: u32,
    pub offset: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Gaussian,
            sigma: Bandwidth::MEDIAN,
            degree: 2,
            offset: 1.0,
        }
    }
}

impl KernelConfig {
    /// Resolve to a concrete kernel, running the median heuristic on
    /// `points` when requested.
    pub fn resolve(&self, points: &PointSet) -> Result<KernelSpec> {
        match self.kernel {
            KernelKind::Gaussian => match self.sigma {
                Bandwidth::Fixed(sigma) => KernelSpec::gaussian(sigma),
                Bandwidth::Rule(BandwidthRule::Median) => {
                    KernelSpec::gaussian(median_heuristic(points)?)
                }
            },
            KernelKind::Linear => Ok(KernelSpec::Linear),
            KernelKind::Poly => KernelSpec::polynomial(self.degree, self.offset),
        }
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Gram matrix `K[i, j] = k(xs[i], ys[j])`.
pub fn gram(spec: &KernelSpec, xs: &PointSet, ys: &PointSet) -> Result<DMatrix<f64>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("gram matrix input"));
    }
    xs.check_dim(ys.dim())?;
    Ok(DMatrix::from_fn(xs.len(), ys.len(), |i, j| {
        spec.eval_unchecked(xs.get(i), ys.get(j))
    }))
}

/// Median of the pairwise distances `‖pᵢ − pⱼ‖` over pairs `i < j` with
/// `pᵢ ≠ pⱼ`. An even number of distances yields the midpoint of the two
/// central values.
///
/// One-dimensional inputs use an exact selection over the sorted sample in
/// `O(n log n)`; other dimensions enumerate all pairs.
pub fn median_heuristic(points: &PointSet) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::NoDistinctPairs);
    }
    match points.as_scalars() {
        Some(values) => median_distance_1d(values),
        None => median_distance_pairs(points),
    }
}

fn median_distance_pairs(points: &PointSet) -> Result<f64> {
    let n = points.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(points.get(i), points.get(j)).sqrt();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    median_of(&mut dists).ok_or(Error::NoDistinctPairs)
}

/// Midpoint median, destructive on `values`.
pub(crate) fn median_of(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let upper = n / 2;
    let (_, hi, _) = values.select_nth_unstable_by(upper, |a, b| a.total_cmp(b));
    let hi = *hi;
    if n % 2 == 1 {
        return Some(hi);
    }
    let lo = values[..upper]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Some(0.5 * (lo + hi))
}

fn median_distance_1d(values: &[f64]) -> Result<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));

    let n = sorted.len() as u64;
    let mut zero_pairs = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[1] == w[0] {
            run += 1;
        } else {
            zero_pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    zero_pairs += run * (run - 1) / 2;

    let total = n * (n - 1) / 2 - zero_pairs;
    if total == 0 {
        return Err(Error::NoDistinctPairs);
    }
    let max_dist = sorted[sorted.len() - 1] - sorted[0];
    let kth = |k: u64| kth_distance_1d(&sorted, zero_pairs, k, max_dist);
    if total % 2 == 1 {
        Ok(kth(total / 2 + 1))
    } else {
        Ok(0.5 * (kth(total / 2) + kth(total / 2 + 1)))
    }
}

/// Number of pairs `i < j` of the sorted sample with `s[j] − s[i] ≤ t`.
fn pairs_within(sorted: &[f64], t: f64) -> u64 {
    let mut count = 0u64;
    let mut lo = 0usize;
    for (j, &v) in sorted.iter().enumerate() {
        while v - sorted[lo] > t {
            lo += 1;
        }
        count += (j - lo) as u64;
    }
    count
}

/// k-th smallest (1-based) strictly positive pairwise distance. Bisects on the
/// bit pattern of non-negative doubles, which orders like the values.
fn kth_distance_1d(sorted: &[f64], zero_pairs: u64, k: u64, max_dist: f64) -> f64 {
    let mut lo = 0u64; // 0.0: no positive distance is <= 0
    let mut hi = max_dist.to_bits();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pairs_within(sorted, f64::from_bits(mid)) - zero_pairs >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    f64::from_bits(hi)
}

/// Random Fourier feature map for the Gaussian kernel of bandwidth σ.
///
/// Frequencies are drawn from N(0, σ⁻² I) and the feature vector pairs
/// `cos(ωᵀx)` with `sin(ωᵀx)`, so ⟨φ(x), φ(x)⟩ = 1 exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    frequencies: DMatrix<f64>,
    sigma: f64,
    seed: u64,
}

pub fn rff_build(sigma: f64, features: usize, dim: usize, seed: u64) -> Result<RffMap> {
    KernelSpec::gaussian(sigma)?;
    if features == 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "feature count and dimension must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies = DMatrix::from_fn(features, dim, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z / sigma
    });
    Ok(RffMap {
        frequencies,
        sigma,
        seed,
    })
}

impl RffMap {
    /// Number of frequencies D (the feature vector has length 2D).
    pub fn num_frequencies(&self) -> usize {
        self.frequencies.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frequencies(&self) -> &DMatrix<f64> {
        &self.frequencies
    }

    fn phase(&self, k: usize, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, xj)| self.frequencies[(k, j)] * xj)
            .sum()
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let d = self.num_frequencies();
        let norm = 1.0 / (d as f64).sqrt();
        let mut out = vec![0.0; 2 * d];
        for k in 0..d {
            let (s, c) = self.phase(k, x).sin_cos();
            out[k] = c * norm;
            out[d + k] = s * norm;
        }
        Ok(out)
    }

    /// Weighted mean feature vector `Σ wᵢ φ(xᵢ)`.
    pub fn mean_features(&self, points: &PointSet, weights: &[f64]) -> Result<Vec<f64>> {
        points.check_dim(self.dim())?;
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: weights.len(),
            });
        }
        let d = self.num_frequencies();
        let norm = 1.0 / (d as f64).sqrt();
        let mut out = vec![0.0; 2 * d];
        for (x, &w) in points.iter().zip(weights) {
            for k in 0..d {
                let (s, c) = self.phase(k, x).sin_cos();
                out[k] += w * c;
                out[d + k] += w * s;
            }
        }
        out.iter_mut().for_each(|v| *v *= norm);
        Ok(out)
    }

    /// Unnormalized per-frequency means `(mean cos(ωₖ x), mean sin(ωₖ x))`
    /// over scalar samples. Requires a one-dimensional map.
    pub fn cos_sin_means(&self, values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: self.dim(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("rff sample"));
        }
        let d = self.num_frequencies();
        let mut c = vec![0.0; d];
        let mut s = vec![0.0; d];
        for &x in values {
            for k in 0..d {
                let (sk, ck) = (self.frequencies[(k, 0)] * x).sin_cos();
                c[k] += ck;
                s[k] += sk;
            }
        }
        let inv = 1.0 / values.len() as f64;
        c.iter_mut().chain(s.iter_mut()).for_each(|v| *v *= inv);
        Ok((c, s))
    }
}

pub fn rff_features(map: &RffMap, x: &[f64]) -> Result<Vec<f64>> {
    map.features(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_median(values: &[f64]) -> Option<f64> {
        let mut d = Vec::new();
        for i in 0..values.len() {
            for j in (i + 1)..values.len() {
                let v = (values[i] - values[j]).abs();
                if v > 0.0 {
                    d.push(v);
                }
            }
        }
        d.sort_by(|a, b| a.total_cmp(b));
        let n = d.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(d[n / 2]),
            _ => Some(0.5 * (d[n / 2 - 1] + d[n / 2])),
        }
    }

    #[test]
    fn gaussian_values() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(eval_kernel(&k, &[0.3], &[0.3]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            eval_kernel(&k, &[0.0], &[1.0]).unwrap(),
            0.606531,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            eval_kernel(&k, &[0.0, 0.0], &[0.6, 0.8]).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn linear_and_poly_values() {
        assert_eq!(
            eval_kernel(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        let p = KernelSpec::polynomial(2, 1.0).unwrap();
        assert_eq!(eval_kernel(&p, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
    }

    #[test]
    fn dimension_mismatch() {
        let err = eval_kernel(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::polynomial(0, 1.0).is_err());
        assert!(KernelSpec::polynomial(2, -0.5).is_err());
    }

    #[test]
    fn gram_small_cases() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        let zero = PointSet::from_scalars(vec![0.0]).unwrap();
        assert_eq!(gram(&k, &zero, &zero).unwrap()[(0, 0)], 1.0);
        let two = PointSet::from_scalars(vec![0.0, 1.0]).unwrap();
        let g = gram(&k, &two, &two).unwrap();
        let e = (-0.5f64).exp();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, e, e, 1.0]));
        let empty = PointSet::empty(1);
        assert!(matches!(gram(&k, &empty, &two), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn median_examples() {
        let p = |v: Vec<f64>| PointSet::from_scalars(v).unwrap();
        assert_eq!(median_heuristic(&p(vec![0.0, 1.0, 3.0])).unwrap(), 2.0);
        assert_eq!(median_heuristic(&p(vec![0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(
            median_heuristic(&p(vec![5.0, 5.0, 5.0])),
            Err(Error::NoDistinctPairs)
        );
        // duplicates are excluded from the distance multiset: {1,1,1,1} -> 1
        assert_eq!(median_heuristic(&p(vec![2.0, 2.0, 3.0])).unwrap(), 1.0);
    }

    #[test]
    fn median_multidimensional() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(median_heuristic(&p).unwrap(), 5.0);
    }

    #[test]
    fn rff_determinism_and_shape() {
        let a = rff_build(1.3, 100, 1, 42).unwrap();
        let b = rff_build(1.3, 100, 1, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frequencies().shape(), (100, 1));
        assert_ne!(a, rff_build(1.3, 100, 1, 43).unwrap());
    }

    #[test]
    fn rff_frequency_variance_matches_spectral_density() {
        // Monte Carlo: frequencies ~ N(0, 1/sigma^2)
        let sigma = 0.7;
        let map = rff_build(sigma, 10_000, 1, 7).unwrap();
        let w = map.frequencies().as_slice();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        let target = 1.0 / (sigma * sigma);
        assert!(
            (var - target).abs() / target < 0.2,
            "var {var} target {target}"
        );
    }

    #[test]
    fn rff_self_inner_is_one() {
        let map = rff_build(1.0, 50, 2, 3).unwrap();
        for x in [[0.0, 0.0], [1.5, -2.0], [100.0, 3.0]] {
            let f = map.features(&x).unwrap();
            assert_eq!(f.len(), 100);
            assert_abs_diff_eq!(dot(&f, &f), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rff_approximates_kernel() {
        let map = rff_build(1.0, 1000, 1, 11).unwrap();
        let fx = map.features(&[0.0]).unwrap();
        let fy = map.features(&[1.0]).unwrap();
        assert!((dot(&fx, &fy) - (-0.5f64).exp()).abs() <= 0.07);
    }

    #[test]
    fn rff_unbiased_over_seeds() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        for (x, y) in [(0.0, 0.0), (0.0, 0.5), (0.2, 1.2), (-0.5, 1.0), (1.0, 2.5)] {
            let avg = (0..50)
                .map(|s| {
                    let map = rff_build(1.0, 100, 1, 1000 + s).unwrap();
                    dot(&map.features(&[x]).unwrap(), &map.features(&[y]).unwrap())
                })
                .sum::<f64>()
                / 50.0;
            let exact = eval_kernel(&k, &[x], &[y]).unwrap();
            assert!((avg - exact).abs() <= 0.03, "({x},{y}): {avg} vs {exact}");
        }
    }

    #[test]
    fn rff_mean_features_match_average() {
        let map = rff_build(0.8, 20, 1, 5).unwrap();
        let pts = PointSet::from_scalars(vec![0.1, -0.4, 2.0]).unwrap();
        let w = [0.2, 0.3, 0.5];
        let mean = map.mean_features(&pts, &w).unwrap();
        let mut manual = vec![0.0; 40];
        for (p, wi) in pts.iter().zip(w) {
            for (m, f) in manual.iter_mut().zip(map.features(p).unwrap()) {
                *m += wi * f;
            }
        }
        for (a, b) in mean.iter().zip(&manual) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn config_resolution() {
        let pts = PointSet::from_scalars(vec![0.0, 1.0, 3.0]).unwrap();
        let cfg = KernelConfig::default();
        assert_eq!(
            cfg.resolve(&pts).unwrap(),
            KernelSpec::Gaussian { sigma: 2.0 }
        );
        let fixed = KernelConfig {
            sigma: "0.5".parse().unwrap(),
            ..cfg
        };
        assert_eq!(
            fixed.resolve(&pts).unwrap(),
            KernelSpec::Gaussian { sigma: 0.5 }
        );
        let poly = KernelConfig {
            kernel: KernelKind::Poly,
            degree: 3,
            ..cfg
        };
        assert_eq!(
            poly.resolve(&pts).unwrap(),
            KernelSpec::Polynomial {
                degree: 3,
                offset: 1.0
            }
        );
        assert!("wide".parse::<Bandwidth>().is_err());
    }

    proptest! {
        #[test]
        fn symmetric(x in prop::collection::vec(-5.0..5.0f64, 3), y in prop::collection::vec(-5.0..5.0f64, 3), sigma in 0.5..4.0f64) {
            for spec in [KernelSpec::gaussian(sigma).unwrap(), KernelSpec::Linear, KernelSpec::polynomial(3, 1.0).unwrap()] {
                prop_assert_eq!(spec.eval_unchecked(&x, &y), spec.eval_unchecked(&y, &x));
            }
            let g = KernelSpec::gaussian(sigma).unwrap().eval_unchecked(&x, &y);
            prop_assert!(g > 0.0 && g <= 1.0);
        }

        #[test]
        fn gram_is_psd_on_probes(seed in any::<u64>(), n in 1usize..50, sigma in 0.2..3.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = PointSet::from_scalars((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
            for spec in [KernelSpec::gaussian(sigma).unwrap(), KernelSpec::Linear, KernelSpec::polynomial(2, 1.0).unwrap()] {
                let g = gram(&spec, &pts, &pts).unwrap();
                prop_assert_eq!(&g, &g.transpose());
                let a = nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                prop_assert!((a.transpose() * &g * &a)[(0, 0)] >= -1e-9);
            }
        }

        #[test]
        fn fast_median_matches_enumeration(values in prop::collection::vec(prop_oneof![(-20i32..20).prop_map(|v| v as f64 * 0.25), -10.0..10.0f64], 2..60)) {
            let fast = median_heuristic(&PointSet::from_scalars(values.clone()).unwrap()).ok();
            prop_assert_eq!(fast, brute_median(&values));
        }

        #[test]
        fn median_translation_and_permutation_invariant(values in prop::collection::vec(-10.0..10.0f64, 3..40), shift in -100.0..100.0f64) {
            let base = median_heuristic(&PointSet::from_scalars(values.clone()).unwrap()).unwrap();
            let mut rev = values.clone();
            rev.reverse();
            prop_assert_eq!(median_heuristic(&PointSet::from_scalars(rev).unwrap()).unwrap(), base);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let moved = median_heuristic(&PointSet::from_scalars(shifted).unwrap()).unwrap();
            prop_assert!((moved - base).abs() <= 1e-9 * (1.0 + shift.abs()));
        }
    }
}
