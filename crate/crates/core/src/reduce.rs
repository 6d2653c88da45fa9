//! Reduced-set selection.
//!
//! A subset of the expansion points is drawn uniformly without replacement
//! and new coefficients are fitted to minimise the RKHS distance to the
//! original expansion, i.e. the normal equations
//! `(K_sub + ridge·I) γ' = K_{sub,all} γ`.
//!
//! Fitted coefficients are unconstrained: they may be negative and need not
//! sum to one.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{kernel_sum, kernel_transform, mmd_sq, WeightedExpansion};
use crate::error::{Error, Result};
use crate::kernels::gram;

/// Relative scale of the default ridge: `1e-8 · tr(K_sub) / target`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-8;

/// Smallest accepted ratio between squared Cholesky pivots before the
/// factorization is treated as numerically singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-14;

/// Eigenvalues below this fraction of the largest are dropped by the
/// pseudo-inverse fallback.
const PINV_RELATIVE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Ridge {
    /// `1e-8 · tr(K_sub) / target`.
    #[default]
    Default,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    Cholesky,
    /// Factorization failed or was numerically singular.
    PseudoInverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub reduced: WeightedExpansion,
    /// `‖reduced − original‖²`.
    pub achieved_error_sq: f64,
    pub kept_indices: Vec<usize>,
    pub ridge: f64,
    pub solve_path: SolvePath,
}

/// Compress `mu` to `target` of its own points with refitted coefficients.
pub fn reduce_random(
    mu: &WeightedExpansion,
    target: usize,
    ridge: Ridge,
    seed: u64,
) -> Result<ReductionResult> {
    let n = mu.len();
    if target == 0 {
        return Err(Error::InvalidParameter(
            "target size must be at least 1".into(),
        ));
    }
    if target > n {
        return Err(Error::TargetTooLarge { target, size: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = index::sample(&mut rng, n, target).into_vec();
    kept.sort_unstable();
    reduce_to_indices(mu, kept, ridge)
}

/// Refit coefficients on a given subset of expansion points.
pub fn reduce_to_indices(
    mu: &WeightedExpansion,
    kept: Vec<usize>,
    ridge: Ridge,
) -> Result<ReductionResult> {
    if kept.is_empty() {
        return Err(Error::EmptyInput("kept indices"));
    }
    if let Some(&bad) = kept.iter().find(|&&i| i >= mu.len()) {
        return Err(Error::InvalidParameter(format!("index {bad} out of range")));
    }
    let spec = *mu.spec();
    let subset = mu.points().select(&kept);
    let mut k_sub = gram(&spec, &subset, &subset)?;
    let target = kept.len();

    let ridge = match ridge {
        Ridge::Default => DEFAULT_RIDGE_SCALE * k_sub.trace() / target as f64,
        Ridge::Value(r) if r.is_finite() && r >= 0.0 => r,
        Ridge::Value(r) => {
            return Err(Error::InvalidParameter(format!(
                "ridge must be >= 0, got {r}"
            )))
        }
    };
    if ridge == 0.0 && has_duplicates(&kept, mu) {
        return Err(Error::SingularSystem);
    }
    for i in 0..target {
        k_sub[(i, i)] += ridge;
    }
    let rhs = DVector::from_vec(kernel_transform(&spec, mu.points(), mu.weights(), &subset));
    let (coeffs, solve_path) = solve_spd(k_sub, &rhs)?;

    let reduced = WeightedExpansion::new(subset, coeffs.iter().copied().collect(), spec)?;
    let achieved_error_sq = mmd_sq(mu, &reduced)?;
    Ok(ReductionResult {
        reduced,
        achieved_error_sq,
        kept_indices: kept,
        ridge,
        solve_path,
    })
}

fn has_duplicates(kept: &[usize], mu: &WeightedExpansion) -> bool {
    let mut rows: Vec<&[f64]> = kept.iter().map(|&i| mu.points().get(i)).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.windows(2).any(|w| w[0] == w[1])
}

fn solve_spd(matrix: DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, SolvePath)> {
    if let Some(chol) = Cholesky::new(matrix.clone()) {
        let diag = chol.l_dirty().diagonal();
        let max = diag.iter().fold(0.0f64, |m, d| m.max(d * d));
        let min = diag.iter().fold(f64::INFINITY, |m, d| m.min(d * d));
        if min > PIVOT_RATIO_FLOOR * max {
            return Ok((chol.solve(rhs), SolvePath::Cholesky));
        }
    }
    let eig = SymmetricEigen::new(matrix);
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if lambda_max == 0.0 {
        return Err(Error::SingularSystem);
    }
    let tol = PINV_RELATIVE_TOLERANCE * lambda_max;
    let projected = eig.eigenvectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        projected.len(),
        projected
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(p, &l)| if l > tol { p / l } else { 0.0 }),
    );
    Ok((&eig.eigenvectors * scaled, SolvePath::PseudoInverse))
}

/// Recompute `‖μ − reduced‖²` independently of the fit and return its
/// absolute difference to the recorded error.
pub fn residual_check(mu: &WeightedExpansion, result: &ReductionResult) -> f64 {
    let r = &result.reduced;
    if mu.spec() != r.spec() || mu.dim() != r.dim() {
        return f64::INFINITY;
    }
    let spec = mu.spec();
    let aa = kernel_sum(spec, mu.points(), mu.weights(), mu.points(), mu.weights());
    let ab = kernel_sum(spec, mu.points(), mu.weights(), r.points(), r.weights());
    let bb = kernel_sum(spec, r.points(), r.weights(), r.points(), r.weights());
    let recomputed = (aa - 2.0 * ab + bb).max(0.0);
    (recomputed - result.achieved_error_sq).abs()
}
