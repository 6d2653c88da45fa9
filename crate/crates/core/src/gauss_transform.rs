//! One-dimensional fast Gauss transform.
//!
//! Evaluates `S(t) = Σᵢ wᵢ exp(−(sᵢ − t)² / (2σ²))` for many targets in
//! `O((n_sources + n_targets) · ORDER)` instead of `O(n_sources · n_targets)`.
//! Sources are grouped into unit boxes in the scaled coordinate
//! `u = s / (√2 σ)`; around each box centre `c`
//!
//! ```text
//! exp(−(u − v)²) = exp(−(u − c)²) · exp(−(v − c)²) · Σₙ (2(u − c))ⁿ (v − c)ⁿ / n!
//! ```
//!
//! With `|u − c| ≤ 1/2` and `ORDER = 28` the truncated tail is below 1e−18
//! times the absolute source weight for every target, and boxes farther than
//! `CUTOFF` contribute less than `exp(−42)`.

use std::collections::BTreeMap;

const ORDER: usize = 28;
const CUTOFF: f64 = 6.5;

pub(crate) struct GaussTransform {
    scale: f64,
    boxes: BTreeMap<i64, [f64; ORDER]>,
}

impl GaussTransform {
    pub(crate) fn new(sources: &[f64], weights: &[f64], sigma: f64) -> Self {
        debug_assert_eq!(sources.len(), weights.len());
        let scale = 1.0 / (std::f64::consts::SQRT_2 * sigma);
        let mut boxes: BTreeMap<i64, [f64; ORDER]> = BTreeMap::new();
        for (&s, &w) in sources.iter().zip(weights) {
            let u = s * scale;
            let b = u.floor();
            let d = u - (b + 0.5);
            let moments = boxes.entry(b as i64).or_insert([0.0; ORDER]);
            let mut term = w * (-d * d).exp();
            for (n, m) in moments.iter_mut().enumerate() {
                *m += term;
                term *= 2.0 * d / (n + 1) as f64;
            }
        }
        Self { scale, boxes }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let v = t * self.scale;
        let lo = (v - CUTOFF).floor() as i64 - 1;
        let hi = (v + CUTOFF).floor() as i64 + 1;
        let mut total = 0.0;
        for (&b, moments) in self.boxes.range(lo..=hi) {
            let d = v - (b as f64 + 0.5);
            if d.abs() - 0.5 > CUTOFF {
                continue;
            }
            let mut acc = 0.0;
            for m in moments.iter().rev() {
                acc = acc * d + m;
            }
            total += (-d * d).exp() * acc;
        }
        total
    }

    /// `Σⱼ bⱼ S(tⱼ)`.
    pub(crate) fn weighted_sum(&self, targets: &[f64], weights: &[f64]) -> f64 {
        targets
            .iter()
            .zip(weights)
            .map(|(&t, &w)| w * self.eval(t))
            .sum()
    }
}
