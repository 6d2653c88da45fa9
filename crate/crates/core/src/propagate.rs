//! Pushing kernel mean estimates through point functions.
//!
//! For independent inputs with expansions `Σ αᵢ Φ(xᵢ)` and `Σ βⱼ Φ(yⱼ)`, the
//! estimate of the embedding of `f(X, Y)` is
//!
//! ```text
//! (Σα · Σβ)⁻¹ Σᵢ Σⱼ αᵢ βⱼ Φ(f(xᵢ, yⱼ))
//! ```
//!
//! which with uniform weights is the two-sample U-statistic over all `m·n`
//! pairs. The n-ary form takes the full product grid. Distinct input
//! expansions must describe independent variables; nothing here can check
//! that.

use std::fmt;
use std::sync::Arc;

use crate::embedding::WeightedExpansion;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::points::PointSet;

/// Default cap on the number of product-grid terms.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

/// Smallest admissible `|Π Σ weights|`.
pub const NORMALIZER_FLOOR: f64 = 1e-8;

/// Tolerance on `Σ α = 1` for [`quantize_to_sample`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-8;

type MapFn = dyn Fn(&[&[f64]], &mut Vec<f64>) + Send + Sync;
type GuardFn = dyn Fn(&[&[f64]]) -> bool + Send + Sync;

/// A deterministic map from `arity` points to one point, with a predicate
/// marking inputs outside its domain.
#[derive(Clone)]
pub struct PointFunction {
    name: String,
    arity: usize,
    map: Arc<MapFn>,
    guard: Arc<GuardFn>,
}

impl fmt::Debug for PointFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

impl PointFunction {
    /// `map` writes the output point into the (cleared) buffer; `guard`
    /// returns `false` for inputs outside the domain.
    pub fn new<M, G>(name: impl Into<String>, arity: usize, map: M, guard: G) -> Self
    where
        M: Fn(&[&[f64]], &mut Vec<f64>) + Send + Sync + 'static,
        G: Fn(&[&[f64]]) -> bool + Send + Sync + 'static,
    {
        assert!(arity >= 1, "point functions take at least one argument");
        Self {
            name: name.into(),
            arity,
            map: Arc::new(map),
            guard: Arc::new(guard),
        }
    }

    /// Scalar function of one variable applied coordinate-wise.
    pub fn unary<F, G>(name: &str, f: F, guard: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> bool + Send + Sync + 'static,
    {
        Self::new(
            name,
            1,
            move |args, out| out.extend(args[0].iter().map(|&x| f(x))),
            move |args| args[0].iter().all(|&x| guard(x)),
        )
    }

    /// Scalar function of two variables applied coordinate-wise.
    pub fn binary<F, G>(name: &str, f: F, guard: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> bool + Send + Sync + 'static,
    {
        Self::new(
            name,
            2,
            move |args, out| out.extend(args[0].iter().zip(args[1]).map(|(&x, &y)| f(x, y))),
            move |args| {
                args[0].len() == args[1].len()
                    && args[0].iter().zip(args[1]).all(|(&x, &y)| guard(x, y))
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_defined(&self, args: &[&[f64]]) -> bool {
        args.len() == self.arity && (self.guard)(args)
    }

    /// Evaluate into `out`; `None` outside the domain or for non-finite output.
    pub fn eval_into(&self, args: &[&[f64]], out: &mut Vec<f64>) -> Option<()> {
        if !self.is_defined(args) {
            return None;
        }
        out.clear();
        (self.map)(args, out);
        (!out.is_empty() && out.iter().all(|v| v.is_finite())).then_some(())
    }

    pub fn eval(&self, args: &[&[f64]]) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        self.eval_into(args, &mut out).map(|_| out)
    }
}

/// Built-in point functions available by name.
pub mod builtins {
    use super::PointFunction;

    pub const NAMES: &[&str] = &[
        "add", "sub", "mul", "div", "pow", "neg", "abs", "exp", "log", "square",
    ];

    pub fn add() -> PointFunction {
        PointFunction::binary("add", |x, y| x + y, |_, _| true)
    }

    pub fn sub() -> PointFunction {
        PointFunction::binary("sub", |x, y| x - y, |_, _| true)
    }

    pub fn mul() -> PointFunction {
        PointFunction::binary("mul", |x, y| x * y, |_, _| true)
    }

    pub fn div() -> PointFunction {
        PointFunction::binary("div", |x, y| x / y, |_, y| y != 0.0)
    }

    /// `x^y`, defined for `x > 0` or integer `y` (excluding `0` to a negative power).
    pub fn pow() -> PointFunction {
        PointFunction::binary("pow", pow_value, pow_defined)
    }

    pub fn neg() -> PointFunction {
        PointFunction::unary("neg", |x| -x, |_| true)
    }

    pub fn abs() -> PointFunction {
        PointFunction::unary("abs", f64::abs, |_| true)
    }

    pub fn exp() -> PointFunction {
        PointFunction::unary("exp", f64::exp, |_| true)
    }

    pub fn log() -> PointFunction {
        PointFunction::unary("log", f64::ln, |x| x > 0.0)
    }

    pub fn square() -> PointFunction {
        PointFunction::unary("square", |x| x * x, |_| true)
    }

    pub fn by_name(name: &str) -> Option<PointFunction> {
        Some(match name {
            "add" => add(),
            "sub" => sub(),
            "mul" => mul(),
            "div" => div(),
            "pow" => pow(),
            "neg" => neg(),
            "abs" => abs(),
            "exp" => exp(),
            "log" => log(),
            "square" => square(),
            _ => return None,
        })
    }

    pub(crate) fn pow_defined(x: f64, y: f64) -> bool {
        if x > 0.0 {
            true
        } else {
            y.fract() == 0.0 && !(x == 0.0 && y < 0.0)
        }
    }

    pub(crate) fn pow_value(x: f64, y: f64) -> f64 {
        if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
            x.powi(y as i32)
        } else {
            x.powf(y)
        }
    }
}

fn domain_error(f: &PointFunction, indices: Vec<usize>) -> Error {
    Error::Domain {
        function: f.name().to_string(),
        indices,
    }
}

/// Estimate for `f(X, Y)` from independent inputs. Output points are in
/// row-major order over `(i, j)`.
pub fn apply_binary(
    mu_x: &WeightedExpansion,
    mu_y: &WeightedExpansion,
    f: &PointFunction,
    out_spec: KernelSpec,
) -> Result<WeightedExpansion> {
    if f.arity() != 2 {
        return Err(Error::InvalidParameter(format!(
            "`{}` has arity {}, expected 2",
            f.name(),
            f.arity()
        )));
    }
    apply_nary(&[mu_x, mu_y], f, out_spec)
}

/// Product-grid estimate for `g(U₁, …, U_p)` with the default size cap.
pub fn apply_nary(
    means: &[&WeightedExpansion],
    g: &PointFunction,
    out_spec: KernelSpec,
) -> Result<WeightedExpansion> {
    apply_nary_capped(means, g, out_spec, DEFAULT_GRID_CAP)
}

pub fn apply_nary_capped(
    means: &[&WeightedExpansion],
    g: &PointFunction,
    out_spec: KernelSpec,
    cap: usize,
) -> Result<WeightedExpansion> {
    if means.len() != g.arity() {
        return Err(Error::InvalidParameter(format!(
            "`{}` has arity {} but {} inputs were given",
            g.name(),
            g.arity(),
            means.len()
        )));
    }
    out_spec.validate()?;
    let total = means
        .iter()
        .try_fold(1usize, |acc, m| acc.checked_mul(m.len()))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::SizeCapExceeded {
            requested: total,
            cap,
        });
    }
    let normalizer: f64 = means.iter().map(|m| m.weight_sum()).product();
    if !(normalizer.abs() > NORMALIZER_FLOOR) {
        return Err(Error::DegenerateNormalizer(normalizer));
    }

    let p = means.len();
    let mut index = vec![0usize; p];
    let mut args: Vec<&[f64]> = means.iter().map(|m| m.points().get(0)).collect();
    let mut out = Vec::new();
    let mut coords = Vec::new();
    let mut weights = Vec::with_capacity(total);
    let mut out_dim = None;

    for _ in 0..total {
        if g.eval_into(&args, &mut out).is_none() {
            return Err(domain_error(g, index));
        }
        match out_dim {
            None => out_dim = Some(out.len()),
            Some(d) if d != out.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: out.len(),
                })
            }
            _ => {}
        }
        coords.extend_from_slice(&out);
        let w: f64 = means
            .iter()
            .zip(&index)
            .map(|(m, &i)| m.weights()[i])
            .product();
        weights.push(w / normalizer);

        // advance the odometer, last index fastest
        for k in (0..p).rev() {
            index[k] += 1;
            if index[k] < means[k].len() {
                args[k] = means[k].points().get(index[k]);
                break;
            }
            index[k] = 0;
            args[k] = means[k].points().get(0);
        }
    }

    let dim = out_dim.expect("grid has at least one term");
    WeightedExpansion::new(PointSet::new(dim, coords)?, weights, out_spec)
}

/// The paired estimator `(1/m) Σᵢ Φ(f(xᵢ, yᵢ))` over matched sample points.
pub fn apply_paired(
    xs: &PointSet,
    ys: &PointSet,
    f: &PointFunction,
    out_spec: KernelSpec,
) -> Result<WeightedExpansion> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("paired sample"));
    }
    let mut out = Vec::new();
    let mut coords = Vec::new();
    let mut dim = None;
    for (i, (x, y)) in xs.iter().zip(ys.iter()).enumerate() {
        if f.eval_into(&[x, y], &mut out).is_none() {
            return Err(domain_error(f, vec![i, i]));
        }
        if *dim.get_or_insert(out.len()) != out.len() {
            return Err(Error::DimensionMismatch {
                expected: dim.unwrap_or_default(),
                actual: out.len(),
            });
        }
        coords.extend_from_slice(&out);
    }
    let m = xs.len();
    WeightedExpansion::new(
        PointSet::new(dim.unwrap_or(1), coords)?,
        vec![1.0 / m as f64; m],
        out_spec,
    )
}

/// Artificial sample in which point `i` appears `⌊m · αᵢ⌋` times.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSample {
    pub points: PointSet,
    pub multiplicities: Vec<usize>,
}

impl QuantizedSample {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Requires strictly positive weights summing to one (within
/// [`WEIGHT_SUM_TOLERANCE`]). The result has at most `m` points and may be
/// empty when every `m · αᵢ < 1`.
pub fn quantize_to_sample(mu: &WeightedExpansion, m: usize) -> Result<QuantizedSample> {
    for (index, &value) in mu.weights().iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    let sum = mu.weight_sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightsNotNormalized(sum));
    }
    let multiplicities: Vec<usize> = mu
        .weights()
        .iter()
        .map(|&a| (m as f64 * a).floor() as usize)
        .collect();
    let mut points = PointSet::empty(mu.dim());
    for (p, &count) in mu.points().iter().zip(&multiplicities) {
        for _ in 0..count {
            points.push(p);
        }
    }
    Ok(QuantizedSample {
        points,
        multiplicities,
    })
}
