//! Kernel mean embeddings of random variables.
//!
//! Distributions are represented by weighted expansions `Σ γₖ Φ(zₖ)` in the
//! RKHS of a positive definite kernel. Expansions can be pushed through
//! arbitrary point functions of independent variables, compressed by
//! reduced-set selection, and compared in RKHS norm. The same estimators
//! drive an additive-noise-model test for cause-effect direction.

pub mod anm;
pub mod dsl;
pub mod embedding;
pub mod error;
mod gauss_transform;
pub mod io;
pub mod kernels;
pub mod points;
pub mod propagate;
pub mod reduce;
pub mod seeding;

pub use anm::{accuracy_curve, infer_pair, polyfit, AnmConfig, AnmReport, PairedSample};
pub use dsl::{evaluate, EvalPolicy, Expr};
pub use embedding::{embed_sample, error_bound, expect_function, inner, mmd_sq, WeightedExpansion};
pub use error::{Error, Result};
pub use kernels::{
    eval_kernel, gram, median_heuristic, rff_build, rff_features, Bandwidth, KernelConfig,
    KernelKind, KernelSpec, RffMap,
};
pub use points::PointSet;
pub use propagate::{
    apply_binary, apply_nary, apply_paired, builtins, quantize_to_sample, PointFunction,
};
pub use reduce::{reduce_random, residual_check, ReductionResult, Ridge};
