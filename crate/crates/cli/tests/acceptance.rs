//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use kernel_rv::anm::{infer_pair, AnmConfig, EstimatorMode, PairedSample};
use kernel_rv::dsl::{BinaryOp, Builtin, Expr};
use kernel_rv::{
    embed_sample, inner, mmd_sq, quantize_to_sample, reduce_random, KernelSpec, PointSet, Ridge,
    WeightedExpansion,
};
use krv_cli::pairs::{run_pairs, run_samples};
use krv_cli::suite::synthetic_suite;
use krv_cli::synth::{
    log_log_slope, run_convergence, run_synth, summarize, ConvergenceConfig, Estimator, Operation,
    SynthConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    fn skipped(detail: impl Into<String>) -> Option<Self> {
        println!("[SKIP] {}", detail.into());
        None
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let in_time = elapsed <= budget;
    Outcome::new(
        outcome.passed && in_time,
        format!(
            "{}; {:.1}s (budget {}s)",
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

fn convergence_rate() -> Outcome {
    let points = run_convergence(&ConvergenceConfig::default()).expect("convergence study");
    let slope = log_log_slope(&points).expect("slope");
    let losses: Vec<String> = points
        .iter()
        .map(|p| format!("m={}:{:.3e}", p.m, p.mean_loss))
        .collect();
    Outcome::new(
        (-1.4..=-0.6).contains(&slope),
        format!("slope {slope:.3} in [-1.4, -0.6] ({})", losses.join(" ")),
    )
}

fn figure_one() -> Outcome {
    let mut failures = Vec::new();
    for op in [Operation::Mul, Operation::Div, Operation::Pow] {
        let config = SynthConfig {
            operation: op,
            ..SynthConfig::default()
        };
        let summary = summarize(&run_synth(&config).expect("synth run"));
        let mean = |e: Estimator, m: usize| {
            summary
                .iter()
                .find(|r| r.estimator == e && r.m == m)
                .map(|r| r.mean_loss)
                .expect("summary row")
        };
        for e in Estimator::ALL {
            if !(mean(e, 50) < mean(e, 10)) {
                failures.push(format!(
                    "{} {}: L(50)={:.4} >= L(10)={:.4}",
                    op.as_str(),
                    e.as_str(),
                    mean(e, 50),
                    mean(e, 10)
                ));
            }
        }
        for &m in &config.m_values {
            if !(mean(Estimator::Mu1, m) <= mean(Estimator::Mu2, m)) {
                failures.push(format!(
                    "{} m={m}: mu1 {:.4} > mu2 {:.4}",
                    op.as_str(),
                    mean(Estimator::Mu1, m),
                    mean(Estimator::Mu2, m)
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "mul/div/pow: L(50) < L(10) for mu1, mu2, mu3 and L(mu1) <= L(mu2) at every m".to_string()
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

/// Squared error of `Σ αᵢ Φ(xᵢ)` against the embedding of N(0, 1) under the
/// unit Gaussian kernel, using the closed forms
/// `⟨Φ(x), μ⟩ = exp(−x²/4)/√2` and `‖μ‖² = 1/√3`.
fn standard_normal_error(xs: &[f64], weights: &[f64]) -> f64 {
    let spec = KernelSpec::gaussian(1.0).unwrap();
    let mu = WeightedExpansion::new(
        PointSet::from_scalars(xs.to_vec()).unwrap(),
        weights.to_vec(),
        spec,
    )
    .unwrap();
    let quadratic = inner(&mu, &mu).unwrap();
    let cross: f64 = xs
        .iter()
        .zip(weights)
        .map(|(x, a)| a * (-x * x / 4.0).exp() / 2f64.sqrt())
        .sum();
    quadratic - 2.0 * cross + 1.0 / 3f64.sqrt()
}

fn weight_dichotomy() -> Outcome {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mean_error = |m: usize, pinned: bool| {
        (0..20u64)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(500 + s);
                let xs: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
                let weights: Vec<f64> = if pinned {
                    (0..m)
                        .map(|i| if i == 0 { 0.5 } else { 0.5 / (m - 1) as f64 })
                        .collect()
                } else {
                    vec![1.0 / m as f64; m]
                };
                standard_normal_error(&xs, &weights)
            })
            .sum::<f64>()
            / 20.0
    };
    let (uniform_small, uniform_large) = (mean_error(50, false), mean_error(2000, false));
    let (pinned_small, pinned_large) = (mean_error(50, true), mean_error(2000, true));
    let uniform_ratio = uniform_large / uniform_small;
    let pinned_ratio = pinned_large / pinned_small;
    Outcome::new(
        uniform_ratio < 0.25 && pinned_ratio > 0.5,
        format!(
            "uniform m2000/m50 = {uniform_ratio:.4} (< 0.25), pinned = {pinned_ratio:.4} (> 0.5)"
        ),
    )
}

fn cubic_pair(seed: u64, m: usize) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cause = Uniform::new(-1.0, 1.0);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let x: Vec<f64> = (0..m).map(|_| cause.sample(&mut rng)).collect();
    let y = x
        .iter()
        .map(|x| x + x.powi(3) + noise.sample(&mut rng))
        .collect();
    PairedSample::new(format!("sim{seed}"), x, y, None).unwrap()
}

fn anm_asymmetry() -> Outcome {
    let config = AnmConfig::default();
    let forward = (0..50u64)
        .filter(|&s| {
            let r =
                infer_pair(&cubic_pair(9000 + s, 300), &AnmConfig { seed: s, ..config }).unwrap();
            r.delta_xy < r.delta_yx
        })
        .count();
    let (mut fwd, mut bwd) = (0.0, 0.0);
    for s in 0..50u64 {
        let r = infer_pair(&cubic_pair(9500 + s, 400), &AnmConfig { seed: s, ..config }).unwrap();
        fwd += r.delta_xy / 50.0;
        bwd += r.delta_yx / 50.0;
    }
    Outcome::new(
        forward >= 45 && fwd < 0.3 * bwd,
        format!(
            "forward in {forward}/50 runs at m=300 (>= 45); mean delta at m=400 fwd {fwd:.3e} vs bwd {bwd:.3e} (ratio {:.3} < 0.3)",
            fwd / bwd
        ),
    )
}

fn exact_versus_rff() -> Outcome {
    let exact = AnmConfig {
        mode: EstimatorMode::Exact,
        ..AnmConfig::default()
    };
    let mut gaps = [0.0f64; 2];
    for s in 0..20u64 {
        let pair = cubic_pair(7000 + s, 50);
        let config = AnmConfig { seed: s, ..exact };
        let reference = infer_pair(&pair, &config).unwrap();
        for (k, features) in [2000, 100].into_iter().enumerate() {
            let approx = infer_pair(
                &pair,
                &AnmConfig {
                    mode: EstimatorMode::Rff { features },
                    ..config
                },
            )
            .unwrap();
            let gap = (reference.delta_xy - approx.delta_xy)
                .abs()
                .max((reference.delta_yx - approx.delta_yx).abs());
            gaps[k] += gap / 20.0;
        }
    }
    Outcome::new(
        gaps[0] <= 0.02 && gaps[1] <= 0.1,
        format!(
            "mean |exact - rff|: D=2000 {:.4} (<= 0.02), D=100 {:.4} (<= 0.1)",
            gaps[0], gaps[1]
        ),
    )
}

fn synthetic_suite_accuracy() -> Outcome {
    let suite = synthetic_suite(0, 300).unwrap();
    let outcome = run_samples(&suite, &AnmConfig::default()).unwrap();
    let wrong: Vec<&str> = outcome
        .reports
        .iter()
        .filter(|r| r.correct() != Some(true))
        .map(|r| r.pair_id.as_str())
        .collect();
    Outcome::new(
        outcome.correct_count() >= 10,
        format!(
            "{}/12 correct (>= 10); misses: {:?}",
            outcome.correct_count(),
            wrong
        ),
    )
}

/// Optional: a user-supplied benchmark directory with `meta.csv`.
fn benchmark_accuracy() -> Option<Outcome> {
    let Some(dir) = std::env::var_os("KRV_BENCHMARK_DIR").map(PathBuf::from) else {
        return Outcome::skipped(
            "6b benchmark accuracy: set KRV_BENCHMARK_DIR to a pair directory with meta.csv",
        );
    };
    let meta = std::env::var_os("KRV_BENCHMARK_META")
        .map(PathBuf::from)
        .unwrap_or_else(|| dir.join("meta.csv"));
    match run_pairs(&dir, &meta, &AnmConfig::default()) {
        Ok(outcome) => Some(Outcome::new(
            outcome.full_rate_accuracy() >= 0.70,
            format!(
                "{} pairs, accuracy at full decision rate {:.3} (>= 0.70)",
                outcome.reports.len(),
                outcome.full_rate_accuracy()
            ),
        )),
        Err(e) => Some(Outcome::new(false, format!("benchmark run failed: {e}"))),
    }
}

fn reduced_set() -> Outcome {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let m = 50;
    let target = (0.4 * m as f64).ceil() as usize;
    let mut worst_full: f64 = 0.0;
    let mut wins = 0;
    for s in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + s);
        let points =
            PointSet::from_scalars((0..m).map(|_| normal.sample(&mut rng)).collect()).unwrap();
        let sigma = kernel_rv::median_heuristic(&points).unwrap();
        let mu = embed_sample(&points, KernelSpec::gaussian(sigma).unwrap()).unwrap();
        let full = reduce_random(&mu, m, Ridge::Default, s).unwrap();
        worst_full = worst_full.max(mmd_sq(&full.reduced, &mu).unwrap());
        let reduced = reduce_random(&mu, target, Ridge::Default, s).unwrap();
        let subsample = embed_sample(&points.select(&reduced.kept_indices), *mu.spec()).unwrap();
        if mmd_sq(&reduced.reduced, &mu).unwrap() < mmd_sq(&subsample, &mu).unwrap() {
            wins += 1;
        }
    }
    Outcome::new(
        worst_full <= 1e-10 && wins >= 16,
        format!("full-size recovery error {worst_full:.2e} (<= 1e-10); refit beats uniform subsample in {wins}/20 (>= 16)"),
    )
}

fn quantization() -> Outcome {
    let spec = KernelSpec::gaussian(1.0).unwrap();
    let mu = WeightedExpansion::new(
        PointSet::from_scalars(vec![-1.0, 0.5, 2.0]).unwrap(),
        vec![0.2, 0.5, 0.3],
        spec,
    )
    .unwrap();
    let sample = quantize_to_sample(&mu, 10_000).unwrap();
    let error = mmd_sq(&mu, &embed_sample(&sample.points, spec).unwrap()).unwrap();
    Outcome::new(
        error <= 1e-2,
        format!("squared distance at m=1e4: {error:.3e} (<= 1e-2)"),
    )
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-1e4f64..1e4).prop_map(Expr::Const),
        prop::sample::select(vec![0.0, 3.0, -0.5, 1e-9, 6.02e23]).prop_map(Expr::Const),
        "[A-Z][A-Za-z0-9_]{0,3}".prop_map(Expr::Var),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (prop::sample::select(Builtin::ALL.to_vec()), inner.clone())
                .prop_map(|(f, e)| Expr::call(f, e)),
            (
                prop::sample::select(vec![
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::Pow
                ]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
        ]
    })
}

fn parser_properties() -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let round_trip = runner.run(&arb_expr(), |e| {
        let text = e.to_string();
        let back: Expr = text
            .parse()
            .map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
        Ok(())
    });
    let x = || Expr::var("X");
    let examples = [
        (
            "X+Y*Z",
            Expr::binary(
                BinaryOp::Add,
                x(),
                Expr::binary(BinaryOp::Mul, Expr::var("Y"), Expr::var("Z")),
            ),
        ),
        (
            "X^Y^Z",
            Expr::binary(
                BinaryOp::Pow,
                x(),
                Expr::binary(BinaryOp::Pow, Expr::var("Y"), Expr::var("Z")),
            ),
        ),
        (
            "-X^2",
            Expr::neg(Expr::binary(BinaryOp::Pow, x(), Expr::Const(2.0))),
        ),
    ];
    let examples_hold = examples
        .iter()
        .all(|(text, expected)| text.parse::<Expr>().as_ref() == Ok(expected));
    let detail = match &round_trip {
        Ok(()) => "1000 random ASTs round-trip".to_string(),
        Err(e) => format!("round trip failed: {e}"),
    };
    Outcome::new(
        round_trip.is_ok() && examples_hold,
        format!("{detail}; precedence examples hold: {examples_hold}"),
    )
}

fn run_synth_binary(out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_krv"))
        .args([
            "synth", "--op", "div", "--seed", "11", "--reps", "5", "--out",
        ])
        .arg(out)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    if !(run_synth_binary(&first) && run_synth_binary(&second)) {
        return Outcome::new(false, "krv synth failed");
    }
    let (a, b) = (
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap(),
    );
    Outcome::new(
        !a.is_empty() && a == b,
        format!(
            "two `krv synth` runs wrote {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        (
            "1 convergence rate",
            convergence_rate,
            Some(Duration::from_secs(120)),
        ),
        (
            "2 figure-1 estimator ordering",
            figure_one,
            Some(Duration::from_secs(300)),
        ),
        ("3 weight dichotomy", weight_dichotomy, None),
        (
            "4 ANM asymmetry",
            anm_asymmetry,
            Some(Duration::from_secs(180)),
        ),
        ("5 exact vs RFF", exact_versus_rff, None),
        ("6 synthetic pair suite", synthetic_suite_accuracy, None),
        ("7 reduced set", reduced_set, None),
        ("8 quantization", quantization, None),
        ("9 parser properties", parser_properties, None),
        ("10 determinism", determinism, None),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check, budget) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        outcome = match budget {
            Some(budget) => within_budget(outcome, elapsed, budget),
            None => Outcome::new(
                outcome.passed,
                format!("{}; {:.1}s", outcome.detail, elapsed.as_secs_f64()),
            ),
        };
        println!(
            "[{}] {name}: {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
        failed += usize::from(!outcome.passed);
        if name.starts_with("6 ") {
            if let Some(bench) = benchmark_accuracy() {
                println!(
                    "[{}] 6b benchmark accuracy: {}",
                    if bench.passed { "PASS" } else { "FAIL" },
                    bench.detail
                );
                failed += usize::from(!bench.passed);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
