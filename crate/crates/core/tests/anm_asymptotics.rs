use kernel_rv::anm::{
    anm_delta, infer_pair, AnmConfig, DeltaOptions, EstimatorMode, PairedSample, PolyFit,
};
use kernel_rv::Bandwidth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

fn simulate(seed: u64, m: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cause = Uniform::new(-1.0, 1.0);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let x: Vec<f64> = (0..m).map(|_| cause.sample(&mut rng)).collect();
    let u: Vec<f64> = (0..m).map(|_| noise.sample(&mut rng)).collect();
    let y = x.iter().zip(&u).map(|(x, u)| x + x.powi(3) + u).collect();
    (x, y, u)
}

#[test]
fn forward_score_with_true_model_shrinks() {
    let truth = PolyFit::from_monomial(vec![0.0, 1.0, 0.0, 1.0]);
    let options = DeltaOptions {
        bandwidth: Bandwidth::MEDIAN,
        mode: EstimatorMode::Exact,
        seed: 0,
    };
    let mean_delta = |m: usize| {
        (0..20)
            .map(|s| {
                let (x, y, u) = simulate(1000 + s, m);
                anm_delta(&x, &y, &truth, &u, &DeltaOptions { seed: s, ..options })
                    .unwrap()
                    .delta
            })
            .sum::<f64>()
            / 20.0
    };
    let small = mean_delta(50);
    let large = mean_delta(400);
    assert!(large < small, "m=400: {large}, m=50: {small}");
    assert!(large < 0.5 * small);
}

#[test]
fn backward_score_stays_above_forward() {
    let config = AnmConfig {
        mode: EstimatorMode::Exact,
        ..AnmConfig::default()
    };
    let wins = (0..20)
        .filter(|&s| {
            let (x, y, _) = simulate(2000 + s, 400);
            let pair = PairedSample::new(format!("sim{s}"), x, y, None).unwrap();
            let r = infer_pair(&pair, &AnmConfig { seed: s, ..config }).unwrap();
            r.delta_yx > r.delta_xy
        })
        .count();
    assert!(wins >= 18, "{wins}/20");
}
