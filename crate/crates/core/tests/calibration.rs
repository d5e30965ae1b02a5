//! Noise floor of the empirical distances on exact draws.

use rand_distr::{Distribution, StandardNormal};

use splitmc::metrics::{binned_tv, w1_empirical_vs_normal, Gaussian1d, Mixture1d, Reference};
use splitmc::rng::seeded;

fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn binned_tv_noise_floor_on_exact_draws() {
    let law = Mixture1d::single(Gaussian1d::new(0.0, 1.0));
    let xs = normal_draws(100_000, 1);
    let tv = binned_tv(&xs, Reference::Analytic(&law), 40).unwrap();
    assert!(tv < 0.02, "{tv}");
    let ys = normal_draws(100_000, 2);
    let tv2 = binned_tv(&xs, Reference::Samples(&ys), 40).unwrap();
    assert!(tv2 < 0.02, "{tv2}");
}

#[test]
fn binned_tv_detects_a_shift() {
    let law = Mixture1d::single(Gaussian1d::new(0.0, 1.0));
    let xs: Vec<f64> = normal_draws(100_000, 3).into_iter().map(|x| x + 0.5).collect();
    let tv = binned_tv(&xs, Reference::Analytic(&law), 40).unwrap();
    let exact = Gaussian1d::new(0.5, 1.0).tv(&Gaussian1d::new(0.0, 1.0));
    assert!((tv - exact).abs() < 0.03, "{tv} vs {exact}");
}

#[test]
fn w1_noise_floor_shrinks_with_sample_size() {
    let small = w1_empirical_vs_normal(&normal_draws(1_000, 4), 0.0, 1.0);
    let large = w1_empirical_vs_normal(&normal_draws(100_000, 5), 0.0, 1.0);
    assert!(large < 0.01, "{large}");
    assert!(large < small);
}
