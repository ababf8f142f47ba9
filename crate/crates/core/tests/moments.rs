use heatlab::chaos::{chaos_bound, chaos_terms, term_ratios, ChaosConfig};
use heatlab::fk::{
    cross_energy_mean, log_weights, skorohod_moment, stratonovich_moment, InitialCondition, MomentConfig, NoiseKind,
    Sense,
};
use heatlab::kernels::{SpaceKernelSpec, TimeKernelSpec};
use heatlab::presets;
use proptest::prelude::*;

fn riesz_cfg(k: usize, t: f64) -> MomentConfig {
    let p = presets::riesz(0.5, 0.5, 1).unwrap();
    let mut c = MomentConfig::new(p.gamma, p.lambda, k, t);
    c.samples = 400;
    c.steps = 16;
    c
}

#[test]
fn worker_count_does_not_change_results() {
    let mut c = riesz_cfg(3, 0.5);
    c.workers = 1;
    let a = log_weights(&c).unwrap();
    let ea = skorohod_moment(&c).unwrap();
    c.workers = 3;
    let b = log_weights(&c).unwrap();
    let eb = skorohod_moment(&c).unwrap();
    assert_eq!(a, b);
    assert_eq!(ea.log_mean.to_bits(), eb.log_mean.to_bits());
    assert_eq!(ea.stderr_log.to_bits(), eb.stderr_log.to_bits());
}

#[test]
fn first_moment_of_bump_is_heat_semigroup() {
    let mut c = riesz_cfg(1, 0.8);
    c.samples = 20_000;
    c.x = vec![0.4];
    let u0 = InitialCondition::GaussianBump { center: vec![-0.2], width: 0.6 };
    c.u0 = u0.clone();
    let (m, se) = skorohod_moment(&c).unwrap().mean();
    let exact = u0.heat(0.8, &[0.4]);
    assert!((m - exact).abs() < 3.0 * se, "{m} +- {se} vs {exact}");
}

#[test]
fn stratonovich_first_moment_at_least_one() {
    let mut c = riesz_cfg(1, 0.5);
    c.sense = Sense::Stratonovich;
    let e = stratonovich_moment(&c).unwrap();
    assert!(e.log_mean >= 0.0);
}

#[test]
fn stratonovich_rejects_inadmissible_self_energy() {
    let g = TimeKernelSpec::riesz_time(0.6).unwrap();
    let l = SpaceKernelSpec::riesz(0.9, 1).unwrap();
    let mut c = MomentConfig::new(g, l, 1, 1.0);
    c.sense = Sense::Stratonovich;
    assert_eq!(stratonovich_moment(&c).unwrap_err().reason(), "inadmissible_self_energy");
    c.sense = Sense::Skorohod;
    c.k = 2;
    c.samples = 10;
    assert!(skorohod_moment(&c).is_ok());
}

#[test]
fn time_independent_noise_gives_finite_positive_log_moment() {
    let mut c = riesz_cfg(2, 0.5);
    c.noise_kind = NoiseKind::TimeIndependent;
    let e = skorohod_moment(&c).unwrap();
    assert!(e.log_mean.is_finite() && e.log_mean > 0.0);
}

#[test]
fn log_moment_per_k_nondecreasing() {
    let mut prev: Option<(f64, f64)> = None;
    for k in 2..=4 {
        let mut c = riesz_cfg(k, 0.5);
        c.samples = 2000;
        c.seed = 30 + k as u64;
        let e = skorohod_moment(&c).unwrap();
        let cur = (e.log_mean / k as f64, e.stderr_log / k as f64);
        if let Some(p) = prev {
            assert!(cur.0 >= p.0 - 3.0 * (p.1.powi(2) + cur.1.powi(2)).sqrt(), "{p:?} -> {cur:?}");
        }
        prev = Some(cur);
    }
}

#[test]
fn log_moment_nondecreasing_in_t() {
    let mut prev = f64::NEG_INFINITY;
    for &t in &[0.25, 0.5, 1.0] {
        let mut c = riesz_cfg(2, t);
        c.samples = 2000;
        let e = skorohod_moment(&c).unwrap();
        assert!(e.log_mean >= prev - 3.0 * e.stderr_log);
        prev = e.log_mean;
    }
}

fn chaos_cfg(t: f64, samples: usize) -> ChaosConfig {
    let p = presets::riesz(0.5, 0.5, 1).unwrap();
    ChaosConfig::new(p.gamma, p.lambda, t, samples, 16, 21)
}

#[test]
fn first_chaos_term_matches_spectral_mean() {
    let cfg = chaos_cfg(0.5, 8000);
    let t1 = &chaos_terms(1, &cfg).unwrap()[1];
    let exact = cross_energy_mean(&cfg.gamma, &cfg.lambda, 0.5, 1e-9).unwrap();
    assert!((t1.value - exact).abs() < 3.0 * t1.stderr, "{} +- {} vs {exact}", t1.value, t1.stderr);
}

#[test]
fn chaos_terms_respect_simplex_bound() {
    let cfg = chaos_cfg(0.5, 4000);
    let terms = chaos_terms(3, &cfg).unwrap();
    for t in &terms[1..] {
        let b = chaos_bound(t.n, &cfg.gamma, &cfg.lambda, 0.5, 2.0).unwrap();
        assert!(t.value <= b + 3.0 * t.stderr, "n = {}: {} vs {b}", t.n, t.value);
    }
}

#[test]
fn chaos_terms_decay_at_small_t() {
    let cfg = chaos_cfg(0.05, 4000);
    let r = term_ratios(&chaos_terms(5, &cfg).unwrap());
    assert!(r.iter().all(|&x| x < 1.0), "{r:?}");
}

proptest! {
    #[test]
    fn heat_of_bump_bounded_and_continuous_at_zero(c in -2.0f64..2.0, w in 0.1f64..3.0, x in -3.0f64..3.0, t in 0.0f64..5.0) {
        let u0 = InitialCondition::GaussianBump { center: vec![c], width: w };
        let h = u0.heat(t, &[x]);
        prop_assert!(h > 0.0 && h <= 1.0 + 1e-15);
        prop_assert!((u0.heat(0.0, &[x]) - u0.ln_eval(&[x]).exp()).abs() < 1e-14);
    }
}
