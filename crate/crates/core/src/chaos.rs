//! Wiener chaos terms n!‖f_n‖² of the second moment for flat initial data,
//! estimated as T_n = E[Iⁿ]/n! with I the cross energy of two independent
//! paths started at the same point.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{jackknife, mean_stderr};
use crate::fk::{in_pool, skorohod_moment, MomentConfig};
use crate::kernels::{SpaceKernelSpec, TimeKernelSpec};
use crate::paths::{derive_seed, sample_paths, EnergyPlan, QuadratureRule};
use crate::simplex::lemma1_bound;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosConfig {
    pub gamma: TimeKernelSpec,
    pub lambda: SpaceKernelSpec,
    pub t: f64,
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    pub rule: QuadratureRule,
    pub workers: usize,
}

impl ChaosConfig {
    pub fn new(gamma: TimeKernelSpec, lambda: SpaceKernelSpec, t: f64, samples: usize, steps: usize, seed: u64) -> Self {
        ChaosConfig { gamma, lambda, t, samples, steps, seed, rule: QuadratureRule::default(), workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosTerm {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
    pub method: &'static str,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosSum {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
    pub terms: Vec<ChaosTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosComparison {
    pub partial: ChaosSum,
    pub fk_mean: f64,
    pub fk_stderr: f64,
    pub combined_stderr: f64,
    /// (partial - fk) / combined_stderr
    pub z: f64,
}

/// Cross energies of `samples` independent path pairs, in sample order.
pub fn cross_energies(cfg: &ChaosConfig) -> Result<Vec<f64>> {
    if cfg.samples < 2 {
        return Err(Error::InadmissibleConfig("need at least 2 samples".into()));
    }
    let d = cfg.lambda.dim;
    let plan = EnergyPlan::new(&cfg.gamma, &cfg.lambda, cfg.rule, cfg.t, cfg.steps)?;
    let start = vec![0.0; d];
    let one = |b: usize| -> Result<f64> {
        let bundle = sample_paths(2, d, cfg.t, cfg.steps, derive_seed(cfg.seed, b as u64), &start)?;
        plan.energy(bundle.path(0), bundle.path(1), false)
    };
    in_pool(cfg.workers, || (0..cfg.samples).into_par_iter().map(one).collect::<Result<Vec<f64>>>())?
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn term_from(n: usize, energies: &[f64]) -> ChaosTerm {
    if n == 0 {
        return ChaosTerm { n, value: 1.0, stderr: 0.0, method: "exact", warning: None };
    }
    let f = factorial(n);
    let xs: Vec<f64> = energies.iter().map(|e| e.powi(n as i32) / f).collect();
    let est = mean_stderr(&xs);
    let s1: f64 = xs.iter().map(|x| x.abs()).sum();
    let s2: f64 = xs.iter().map(|x| x * x).sum();
    let ess = if s2 > 0.0 { s1 * s1 / s2 } else { xs.len() as f64 };
    let warning = (ess < 0.01 * xs.len() as f64)
        .then(|| format!("degenerate_variance: effective sample size {ess:.1} of {}", xs.len()));
    ChaosTerm { n, value: est.mean, stderr: est.stderr, method: "path_mc", warning }
}

pub fn chaos_term(n: usize, cfg: &ChaosConfig) -> Result<ChaosTerm> {
    if n == 0 {
        return Ok(term_from(0, &[]));
    }
    Ok(term_from(n, &cross_energies(cfg)?))
}

/// T_0, ..., T_N from one shared set of path pairs.
pub fn chaos_terms(order: usize, cfg: &ChaosConfig) -> Result<Vec<ChaosTerm>> {
    if order == 0 {
        return Ok(vec![term_from(0, &[])]);
    }
    let e = cross_energies(cfg)?;
    Ok((0..=order).map(|n| term_from(n, &e)).collect())
}

/// Σ_{n ≤ N} T_n with a jackknife error over the shared samples.
pub fn chaos_partial_sum(order: usize, cfg: &ChaosConfig) -> Result<ChaosSum> {
    if order == 0 {
        return Ok(ChaosSum { order, value: 1.0, stderr: 0.0, terms: vec![term_from(0, &[])] });
    }
    let e = cross_energies(cfg)?;
    let terms: Vec<ChaosTerm> = (0..=order).map(|n| term_from(n, &e)).collect();
    let rows: Vec<Vec<f64>> = e
        .iter()
        .map(|&x| (1..=order).map(|n| x.powi(n as i32) / factorial(n)).collect())
        .collect();
    let (v, se) = jackknife(&rows, |m| 1.0 + m.iter().sum::<f64>());
    Ok(ChaosSum { order, value: v, stderr: se, terms })
}

/// Partial sum against the k = 2 Skorohod moment from an independent seed stream.
pub fn compare_with_fk(order: usize, cfg: &ChaosConfig, fk_samples: usize) -> Result<ChaosComparison> {
    let partial = chaos_partial_sum(order, cfg)?;
    let mut m = MomentConfig::new(cfg.gamma, cfg.lambda.clone(), 2, cfg.t);
    m.samples = fk_samples;
    m.steps = cfg.steps;
    m.seed = derive_seed(cfg.seed, u64::MAX);
    m.rule = cfg.rule;
    m.workers = cfg.workers;
    let (fk_mean, fk_stderr) = skorohod_moment(&m)?.mean();
    let combined = (partial.stderr.powi(2) + fk_stderr.powi(2)).sqrt();
    let z = (partial.value - fk_mean) / combined;
    Ok(ChaosComparison { partial, fk_mean, fk_stderr, combined_stderr: combined, z })
}

/// ‖u0‖²·Cⁿ·(simplex bound) with C = 2∫_0^t γ and ‖u0‖ = 1.
pub fn chaos_bound(n: usize, gamma: &TimeKernelSpec, lambda: &SpaceKernelSpec, t: f64, big_n: f64) -> Result<f64> {
    let c = 2.0 * gamma.integral(t);
    Ok(c.powi(n as i32) * lemma1_bound(lambda, t, n, big_n)?)
}

/// T_{n+1}/T_n for consecutive terms.
pub fn term_ratios(terms: &[ChaosTerm]) -> Vec<f64> {
    terms.windows(2).map(|w| w[1].value / w[0].value).collect()
}

pub fn write_terms_csv<W: Write>(w: W, terms: &[ChaosTerm]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "value", "stderr"])?;
    for t in terms {
        wr.write_record([t.n.to_string(), t.value.to_string(), t.stderr.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant_cfg() -> ChaosConfig {
        ChaosConfig::new(
            TimeKernelSpec::constant(1.0).unwrap(),
            SpaceKernelSpec::constant_test(1.0, 1).unwrap(),
            1.0,
            20,
            8,
            3,
        )
    }

    #[test]
    fn order_zero_is_one() {
        let cfg = constant_cfg();
        assert_eq!(chaos_term(0, &cfg).unwrap().value, 1.0);
        assert_eq!(chaos_partial_sum(0, &cfg).unwrap().value, 1.0);
    }

    #[test]
    fn constant_kernels_are_deterministic() {
        let cfg = constant_cfg();
        let t2 = chaos_term(2, &cfg).unwrap();
        assert_relative_eq!(t2.value, 0.5, max_relative = 1e-12);
        let s = chaos_partial_sum(10, &cfg).unwrap();
        assert_relative_eq!(s.value, std::f64::consts::E, max_relative = 1e-7);
        assert!(s.stderr < 1e-10);
    }

    #[test]
    fn partial_sums_monotone() {
        let cfg = ChaosConfig::new(
            TimeKernelSpec::riesz_time(0.5).unwrap(),
            SpaceKernelSpec::riesz(0.5, 1).unwrap(),
            0.5,
            200,
            16,
            11,
        );
        let terms = chaos_terms(5, &cfg).unwrap();
        assert!(terms.iter().all(|t| t.value >= 0.0));
        let mut acc = 0.0;
        for t in &terms {
            let next = acc + t.value;
            assert!(next >= acc);
            acc = next;
        }
        let s = chaos_partial_sum(5, &cfg).unwrap();
        assert_relative_eq!(s.value, acc, max_relative = 1e-12);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_terms_csv(&mut buf, &chaos_terms(2, &constant_cfg()).unwrap()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,value,stderr\n0,1,0\n1,1,"));
    }
}
