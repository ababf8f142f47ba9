//! Feynman-Kac Monte Carlo for E[u_{t,x}^k], the variance of V_{t,x}, and
//! intermittency exponent fits.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{log_mean_exp, LogMeanEstimate};
use crate::kernels::{SpaceFamily, SpaceKernelSpec, TimeKernelSpec};
use crate::paths::{derive_seed, sample_paths, EnergyPlan, QuadratureRule};
use crate::quad::{self, Tails, Tol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Skorohod,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    TimeDependent,
    /// W(x) only: γ ≡ 1 inside every double integral.
    TimeIndependent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    One,
    /// exp(-|x - center|² / (2 width²))
    GaussianBump { center: Vec<f64>, width: f64 },
}

impl InitialCondition {
    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialCondition::One => 0.0,
            InitialCondition::GaussianBump { center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                -r2 / (2.0 * width * width)
            }
        }
    }

    /// Heat semigroup p_t u0(x) in closed form.
    pub fn heat(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            InitialCondition::One => 1.0,
            InitialCondition::GaussianBump { center, width } => {
                let w2 = width * width;
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                (w2 / (w2 + t)).powf(x.len() as f64 / 2.0) * (-r2 / (2.0 * (w2 + t))).exp()
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if let InitialCondition::GaussianBump { center, width } = self {
            if center.len() != d {
                return Err(Error::InadmissibleConfig(format!("bump center needs {d} coordinates")));
            }
            if !(*width > 0.0 && width.is_finite()) {
                return Err(Error::InadmissibleConfig(format!("bump width {width} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentConfig {
    pub sense: Sense,
    pub noise_kind: NoiseKind,
    pub gamma: TimeKernelSpec,
    pub lambda: SpaceKernelSpec,
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u0: InitialCondition,
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    pub rule: QuadratureRule,
    /// 0 selects the default pool size.
    pub workers: usize,
}

impl MomentConfig {
    pub fn new(gamma: TimeKernelSpec, lambda: SpaceKernelSpec, k: usize, t: f64) -> Self {
        let d = lambda.dim;
        MomentConfig {
            sense: Sense::Skorohod,
            noise_kind: NoiseKind::TimeDependent,
            gamma,
            lambda,
            k,
            t,
            x: vec![0.0; d],
            u0: InitialCondition::One,
            samples: 1000,
            steps: 32,
            seed: 0,
            rule: QuadratureRule::default(),
            workers: 0,
        }
    }

    pub fn effective_gamma(&self) -> TimeKernelSpec {
        match self.noise_kind {
            NoiseKind::TimeDependent => self.gamma,
            NoiseKind::TimeIndependent => TimeKernelSpec::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InadmissibleConfig(m));
        if self.k == 0 {
            return bad("moment order k must be at least 1".into());
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t = {} must be positive", self.t));
        }
        if self.samples < 2 {
            return bad("need at least 2 samples".into());
        }
        if self.x.len() != self.lambda.dim {
            return bad(format!("x has {} coordinates, kernel has d = {}", self.x.len(), self.lambda.dim));
        }
        self.u0.validate(self.lambda.dim)?;
        self.gamma.validate()?;
        self.lambda.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub log_mean: f64,
    pub stderr_log: f64,
    pub samples_used: usize,
    pub ess: f64,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
    pub config: MomentConfig,
}

impl MomentEstimate {
    /// Linear-scale mean and its delta-method standard error.
    pub fn mean(&self) -> (f64, f64) {
        let m = self.log_mean.exp();
        (m, m * self.stderr_log)
    }
}

pub(crate) fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-sample log-weights `Σ ln u0(B^i_t) + Σ_{i<j} I_ij (+ ½ Σ_i I_ii)`, in sample order.
pub fn log_weights(cfg: &MomentConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = cfg.lambda.dim;
    let need_pairs = cfg.k >= 2 || cfg.sense == Sense::Stratonovich;
    let plan = if need_pairs {
        let p = EnergyPlan::new(&cfg.effective_gamma(), &cfg.lambda, cfg.rule, cfg.t, cfg.steps)?;
        if cfg.sense == Sense::Stratonovich {
            p.check_self_admissible()?;
        }
        Some(p)
    } else {
        None
    };
    let one = |b: usize| -> Result<f64> {
        let bundle = sample_paths(cfg.k, d, cfg.t, cfg.steps.max(2), derive_seed(cfg.seed, b as u64), &cfg.x)?;
        let mut w = 0.0;
        for i in 0..cfg.k {
            w += cfg.u0.ln_eval(bundle.endpoint(i));
        }
        if let Some(plan) = &plan {
            for i in 0..cfg.k {
                if cfg.sense == Sense::Stratonovich {
                    w += 0.5 * plan.energy(bundle.path(i), bundle.path(i), true)?;
                }
                for j in (i + 1)..cfg.k {
                    w += plan.energy(bundle.path(i), bundle.path(j), false)?;
                }
            }
        }
        Ok(w)
    };
    in_pool(cfg.workers, || (0..cfg.samples).into_par_iter().map(one).collect::<Result<Vec<f64>>>())?
}

fn estimate(cfg: &MomentConfig) -> Result<MomentEstimate> {
    let clock = Instant::now();
    let w = log_weights(cfg)?;
    let LogMeanEstimate { log_mean, stderr_log, samples, ess } = log_mean_exp(&w);
    let mut warnings = Vec::new();
    if ess < 0.01 * samples as f64 {
        warnings.push(format!("degenerate_variance: effective sample size {ess:.1} of {samples}"));
    }
    Ok(MomentEstimate {
        log_mean,
        stderr_log,
        samples_used: samples,
        ess,
        warnings,
        runtime_s: clock.elapsed().as_secs_f64(),
        config: cfg.clone(),
    })
}

pub fn skorohod_moment(cfg: &MomentConfig) -> Result<MomentEstimate> {
    if cfg.sense != Sense::Skorohod {
        return Err(Error::InadmissibleConfig("skorohod_moment needs sense = skorohod".into()));
    }
    estimate(cfg)
}

pub fn stratonovich_moment(cfg: &MomentConfig) -> Result<MomentEstimate> {
    if cfg.sense != Sense::Stratonovich {
        return Err(Error::InadmissibleConfig("stratonovich_moment needs sense = stratonovich".into()));
    }
    estimate(cfg)
}

pub fn moment(cfg: &MomentConfig) -> Result<MomentEstimate> {
    estimate(cfg)
}

fn check_positive(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("t = {t} must be nonnegative")));
    }
    Ok(())
}

/// σ_t² = E ∫∫ γ(u-v) Λ(B_u - B_v) du dv = 2 (2π)^{-d} ∫_0^t (t-x) γ(x) φ(x/2) dx,
/// φ(w) = ∫ e^{-w|ξ|²} μ(dξ).
pub fn variance_v_spectral(gamma: &TimeKernelSpec, lambda: &SpaceKernelSpec, t: f64, tol: f64) -> Result<f64> {
    check_positive(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let singular = -gamma.beta() - phi_exponent(lambda);
    if singular <= -1.0 {
        return Err(Error::Divergent(format!(
            "self-energy integrand ~ x^{singular} at the diagonal"
        )));
    }
    let fail = RefCell::new(None);
    let r = quad::radial_interval(
        |x| {
            let g = if x > 0.0 { gamma.eval(x).unwrap_or(f64::NAN) } else { 0.0 };
            match lambda.gaussian_mu_transform(x / 2.0) {
                Ok(p) => (t - x) * g * p,
                Err(e) => {
                    fail.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        t,
        Tails { zero: Some(singular), inf: None },
        Tol::new(tol, tol),
    );
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    Ok(2.0 * (2.0 * PI).powf(-(lambda.dim as f64)) * r?.value)
}

/// Mean cross energy of two independent paths from the same point:
/// ∫∫ γ(u-v) (2π)^{-d} φ((u+v)/2) du dv.
pub fn cross_energy_mean(gamma: &TimeKernelSpec, lambda: &SpaceKernelSpec, t: f64, tol: f64) -> Result<f64> {
    check_positive(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let pe = phi_exponent(lambda);
    // u - v = x, (u + v)/2 = w: ∫∫ = 2 ∫_0^t γ(x) ∫_{x/2}^{t-x/2} φ(w) dw dx
    let inner = |x: f64| -> Result<f64> {
        let r = quad::radial_interval(
            |w| lambda.gaussian_mu_transform(w).unwrap_or(f64::NAN),
            x / 2.0,
            t - x / 2.0,
            Tails { zero: Some(-pe), inf: None },
            Tol::new(tol * 0.1, tol * 0.1),
        )?;
        Ok(r.value)
    };
    let fail = RefCell::new(None);
    let r = quad::radial_interval(
        |x| {
            let g = if x > 0.0 { gamma.eval(x).unwrap_or(f64::NAN) } else { 0.0 };
            match inner(x) {
                Ok(v) => g * v,
                Err(e) => {
                    fail.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        t,
        Tails { zero: Some(-gamma.beta()), inf: None },
        Tol::new(tol, tol),
    );
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    Ok(2.0 * (2.0 * PI).powf(-(lambda.dim as f64)) * r?.value)
}

/// φ(w) ~ w^{-e} as w → 0.
fn phi_exponent(lambda: &SpaceKernelSpec) -> f64 {
    let d = lambda.dim as f64;
    match &lambda.family {
        SpaceFamily::Riesz { eta } => eta / 2.0,
        SpaceFamily::Fractional { hurst } => hurst.iter().map(|h| 1.0 - h).sum(),
        SpaceFamily::Bessel { eta } => ((d - eta) / 2.0).max(0.0),
        SpaceFamily::White => d / 2.0,
        _ => 0.0,
    }
}

/// The exponent a entering the intermittency references; the mollified
/// white kernel stands in for δ_0 (a = 1 in d = 1).
pub fn reference_spatial_exponent(lambda: &SpaceKernelSpec) -> f64 {
    match lambda.family {
        SpaceFamily::MollifiedWhite { .. } | SpaceFamily::White => lambda.dim as f64,
        _ => lambda.spatial_exponent(),
    }
}

/// Reference (κ₁, κ₂) for log E[u^k] ≍ t^{κ₁} k^{κ₂}.
pub fn reference_exponents(gamma: &TimeKernelSpec, lambda: &SpaceKernelSpec, kind: NoiseKind) -> (f64, f64) {
    let a = reference_spatial_exponent(lambda);
    let k2 = (4.0 - a) / (2.0 - a);
    match kind {
        NoiseKind::TimeIndependent => (k2, k2),
        NoiseKind::TimeDependent => ((4.0 - 2.0 * gamma.beta() - a) / (2.0 - a), k2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub t: f64,
    pub k: usize,
    pub log_mean: f64,
    pub stderr_log: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntermittencyFit {
    pub kappa1: f64,
    pub kappa2: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

/// Least squares for ln(log_mean) = c + κ₁ ln t + κ₂ ln k.
pub fn fit_intermittency_exponents(table: &[SweepPoint]) -> Result<IntermittencyFit> {
    let mut ts: Vec<f64> = table.iter().map(|p| p.t).collect();
    let mut ks: Vec<usize> = table.iter().map(|p| p.k).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ks.sort_unstable();
    ks.dedup();
    if ts.len() < 3 || ks.len() < 3 {
        return Err(Error::IllConditionedFit(format!(
            "need at least 3 distinct t and k, got {} and {}",
            ts.len(),
            ks.len()
        )));
    }
    if let Some(p) = table.iter().find(|p| !(p.log_mean > 0.0 && p.stderr_log.is_finite() && p.t > 0.0)) {
        return Err(Error::IllConditionedFit(format!("point {p:?} has nonpositive log-moment or invalid error")));
    }
    let rows: Vec<[f64; 3]> = table.iter().map(|p| [1.0, p.t.ln(), (p.k as f64).ln()]).collect();
    let y: Vec<f64> = table.iter().map(|p| p.log_mean.ln()).collect();
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (r, yi) in rows.iter().zip(&y) {
        for i in 0..3 {
            b[i] += r[i] * yi;
            for j in 0..3 {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    let sol = solve3(a, b)?;
    let residuals = rows.iter().zip(&y).map(|(r, yi)| yi - (sol[0] * r[0] + sol[1] * r[1] + sol[2] * r[2])).collect();
    Ok(IntermittencyFit { intercept: sol[0], kappa1: sol[1], kappa2: sol[2], residuals })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c].abs() < 1e-12 * scale {
            return Err(Error::IllConditionedFit("normal equations are singular".into()));
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = ((c + 1)..3).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn variance_zero_time_and_linearity() {
        let g = TimeKernelSpec::riesz_time(0.5).unwrap();
        let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        assert_eq!(variance_v_spectral(&g, &l, 0.0, 1e-10).unwrap(), 0.0);
        let v = variance_v_spectral(&g, &l, 1.0, 1e-10).unwrap();
        let v2 = variance_v_spectral(&g.scaled(2.0), &l, 1.0, 1e-10).unwrap();
        assert_relative_eq!(v2, 2.0 * v, max_relative = 1e-12);
    }

    #[test]
    fn variance_closed_form_riesz() {
        // φ(w) = K w^{-η/2}: σ² = 2(2π)^{-1} K 2^{η/2} t^{2-β-η/2} B(1-β-η/2, 2)
        let (beta, eta) = (0.5, 0.5);
        let g = TimeKernelSpec::riesz_time(beta).unwrap();
        let l = SpaceKernelSpec::riesz(eta, 1).unwrap();
        let k = l.gaussian_mu_transform(1.0).unwrap();
        let p: f64 = 1.0 - beta - eta / 2.0;
        let exact = 2.0 / (2.0 * PI) * k * 2f64.powf(eta / 2.0) * 2f64.powf(2.0 - beta - eta / 2.0) / (p * (p + 1.0));
        assert_relative_eq!(variance_v_spectral(&g, &l, 2.0, 1e-11).unwrap(), exact, max_relative = 1e-8);
    }

    #[test]
    fn cross_mean_constant_kernels() {
        let g = TimeKernelSpec::constant(1.0).unwrap();
        let l = SpaceKernelSpec::constant_test(1.0, 1).unwrap();
        assert_relative_eq!(cross_energy_mean(&g, &l, 1.5, 1e-10).unwrap(), 2.25, max_relative = 1e-9);
    }

    #[test]
    fn reference_values() {
        let g = TimeKernelSpec::riesz_time(0.5).unwrap();
        let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        let (k1, k2) = reference_exponents(&g, &l, NoiseKind::TimeDependent);
        assert_relative_eq!(k1, 2.5 / 1.5, max_relative = 1e-15);
        assert_relative_eq!(k2, 3.5 / 1.5, max_relative = 1e-15);
        let (a, b) = reference_exponents(&g, &l, NoiseKind::TimeIndependent);
        assert_eq!(a, b);
        assert_relative_eq!(a, 3.5 / 1.5, max_relative = 1e-15);
        let w = SpaceKernelSpec::mollified_white(0.1).unwrap();
        let (k1, k2) = reference_exponents(&g, &w, NoiseKind::TimeDependent);
        assert_relative_eq!(k1, 2.0, max_relative = 1e-15);
        assert_relative_eq!(k2, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let mut table = Vec::new();
        for &t in &[0.5f64, 1.0, 2.0, 4.0] {
            for k in 2..=4 {
                let lm = 0.7 * t.powf(1.6) * (k as f64).powf(2.3);
                table.push(SweepPoint { t, k, log_mean: lm, stderr_log: 0.01 });
            }
        }
        let f = fit_intermittency_exponents(&table).unwrap();
        assert_relative_eq!(f.kappa1, 1.6, max_relative = 1e-10);
        assert_relative_eq!(f.kappa2, 2.3, max_relative = 1e-10);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn fit_needs_three_levels() {
        let table: Vec<SweepPoint> =
            [(1.0, 2), (2.0, 2), (4.0, 3)].iter().map(|&(t, k)| SweepPoint { t, k, log_mean: 1.0, stderr_log: 0.1 }).collect();
        assert_eq!(fit_intermittency_exponents(&table).unwrap_err().reason(), "ill_conditioned_fit");
    }

    #[test]
    fn first_moment_flat_is_one() {
        let g = TimeKernelSpec::riesz_time(0.5).unwrap();
        let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        let mut cfg = MomentConfig::new(g, l, 1, 1.0);
        cfg.samples = 50;
        let e = skorohod_moment(&cfg).unwrap();
        assert_eq!(e.log_mean, 0.0);
        assert_eq!(e.stderr_log, 0.0);
    }

    #[test]
    fn constant_kernels_deterministic() {
        let g = TimeKernelSpec::constant(1.0).unwrap();
        let l = SpaceKernelSpec::constant_test(1.0, 1).unwrap();
        let mut cfg = MomentConfig::new(g, l, 2, 1.0);
        cfg.samples = 10;
        assert_relative_eq!(skorohod_moment(&cfg).unwrap().log_mean, 1.0, max_relative = 1e-14);
        cfg.sense = Sense::Stratonovich;
        // exp(Σ_{i<j} I + ½ Σ_i I_ii) = exp(1 + ½·2)
        assert_relative_eq!(stratonovich_moment(&cfg).unwrap().log_mean, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn sense_mismatch_rejected() {
        let cfg = MomentConfig::new(TimeKernelSpec::constant(1.0).unwrap(), SpaceKernelSpec::constant_test(1.0, 1).unwrap(), 2, 1.0);
        assert!(stratonovich_moment(&cfg).is_err());
    }
}
