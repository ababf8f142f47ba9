//! Periodic spectral synthesis of the mollified noise on a space-time grid,
//! the regularized Feynman-Kac functional along Brownian paths, and
//! Littlewood-Paley analysis of the resulting fields.

mod fft;
pub mod io;
pub mod lp;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{log_mean_exp, mean_stderr, McEstimate};
use crate::fk::{in_pool, InitialCondition};
use crate::kernels::{SpaceKernelSpec, TimeKernelSpec};
use crate::paths::{derive_seed, rng_for, sample_paths};
use crate::quad::{self, Tails, Tol};

pub use fft::wavenumber;
pub use io::{decode_field, encode_field, FieldBlob};
pub use lp::{
    besov_norm, besov_spectrum, estimate_regularity, littlewood_paley_blocks, BesovSpectrum, LpBlocks,
    RegularityEstimate, Weight,
};

const MAX_NOISE_DIM: usize = 3;

/// Space-time grid: `nt` time points of spacing `dt`, `nx` points per space
/// axis of spacing `dx`; space coordinates run over `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrid {
    pub nt: usize,
    pub dt: f64,
    pub nx: usize,
    pub dx: f64,
    pub dim: usize,
}

impl NoiseGrid {
    pub fn new(nt: usize, dt: f64, nx: usize, dx: f64, dim: usize) -> Result<Self> {
        let g = NoiseGrid { nt, dt, nx, dx, dim };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InadmissibleConfig(m));
        if !self.nt.is_power_of_two() || self.nt < 2 || !self.nx.is_power_of_two() || self.nx < 2 {
            return bad(format!("grid sizes must be powers of two >= 2, got nt = {}, nx = {}", self.nt, self.nx));
        }
        if !(self.dt > 0.0 && self.dt.is_finite() && self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("mesh sizes must be positive, got dt = {}, dx = {}", self.dt, self.dx));
        }
        if self.dim == 0 || self.dim > MAX_NOISE_DIM {
            return bad(format!("noise synthesis supports 1 <= d <= {MAX_NOISE_DIM}, got {}", self.dim));
        }
        let total = (self.nx as u128).pow(self.dim as u32) * self.nt as u128;
        if total > 1 << 26 {
            return bad(format!("grid has {total} points, limit is 2^26"));
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.nt];
        s.extend(std::iter::repeat_n(self.nx, self.dim));
        s
    }

    pub fn space_len(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.nt * self.space_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_t(&self) -> f64 {
        self.nt as f64 * self.dt
    }

    pub fn box_l(&self) -> f64 {
        self.nx as f64 * self.dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    pub grid: NoiseGrid,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub gamma: TimeKernelSpec,
    pub lambda: SpaceKernelSpec,
    /// Row-major over `grid.shape()`, time slowest.
    pub values: Vec<f64>,
}

impl NoiseField {
    pub fn zeros(grid: NoiseGrid, gamma: TimeKernelSpec, lambda: SpaceKernelSpec) -> Self {
        NoiseField { grid, epsilon: grid.dx, delta: grid.dt, seed: 0, gamma, lambda, values: vec![0.0; grid.len()] }
    }

    pub fn time_slice(&self, it: usize) -> &[f64] {
        let n = self.grid.space_len();
        &self.values[it * n..(it + 1) * n]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut f = self.clone();
        f.values.iter_mut().for_each(|v| *v *= factor);
        f
    }

    /// Multilinear interpolation at time `r` and point `x`, periodic in both.
    /// `wrapped` is set when `x` lies outside the box.
    pub fn interpolate(&self, r: f64, x: &[f64], wrapped: &mut bool) -> f64 {
        let g = &self.grid;
        let half = g.box_l() / 2.0;
        let mut base = [0usize; MAX_NOISE_DIM + 1];
        let mut frac = [0.0; MAX_NOISE_DIM + 1];
        let dims = g.dim + 1;
        let pos = |u: f64, n: usize| -> (usize, f64) {
            let fl = u.floor();
            ((fl as i64).rem_euclid(n as i64) as usize, u - fl)
        };
        (base[0], frac[0]) = pos(r / g.dt, g.nt);
        for c in 0..g.dim {
            if x[c] < -half || x[c] >= half {
                *wrapped = true;
            }
            (base[c + 1], frac[c + 1]) = pos((x[c] + half) / g.dx, g.nx);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            let mut flat = 0;
            for a in 0..dims {
                let n = if a == 0 { g.nt } else { g.nx };
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                flat = flat * n + if up { (base[a] + 1) % n } else { base[a] };
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc
    }
}

/// Per-bin variances for periodic synthesis, with the spectral sum as the
/// covariance oracle.
#[derive(Debug, Clone)]
pub struct NoiseSynth {
    pub grid: NoiseGrid,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: TimeKernelSpec,
    pub lambda: SpaceKernelSpec,
    /// S(ω, ξ) / (T L^d) per FFT bin, row-major like the field.
    pub weights: Vec<f64>,
}

fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-8 { 1.0 - x * x / 3.0 } else { (x.sin() / x).powi(2) }
}

impl NoiseSynth {
    pub fn new(gamma: &TimeKernelSpec, lambda: &SpaceKernelSpec, grid: NoiseGrid, epsilon: f64, delta: f64) -> Result<Self> {
        grid.validate()?;
        gamma.validate()?;
        lambda.validate()?;
        if lambda.dim != grid.dim {
            return Err(Error::InadmissibleConfig(format!("kernel has d = {}, grid has d = {}", lambda.dim, grid.dim)));
        }
        if !(epsilon >= grid.dx) || !(delta >= grid.dt) {
            return Err(Error::AliasingViolation(format!(
                "mollifier scales epsilon = {epsilon}, delta = {delta} must be at least the mesh dx = {}, dt = {}",
                grid.dx, grid.dt
            )));
        }
        let (tb, lb) = (grid.box_t(), grid.box_l());
        let dw = 2.0 * PI / tb;
        let dk = 2.0 * PI / lb;
        let time: Vec<f64> = (0..grid.nt)
            .map(|m| {
                let w = wavenumber(m, grid.nt) * dw;
                if m == 0 { gamma.spectral_mass_to(dw / 2.0) / dw } else { gamma.spectral_density(w) * sinc2(w * delta / 2.0) }
            })
            .collect();
        let zero_cell = space_zero_cell(lambda, dk)?;
        let shape = grid.shape();
        let ns = grid.space_len();
        let mut space = vec![0.0; ns];
        let mut idx = vec![0usize; grid.dim];
        let mut xi = vec![0.0; grid.dim];
        for (n, s) in space.iter_mut().enumerate() {
            if n == 0 {
                *s = zero_cell;
                continue;
            }
            fft::unravel(n, &shape[1..], &mut idx);
            for c in 0..grid.dim {
                xi[c] = wavenumber(idx[c], grid.nx) * dk;
            }
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            *s = lambda.mu_density(&xi)? * (-epsilon * epsilon * r2).exp();
        }
        let norm = tb * lb.powi(grid.dim as i32);
        let mut weights = Vec::with_capacity(grid.len());
        for g in &time {
            weights.extend(space.iter().map(|s| g * s / norm));
        }
        Ok(NoiseSynth { grid, epsilon, delta, gamma: *gamma, lambda: lambda.clone(), weights })
    }

    /// Covariance at grid lag `(lag_t, lag_x)` of the synthesized field.
    pub fn covariance(&self, lag_t: usize, lag_x: &[usize]) -> f64 {
        let g = &self.grid;
        let shape = g.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut acc = quad::KahanSum::default();
        for (k, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            fft::unravel(k, &shape, &mut idx);
            let mut ph = idx[0] as f64 * lag_t as f64 / g.nt as f64;
            for c in 0..g.dim {
                ph += idx[c + 1] as f64 * lag_x[c] as f64 / g.nx as f64;
            }
            acc.add(w * (2.0 * PI * ph).cos());
        }
        acc.value()
    }

    pub fn sample(&self, seed: u64) -> NoiseField {
        let g = &self.grid;
        let n = g.len();
        let mut rng = rng_for(seed, 0);
        let mut buf: Vec<Complex64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(z, 0.0)
            })
            .collect();
        let shape = g.shape();
        fft::fft_nd(&mut buf, &shape, false);
        for (b, w) in buf.iter_mut().zip(&self.weights) {
            *b *= (n as f64 * w).sqrt();
        }
        fft::fft_nd(&mut buf, &shape, true);
        let values = buf.iter().map(|c| c.re / n as f64).collect();
        NoiseField {
            grid: *g,
            epsilon: self.epsilon,
            delta: self.delta,
            seed,
            gamma: self.gamma,
            lambda: self.lambda.clone(),
            values,
        }
    }
}

/// Average spectral density over the zero-frequency cell, taken as the ball
/// of equal volume (exact in d = 1).
fn space_zero_cell(lambda: &SpaceKernelSpec, dk: f64) -> Result<f64> {
    let d = lambda.dim as i32;
    let vol = dk.powi(d);
    let unit_ball = PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0 + 1.0);
    let r0 = (vol / unit_ball).powf(1.0 / d as f64);
    let rad = lambda.radial();
    let mass = quad::radial_interval(
        |r| lambda.radial_mass(r),
        0.0,
        r0,
        Tails { zero: Some(rad.zero), inf: None },
        Tol::new(1e-14, 1e-10),
    )?;
    Ok((mass.value + lambda.mu_atom()) / vol)
}

pub fn synthesize_noise(
    gamma: &TimeKernelSpec,
    lambda: &SpaceKernelSpec,
    grid: NoiseGrid,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<NoiseField> {
    Ok(NoiseSynth::new(gamma, lambda, grid, epsilon, delta)?.sample(seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedV {
    pub value: f64,
    /// The path left the periodic box and was wrapped.
    pub wrapped: bool,
}

/// ∫_0^t Ẇ(t - s, B_s) ds along a path sampled on `steps` intervals of
/// `[0, path_t]`, by the midpoint rule with the path interpolated linearly.
pub fn regularized_v(field: &NoiseField, path: &[f64], path_t: f64, t: f64) -> Result<RegularizedV> {
    let g = &field.grid;
    let d = g.dim;
    if path.len() < 2 * d || path.len() % d != 0 {
        return Err(Error::OutOfRange(format!("path of length {} does not hold d = {d} coordinates", path.len())));
    }
    let steps = path.len() / d - 1;
    if !(t >= 0.0 && t <= path_t * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange(format!("t = {t} outside the path horizon {path_t}")));
    }
    if t > g.box_t() {
        return Err(Error::OutOfRange(format!("t = {t} exceeds the field horizon {}", g.box_t())));
    }
    if t == 0.0 {
        return Ok(RegularizedV { value: 0.0, wrapped: false });
    }
    let h = path_t / steps as f64;
    let nq = ((2.0 * t / g.dt).ceil() as usize).max((t / h).ceil() as usize).max(1);
    let ds = t / nq as f64;
    let mut wrapped = false;
    let mut x = [0.0; MAX_NOISE_DIM];
    let mut sum = quad::KahanSum::default();
    for j in 0..nq {
        let s = (j as f64 + 0.5) * ds;
        let u = (s / h).min(steps as f64);
        let i = (u.floor() as usize).min(steps - 1);
        let f = u - i as f64;
        for c in 0..d {
            x[c] = (1.0 - f) * path[i * d + c] + f * path[(i + 1) * d + c];
        }
        sum.add(field.interpolate(t - s, &x[..d], &mut wrapped));
    }
    Ok(RegularizedV { value: sum.value() * ds, wrapped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionConfig {
    pub t_list: Vec<f64>,
    pub x_list: Vec<Vec<f64>>,
    pub u0: InitialCondition,
    pub inner_samples: usize,
    pub steps: usize,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub t_list: Vec<f64>,
    pub x_list: Vec<Vec<f64>>,
    /// ln u at (t_list[i], x_list[j]), row-major over i then j.
    pub log_u: Vec<f64>,
    pub stderr_log: Vec<f64>,
    pub ess: Vec<f64>,
    pub wrapped_paths: usize,
    pub warnings: Vec<String>,
}

impl SolutionGrid {
    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.log_u[i * self.x_list.len() + j].exp()
    }
}

/// u(t, x) = E[u0(B_t^x) exp(V(t, x))] by inner Monte Carlo at a fixed noise realization.
pub fn regularized_solution(field: &NoiseField, cfg: &SolutionConfig) -> Result<SolutionGrid> {
    let d = field.grid.dim;
    if cfg.inner_samples < 2 {
        return Err(Error::InadmissibleConfig("need at least 2 inner samples".into()));
    }
    if let Some(x) = cfg.x_list.iter().find(|x| x.len() != d) {
        return Err(Error::InadmissibleConfig(format!("point {x:?} is not in d = {d}")));
    }
    let nx = cfg.x_list.len();
    let mut out = SolutionGrid {
        t_list: cfg.t_list.clone(),
        x_list: cfg.x_list.clone(),
        log_u: Vec::new(),
        stderr_log: Vec::new(),
        ess: Vec::new(),
        wrapped_paths: 0,
        warnings: Vec::new(),
    };
    for (i, &t) in cfg.t_list.iter().enumerate() {
        for (j, x) in cfg.x_list.iter().enumerate() {
            if t == 0.0 {
                out.log_u.push(cfg.u0.ln_eval(x));
                out.stderr_log.push(0.0);
                out.ess.push(cfg.inner_samples as f64);
                continue;
            }
            let point_seed = derive_seed(cfg.seed, (i * nx + j) as u64);
            let one = |b: usize| -> Result<(f64, bool)> {
                let bundle = sample_paths(1, d, t, cfg.steps, derive_seed(point_seed, b as u64), x)?;
                let v = regularized_v(field, bundle.path(0), t, t)?;
                Ok((cfg.u0.ln_eval(bundle.endpoint(0)) + v.value, v.wrapped))
            };
            let res = in_pool(cfg.workers, || {
                (0..cfg.inner_samples).into_par_iter().map(one).collect::<Result<Vec<_>>>()
            })??;
            out.wrapped_paths += res.iter().filter(|r| r.1).count();
            let w: Vec<f64> = res.iter().map(|r| r.0).collect();
            let est = log_mean_exp(&w);
            if est.ess < 0.01 * est.samples as f64 {
                out.warnings.push(format!("degenerate_variance at t = {t}, x = {x:?}: ess {:.1}", est.ess));
            }
            out.log_u.push(est.log_mean);
            out.stderr_log.push(est.stderr_log);
            out.ess.push(est.ess);
        }
    }
    if out.wrapped_paths > 0 {
        out.warnings.push(format!("path_exits_box: {} paths wrapped around the periodic box", out.wrapped_paths));
    }
    Ok(out)
}

/// E_W[u(t, x)²] over `fields` noise realizations; each realization uses the
/// product of two independent inner estimates, which is unbiased for u².
pub fn ensemble_second_moment(
    synth: &NoiseSynth,
    u0: &InitialCondition,
    t: f64,
    x: &[f64],
    fields: usize,
    inner_samples: usize,
    steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let mut prods = Vec::with_capacity(fields);
    for f in 0..fields {
        let field = synth.sample(derive_seed(seed, f as u64));
        let mut halves = [0.0; 2];
        for (h, slot) in halves.iter_mut().enumerate() {
            let cfg = SolutionConfig {
                t_list: vec![t],
                x_list: vec![x.to_vec()],
                u0: u0.clone(),
                inner_samples,
                steps,
                seed: derive_seed(derive_seed(seed, u64::MAX - f as u64), h as u64),
                workers: 0,
            };
            *slot = regularized_solution(&field, &cfg)?.log_u[0];
        }
        prods.push((halves[0] + halves[1]).exp());
    }
    Ok(mean_stderr(&prods))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1() -> NoiseGrid {
        NoiseGrid::new(32, 1.0 / 32.0, 64, 2.0 * PI / 64.0, 1).unwrap()
    }

    fn riesz() -> (TimeKernelSpec, SpaceKernelSpec) {
        (TimeKernelSpec::riesz_time(0.5).unwrap(), SpaceKernelSpec::riesz(0.5, 1).unwrap())
    }

    #[test]
    fn rejects_under_resolved_mollifier() {
        let (g, l) = riesz();
        let grid = grid1();
        let e = NoiseSynth::new(&g, &l, grid, grid.dx * 0.5, grid.dt).unwrap_err();
        assert_eq!(e.reason(), "aliasing_violation");
        assert!(NoiseGrid::new(30, 0.1, 64, 0.1, 1).is_err());
    }

    #[test]
    fn grid_lag_zero_variance_is_weight_sum() {
        let (g, l) = riesz();
        let grid = grid1();
        let s = NoiseSynth::new(&g, &l, grid, 2.0 * grid.dx, 2.0 * grid.dt).unwrap();
        let total: f64 = s.weights.iter().sum();
        assert_relative_eq!(s.covariance(0, &[0]), total, max_relative = 1e-12);
        assert!(s.covariance(3, &[5]) < total);
    }

    #[test]
    fn constant_gamma_is_flat_in_time() {
        let g = TimeKernelSpec::constant(1.0).unwrap();
        let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        let grid = grid1();
        let f = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 4).unwrap();
        let a = f.time_slice(0);
        for it in 1..grid.nt {
            for (x, y) in f.time_slice(it).iter().zip(a) {
                assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic_and_real() {
        let (g, l) = riesz();
        let grid = grid1();
        let a = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 9).unwrap();
        let b = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 9).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn interpolation_hits_grid_values() {
        let (g, l) = riesz();
        let grid = grid1();
        let f = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 1).unwrap();
        let mut w = false;
        let x = -grid.box_l() / 2.0 + 5.0 * grid.dx;
        let v = f.interpolate(3.0 * grid.dt, &[x], &mut w);
        assert_relative_eq!(v, f.values[3 * grid.nx + 5], max_relative = 1e-9);
        assert!(!w);
        f.interpolate(0.0, &[grid.box_l()], &mut w);
        assert!(w);
    }

    #[test]
    fn v_is_linear_and_zero_on_zero_field() {
        let (g, l) = riesz();
        let grid = grid1();
        let f = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 2).unwrap();
        let p = sample_paths(1, 1, 0.5, 16, 3, &[0.0]).unwrap();
        let v = regularized_v(&f, p.path(0), 0.5, 0.5).unwrap().value;
        let v2 = regularized_v(&f.scaled(2.0), p.path(0), 0.5, 0.5).unwrap().value;
        assert_eq!(v2, 2.0 * v);
        let z = NoiseField::zeros(grid, g, l);
        assert_eq!(regularized_v(&z, p.path(0), 0.5, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn solution_identities() {
        let (g, l) = riesz();
        let grid = grid1();
        let z = NoiseField::zeros(grid, g, l.clone());
        let u0 = InitialCondition::GaussianBump { center: vec![0.0], width: 0.5 };
        let cfg = SolutionConfig {
            t_list: vec![0.0, 0.25],
            x_list: vec![vec![0.3]],
            u0: InitialCondition::One,
            inner_samples: 16,
            steps: 8,
            seed: 1,
            workers: 1,
        };
        let s = regularized_solution(&z, &cfg).unwrap();
        assert_eq!(s.log_u, vec![0.0, 0.0]);
        let f = synthesize_noise(&g, &l, grid, grid.dx, grid.dt, 2).unwrap();
        let s = regularized_solution(&f, &SolutionConfig { u0: u0.clone(), ..cfg }).unwrap();
        assert_eq!(s.log_u[0], u0.ln_eval(&[0.3]));
        assert!(s.u(1, 0) > 0.0);
    }
}
