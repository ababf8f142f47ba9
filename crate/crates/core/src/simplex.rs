//! Simplex integrals, the chaos-term bound built from C_N and D_N, and the
//! dyadic rectangle partition of the two-point simplex.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimate::{mean_stderr, McEstimate};
use crate::kernels::SpaceKernelSpec;
use crate::quad::{self, Tol};

pub use crate::kernels::cn_dn;

/// Integration over `{w ∈ [0,∞)^m : Σ w_i ≤ t}` of `Π w_i^{α_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSpec {
    pub t: f64,
    pub alpha: Vec<f64>,
}

impl SimplexSpec {
    pub fn new(t: f64, alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::OutOfRange("simplex order must be at least 1".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::OutOfRange(format!("horizon t = {t} must be positive")));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > -1.0 && **a < 1.0)) {
            return Err(Error::OutOfRange(format!("exponent {a} not in (-1, 1)")));
        }
        Ok(SimplexSpec { t, alpha })
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// `J_m(t, α) = Π Γ(α_i + 1) t^{|α|+m} / Γ(|α| + m + 1)`.
pub fn simplex_integral_exact(spec: &SimplexSpec) -> f64 {
    let m = spec.m() as f64;
    let s = spec.alpha_sum();
    let lg: f64 = spec.alpha.iter().map(|a| ln_gamma(a + 1.0)).sum();
    (lg + (s + m) * spec.t.ln() - ln_gamma(s + m + 1.0)).exp()
}

/// The same integral by nested one-dimensional quadrature:
/// `H_k(τ) = ∫_0^τ w^{α_k} H_{k-1}(τ - w) dw`, `H_0 = 1`, `J_m = H_m(t)`.
/// Both endpoint singularities are removed by power substitutions.
pub fn simplex_integral_nested(spec: &SimplexSpec, tol: f64) -> Result<f64> {
    nested(&spec.alpha, spec.t, tol)
}

fn nested(alpha: &[f64], tau: f64, tol: f64) -> Result<f64> {
    let Some((&a, rest)) = alpha.split_last() else {
        return Ok(1.0);
    };
    if tau <= 0.0 {
        return Ok(0.0);
    }
    if rest.is_empty() {
        return Ok(tau.powf(a + 1.0) / (a + 1.0));
    }
    let inner_tol = Tol::new(tol * 1e-3 * tau.powf(a + 1.0).min(1.0), tol);
    let e: f64 = rest.iter().map(|x| x + 1.0).sum();
    let half = tau / 2.0;
    let p = 1.0 / (a + 1.0);
    let q = 1.0 / (e + 1.0);
    let cell = std::cell::Cell::new(None::<Error>);
    let h = |y: f64| match nested(rest, y, tol) {
        Ok(v) => v,
        Err(err) => {
            cell.set(Some(err));
            f64::NAN
        }
    };
    // w = half·u^p on [0, half]: w^a dw = half^{a+1} p du
    let left = quad::integrate(|u: f64| h(tau - half * u.powf(p)), 0.0, 1.0, inner_tol)?;
    // y = τ - w = half·u^q on [0, half]
    let right = quad::integrate(
        |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let y = half * u.powf(q);
            u.powf(q - 1.0) * (tau - y).powf(a) * h(y)
        },
        0.0,
        1.0,
        inner_tol,
    )?;
    if let Some(err) = cell.take() {
        return Err(err);
    }
    Ok(half.powf(a + 1.0) * p * left.value + half * q * right.value)
}

/// Binomial-sum bound `Σ_k C(n,k) t^k/k! D_N^k (2C_N)^{n-k}`.
pub fn lemma1_bound(spec: &SpaceKernelSpec, t: f64, n: usize, big_n: f64) -> Result<f64> {
    let (c, d) = cn_dn(spec, big_n)?;
    Ok(lemma1_bound_from(c, d, t, n))
}

pub fn lemma1_bound_from(c_n: f64, d_n: f64, t: f64, n: usize) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
            fact *= k as f64;
        }
        sum += binom * t.powi(k as i32) / fact * d_n.powi(k as i32) * (2.0 * c_n).powi((n - k) as i32);
    }
    sum
}

/// Monte Carlo estimate of `∫_{S_{t,n}} Π φ(w_i) dw`, φ(w) = ∫ e^{-w|ξ|²} μ(dξ),
/// with `S_{t,n} = {w ≥ 0, Σ w_i ≤ t}`. Samples come from a Dirichlet law on the
/// simplex whose marginal singularity matches φ near w = 0.
pub fn lemma1_lhs(
    spec: &SpaceKernelSpec,
    t: f64,
    n: usize,
    samples: usize,
    seed: u64,
    tol: Option<f64>,
) -> Result<McEstimate> {
    if n == 0 {
        return Ok(McEstimate { mean: 1.0, stderr: 0.0, samples: 0 });
    }
    if n > 4 {
        return Err(Error::OutOfRange(format!("lemma1_lhs supports n <= 4, got {n}")));
    }
    if !(t > 0.0) {
        return Err(Error::OutOfRange(format!("t = {t} must be positive")));
    }
    let s = spec.radial().inf.map_or(0.0, |q| ((q + 1.0) / 2.0).max(0.0));
    if s >= 1.0 {
        return Err(Error::Divergent("the spectral measure violates the integrability hypothesis".into()));
    }
    let b = 1.0 - s;
    let log_norm = ln_gamma(n as f64 * b + 1.0) - n as f64 * ln_gamma(b);
    let shape = Gamma::new(b, 1.0).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let exp1 = Gamma::new(1.0, 1.0).expect("unit gamma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(samples);
    let mut g = vec![0.0; n];
    for _ in 0..samples {
        let mut tot = exp1.sample(&mut rng);
        for gi in g.iter_mut() {
            *gi = shape.sample(&mut rng);
            tot += *gi;
        }
        let mut log_ratio = -log_norm + n as f64 * t.ln();
        let mut prod = 1.0;
        for gi in &g {
            let x = gi / tot;
            prod *= spec.gaussian_mu_transform(t * x)?;
            log_ratio -= (b - 1.0) * x.ln();
        }
        vals.push(prod * log_ratio.exp());
    }
    let est = mean_stderr(&vals);
    if let Some(tol) = tol {
        if est.stderr > tol {
            return Err(Error::InsufficientSamples { stderr: est.stderr, tol });
        }
    }
    Ok(est)
}

/// `A_{n,k} = J × I` with endpoints `t·num/2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeGallRectangle {
    pub n: u32,
    pub k: u64,
    /// numerators of `[j_lo, j_hi)` over `2^n`
    pub j: (u64, u64),
    pub i: (u64, u64),
}

impl LeGallRectangle {
    fn scale(&self, t: f64) -> f64 {
        t / 2f64.powi(self.n as i32)
    }

    pub fn j_interval(&self, t: f64) -> (f64, f64) {
        let s = self.scale(t);
        (self.j.0 as f64 * s, self.j.1 as f64 * s)
    }

    pub fn i_interval(&self, t: f64) -> (f64, f64) {
        let s = self.scale(t);
        (self.i.0 as f64 * s, self.i.1 as f64 * s)
    }

    pub fn area(&self, t: f64) -> f64 {
        let s = self.scale(t);
        ((self.j.1 - self.j.0) * (self.i.1 - self.i.0)) as f64 * s * s
    }

    /// Endpoints over the common denominator `2^level` (`level ≥ n`).
    pub fn at_level(&self, level: u32) -> ((u64, u64), (u64, u64)) {
        let f = 1u64 << (level - self.n);
        ((self.j.0 * f, self.j.1 * f), (self.i.0 * f, self.i.1 * f))
    }
}

pub fn legall_partition(levels: u32) -> Result<Vec<LeGallRectangle>> {
    if levels == 0 || levels > 40 {
        return Err(Error::OutOfRange(format!("levels = {levels} must lie in 1..=40")));
    }
    let mut out = Vec::new();
    for n in 1..=levels {
        for k in 1..=(1u64 << (n - 1)) {
            out.push(LeGallRectangle { n, k, j: (2 * k - 2, 2 * k - 1), i: (2 * k - 1, 2 * k) });
        }
    }
    Ok(out)
}

pub fn write_partition_csv<W: Write>(w: W, rects: &[LeGallRectangle], t: f64) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "k", "j_lo", "j_hi", "i_lo", "i_hi"])?;
    for r in rects {
        let (jl, jh) = r.j_interval(t);
        let (il, ih) = r.i_interval(t);
        wr.write_record([
            r.n.to_string(),
            r.k.to_string(),
            jl.to_string(),
            jh.to_string(),
            il.to_string(),
            ih.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
