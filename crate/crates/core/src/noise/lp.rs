use std::io::Write;

use num_complex::Complex64;

use super::fft::{fft_nd, unravel, wavenumber};
use super::NoiseField;
use crate::error::{Error, Result};

const CHI_IN: f64 = 0.75;
const CHI_OUT: f64 = 4.0 / 3.0;

fn bump(x: f64) -> f64 {
    if x > 0.0 { (-1.0 / x).exp() } else { 0.0 }
}

/// Smooth radial cutoff: 1 on [0, 3/4], 0 beyond 4/3.
pub fn chi(r: f64) -> f64 {
    let a = bump(CHI_OUT - r);
    let b = bump(r - CHI_IN);
    if a + b == 0.0 { 0.0 } else { a / (a + b) }
}

/// Annulus multiplier χ(r/2) - χ(r), supported in [3/4, 8/3].
pub fn phi(r: f64) -> f64 {
    chi(r / 2.0) - chi(r)
}

fn multiplier(level: i32, r: f64) -> f64 {
    if level < 0 { chi(r) } else { phi(r / 2f64.powi(level)) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpBlocks {
    pub shape: Vec<usize>,
    pub dx: f64,
    /// -1, 0, 1, ..., J
    pub levels: Vec<i32>,
    pub blocks: Vec<Vec<f64>>,
}

impl LpBlocks {
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.blocks.first().map_or(0, |b| b.len());
        (0..n).map(|i| self.blocks.iter().map(|b| b[i]).sum()).collect()
    }

    pub fn block(&self, level: i32) -> Option<&[f64]> {
        self.levels.iter().position(|&l| l == level).map(|i| self.blocks[i].as_slice())
    }
}

/// Δ_j f on a periodic grid of spacing `dx` per axis; frequencies are in
/// physical units 2πn/L. The top level J is the first whose outer cutoff
/// covers every grid frequency, so the blocks sum to `f` exactly.
pub fn littlewood_paley_blocks(slice: &[f64], shape: &[usize], dx: f64) -> Result<LpBlocks> {
    if shape.is_empty() || shape.iter().any(|n| !n.is_power_of_two() || *n < 2) {
        return Err(Error::InadmissibleConfig(format!("slice shape {shape:?} must be powers of two >= 2")));
    }
    let total: usize = shape.iter().product();
    if slice.len() != total {
        return Err(Error::InadmissibleConfig(format!("slice has {} values, shape needs {total}", slice.len())));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InadmissibleConfig(format!("mesh {dx} must be positive")));
    }
    let mut spec: Vec<Complex64> = slice.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut spec, shape, false);
    let radii: Vec<f64> = {
        let mut idx = vec![0; shape.len()];
        (0..total)
            .map(|k| {
                unravel(k, shape, &mut idx);
                let r2: f64 = idx
                    .iter()
                    .zip(shape)
                    .map(|(&i, &n)| (wavenumber(i, n) * 2.0 * std::f64::consts::PI / (n as f64 * dx)).powi(2))
                    .sum();
                r2.sqrt()
            })
            .collect()
    };
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let mut top = 0;
    while 2f64.powi(-top - 1) * rmax > CHI_IN {
        top += 1;
    }
    let levels: Vec<i32> = (-1..=top).collect();
    let blocks = levels
        .iter()
        .map(|&j| {
            let mut b: Vec<Complex64> = spec.iter().zip(&radii).map(|(c, &r)| c * multiplier(j, r)).collect();
            fft_nd(&mut b, shape, true);
            b.iter().map(|c| c.re / total as f64).collect()
        })
        .collect();
    Ok(LpBlocks { shape: shape.to_vec(), dx, levels, blocks })
}

/// Spatial weights, smoothed at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    One,
    /// (1 + |x|²)^{-σ/2}
    Polynomial { sigma: f64 },
    /// exp(-λ (1 + |x|²)^{1/2})
    Exponential { lambda: f64 },
}

impl Weight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            Weight::One => 1.0,
            Weight::Polynomial { sigma } => (1.0 + r2).powf(-sigma / 2.0),
            Weight::Exponential { lambda } => (-lambda * (1.0 + r2).sqrt()).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Weight::One => "one",
            Weight::Polynomial { .. } => "polynomial",
            Weight::Exponential { .. } => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesovSpectrum {
    pub levels: Vec<i32>,
    /// ‖w Δ_j f‖_∞ per level.
    pub norms: Vec<f64>,
    pub weight: Weight,
}

impl BesovSpectrum {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "norm"])?;
        for (j, n) in self.levels.iter().zip(&self.norms) {
            wr.write_record([j.to_string(), n.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn besov_spectrum(blocks: &LpBlocks, weight: Weight) -> BesovSpectrum {
    let shape = &blocks.shape;
    let half: Vec<f64> = shape.iter().map(|&n| n as f64 * blocks.dx / 2.0).collect();
    let total: usize = shape.iter().product();
    let mut idx = vec![0; shape.len()];
    let mut x = vec![0.0; shape.len()];
    let w: Vec<f64> = (0..total)
        .map(|k| {
            unravel(k, shape, &mut idx);
            for c in 0..shape.len() {
                x[c] = idx[c] as f64 * blocks.dx - half[c];
            }
            weight.eval(&x)
        })
        .collect();
    let norms = blocks
        .blocks
        .iter()
        .map(|b| b.iter().zip(&w).map(|(v, wi)| (v * wi).abs()).fold(0.0, f64::max))
        .collect();
    BesovSpectrum { levels: blocks.levels.clone(), norms, weight }
}

/// sup_j 2^{jκ} ‖w Δ_j f‖_∞.
pub fn besov_norm(blocks: &LpBlocks, kappa: f64, weight: Weight) -> f64 {
    let s = besov_spectrum(blocks, weight);
    s.levels.iter().zip(&s.norms).map(|(&j, n)| 2f64.powf(j as f64 * kappa) * n).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEstimate {
    /// Slope of ln RMS |δW_{s,s+ℓ}| against ln ℓ.
    pub theta_hat: f64,
    /// Slope of log₂ ‖Δ_j δW‖_∞ against j: δW sits in B^{-κ} for κ > κ̂.
    pub kappa_hat: f64,
    pub lags: Vec<f64>,
    pub lag_rms: Vec<f64>,
    pub levels: Vec<i32>,
    pub level_norms: Vec<f64>,
    /// Levels above the mollifier cutoff, reported but left out of the fit.
    pub excluded_levels: Vec<i32>,
}

pub const MIN_LEVELS: usize = 4;

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Hölder-in-time and Besov-in-space exponents of the integrated noise
/// W(t, ·) = ∫_0^t Ẇ(r, ·) dr over dyadic increments.
pub fn estimate_regularity(field: &NoiseField) -> Result<RegularityEstimate> {
    let g = &field.grid;
    let ns = g.space_len();
    let mut cum = vec![0.0; (g.nt + 1) * ns];
    for it in 0..g.nt {
        for k in 0..ns {
            cum[(it + 1) * ns + k] = cum[it * ns + k] + g.dt * field.values[it * ns + k];
        }
    }
    let incr = |s: usize, l: usize| -> Vec<f64> { (0..ns).map(|k| cum[(s + l) * ns + k] - cum[s * ns + k]).collect() };

    // lags at or above twice the time mollifier, up to a quarter of the box
    let mut lags = Vec::new();
    let mut lag_rms = Vec::new();
    let mut l = 1usize;
    while l <= g.nt / 4 {
        if l as f64 * g.dt >= 2.0 * field.delta {
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for s in (0..=g.nt - l).step_by(l) {
                acc += incr(s, l).iter().map(|v| v * v).sum::<f64>();
                cnt += ns;
            }
            lags.push(l as f64 * g.dt);
            lag_rms.push((acc / cnt as f64).sqrt());
        }
        l *= 2;
    }
    if lags.len() < 3 {
        return Err(Error::InsufficientLevels { levels: lags.len(), required: 3 });
    }
    let theta_hat = slope(&lags.iter().map(|v| v.ln()).collect::<Vec<_>>(), &lag_rms.iter().map(|v| v.ln()).collect::<Vec<_>>());

    let shape = vec![g.nx; g.dim];
    let big = (g.nt / 4).max(1);
    let mut sums: Vec<f64> = Vec::new();
    let mut levels = Vec::new();
    let mut count = 0;
    for s in (0..=g.nt - big).step_by(big) {
        let b = littlewood_paley_blocks(&incr(s, big), &shape, g.dx)?;
        let sp = besov_spectrum(&b, Weight::One);
        if sums.is_empty() {
            sums = vec![0.0; sp.norms.len()];
            levels = sp.levels.clone();
        }
        sums.iter_mut().zip(&sp.norms).for_each(|(a, n)| *a += n);
        count += 1;
    }
    let level_norms: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
    // keep j ≥ 0 with the annulus inside the mollifier cutoff |ξ| ≤ 1/ε
    let cutoff = 1.0 / field.epsilon;
    let (fit, excluded): (Vec<usize>, Vec<usize>) = (0..levels.len())
        .filter(|&i| levels[i] >= 0)
        .partition(|&i| 8.0 / 3.0 * 2f64.powi(levels[i]) <= cutoff);
    if fit.len() < MIN_LEVELS {
        return Err(Error::InsufficientLevels { levels: fit.len(), required: MIN_LEVELS });
    }
    let xs: Vec<f64> = fit.iter().map(|&i| levels[i] as f64).collect();
    let ys: Vec<f64> = fit.iter().map(|&i| level_norms[i].log2()).collect();
    Ok(RegularityEstimate {
        theta_hat,
        kappa_hat: slope(&xs, &ys),
        lags,
        lag_rms,
        levels: levels.clone(),
        level_norms,
        excluded_levels: excluded.iter().map(|&i| levels[i]).collect(),
    })
}
