//! One-dimensional quadrature: adaptive Gauss-Kronrod on finite intervals,
//! half-line integrals with analytic power-law tails, and fixed
//! Gauss-Legendre rules (plain and graded towards an endpoint singularity).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

impl QuadResult {
    fn add(self, other: QuadResult) -> QuadResult {
        QuadResult { value: self.value + other.value, error: self.error + other.error }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    QuadResult { value, error: if error.is_finite() { error } else { f64::INFINITY } }
}

struct Piece {
    a: f64,
    b: f64,
    r: QuadResult,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.r.error == o.r.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.r.error.total_cmp(&o.r.error)
    }
}

/// Tolerance policy shared by the adaptive routines.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_pieces: usize,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, max_pieces: 4000 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::new(1e-12, 1e-10)
    }
}

/// Globally adaptive 7/15 Gauss-Kronrod on `[a, b]`, starting from `init` equal pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<QuadResult> {
    integrate_split(&f, a, b, 1, tol)
}

pub fn integrate_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    init: usize,
    tol: Tol,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let mut heap = BinaryHeap::new();
    let mut total = QuadResult { value: 0.0, error: 0.0 };
    let n = init.max(1);
    for i in 0..n {
        let lo = a + (b - a) * i as f64 / n as f64;
        let hi = a + (b - a) * (i + 1) as f64 / n as f64;
        let r = gk15(f, lo, hi);
        total = total.add(r);
        heap.push(Piece { a: lo, b: hi, r });
    }
    while total.error > tol.target(total.value) {
        if heap.len() >= tol.max_pieces {
            return Err(Error::QuadratureNotConverged {
                estimate: total.value,
                error: total.error,
                tol: tol.target(total.value),
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::QuadratureNotConverged {
                estimate: total.value,
                error: total.error,
                tol: tol.target(total.value),
            });
        }
        let l = gk15(f, p.a, m);
        let r = gk15(f, m, p.b);
        total.value += l.value + r.value - p.r.value;
        total.error += l.error + r.error - p.r.error;
        heap.push(Piece { a: p.a, b: m, r: l });
        heap.push(Piece { a: m, b: p.b, r });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let mut v = 0.0;
    let mut e = 0.0;
    for p in heap.iter() {
        v += p.r.value;
        e += p.r.error;
    }
    Ok(QuadResult { value: v, error: e })
}

/// Known power-law behaviour of an integrand on `(0, ∞)`:
/// `f(r) ~ C r^zero` as `r → 0` and `f(r) ~ C' r^inf` as `r → ∞`.
/// `None` means faster than any power (the integrand is truncated numerically).
#[derive(Debug, Clone, Copy, Default)]
pub struct Tails {
    pub zero: Option<f64>,
    pub inf: Option<f64>,
}

/// `∫_0^∞ f(r) dr` by Gauss-Kronrod in `s = ln r`, with the end pieces
/// replaced by the integral of the matching power law.
pub fn half_line<F: Fn(f64) -> f64>(f: F, tails: Tails, tol: Tol) -> Result<QuadResult> {
    radial_interval(f, 0.0, f64::INFINITY, tails, tol)
}

/// `∫_lo^hi f(r) dr` for `0 ≤ lo < hi ≤ ∞`; infinite or zero ends use `tails`.
pub fn radial_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tails: Tails, tol: Tol) -> Result<QuadResult> {
    if lo == 0.0 {
        if let Some(p) = tails.zero {
            if p <= -1.0 {
                return Err(Error::Divergent(format!("integrand ~ r^{p} at the origin")));
            }
        }
    }
    if hi.is_infinite() {
        if let Some(p) = tails.inf {
            if p >= -1.0 {
                return Err(Error::Divergent(format!("integrand ~ r^{p} at infinity")));
            }
        }
    }
    if lo >= hi {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let g = |s: f64| {
        let r = s.exp();
        let v = f(r) * r;
        if v.is_finite() { v } else { 0.0 }
    };
    let budget = 0.05 * tol.abs;
    let zero_res = QuadResult { value: 0.0, error: 0.0 };

    let (s_lo, tail_lo) = if lo > 0.0 {
        (lo.ln(), zero_res)
    } else {
        let start = if hi.is_finite() { (hi.ln() - 2.0).min(-2.0) } else { -2.0 };
        tail_cut(&g, tails.zero.map(|p| p + 1.0), start, -1.0, budget)?
    };
    let (s_hi, tail_hi) = if hi.is_finite() {
        (hi.ln(), zero_res)
    } else {
        tail_cut(&g, tails.inf.map(|p| -(p + 1.0)), (s_lo + 2.0).max(2.0), 1.0, budget)?
    };
    let pieces = ((s_hi - s_lo).ceil() as usize).clamp(1, 400);
    let inner = integrate_split(
        &g,
        s_lo,
        s_hi,
        pieces,
        Tol { abs: 0.5 * tol.abs, rel: tol.rel, max_pieces: tol.max_pieces.max(4 * pieces) },
    )?;
    Ok(QuadResult {
        value: inner.value + tail_lo.value + tail_hi.value,
        error: inner.error + tail_lo.error + tail_hi.error,
    })
}

/// Walk outward in log-space until the neglected end is either negligible or
/// matches the declared power law closely enough for its closed-form tail.
/// `rate` is the exponential decay rate of `g` in `s` towards that end.
fn tail_cut<G: Fn(f64) -> f64>(
    g: &G,
    rate: Option<f64>,
    start: f64,
    dir: f64,
    budget: f64,
) -> Result<(f64, QuadResult)> {
    let mut s = start;
    for _ in 0..200 {
        let gs = g(s);
        let gp = g(s + dir);
        match rate {
            Some(k) => {
                let tail = gs / k;
                let slope = if gs > 0.0 && gp > 0.0 { (gs / gp).ln() } else { k };
                let mismatch = ((slope - k) / k).abs();
                let err = (mismatch * tail).abs();
                if tail.abs() < budget || err < budget || mismatch < 1e-12 {
                    return Ok((s, QuadResult { value: tail, error: err }));
                }
            }
            None => {
                if gs.abs() < budget * 1e-3 && gp.abs() < budget * 1e-3 {
                    return Ok((s, QuadResult { value: 0.0, error: gs.abs() }));
                }
            }
        }
        s += dir;
    }
    Err(Error::QuadratureNotConverged { estimate: f64::NAN, error: f64::INFINITY, tol: budget })
}

/// `∫_{-∞}^{∞} f(x) dx` as two half-lines around the origin.
pub fn whole_line<F: Fn(f64) -> f64>(f: F, tails: Tails, tol: Tol) -> Result<QuadResult> {
    let half = Tol { abs: 0.5 * tol.abs, ..tol };
    let a = half_line(|r| f(r), tails, half)?;
    let b = half_line(|r| f(-r), tails, half)?;
    Ok(a.add(b))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A fixed rule on `[0, 1]`: `Σ w_k F(x_k) ≈ ∫_0^1 F`.
#[derive(Debug, Clone)]
pub struct Rule01 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule01 {
    pub fn legendre(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Rule01 {
            nodes: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    }

    /// Graded towards 0 for integrands behaving like `x^alpha` (alpha > -1):
    /// the substitution `x = z^p`, `p = 1/(alpha+1)`, makes the leading term smooth.
    pub fn graded(n: usize, alpha: f64) -> Self {
        let base = Rule01::legendre(n);
        let p = 1.0 / (alpha + 1.0).max(1e-3);
        let nodes = base.nodes.iter().map(|z| z.powf(p)).collect();
        let weights = base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(z, w)| w * p * z.powf(p - 1.0))
            .collect();
        Rule01 { nodes, weights }
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
