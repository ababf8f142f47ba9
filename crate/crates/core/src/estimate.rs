//! Monte Carlo reductions: plain means, log-domain means of exponentials,
//! effective sample size and the delete-one jackknife.
//!
//! Every reduction runs in a fixed pairwise-tree order over the input slice,
//! so results depend only on the sample order, never on how samples were
//! produced in parallel.

use crate::quad::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn tree<T: Copy>(xs: &[T], leaf: &impl Fn(T) -> (f64, f64), join: &impl Fn((f64, f64), (f64, f64)) -> (f64, f64)) -> (f64, f64) {
    match xs.len() {
        0 => (f64::NEG_INFINITY, 0.0),
        1 => leaf(xs[0]),
        n => {
            let (a, b) = xs.split_at(n / 2);
            join(tree(a, leaf, join), tree(b, leaf, join))
        }
    }
}

/// Pairwise sum.
pub fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut k = KahanSum::default();
        xs.iter().for_each(|&x| k.add(x));
        return k.value();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    tree_sum(a) + tree_sum(b)
}

pub fn mean_stderr(xs: &[f64]) -> McEstimate {
    let n = xs.len();
    if n == 0 {
        return McEstimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
    }
    let mean = tree_sum(xs) / n as f64;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = if n > 1 { tree_sum(&dev) / (n - 1) as f64 } else { f64::INFINITY };
    McEstimate { mean, stderr: (var / n as f64).sqrt(), samples: n }
}

/// ln Σ exp(x_i) with a max shift, combined pairwise.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    // (shift, scaled sum) pairs
    let (m, s) = tree(
        xs,
        &|x| (x, 1.0),
        &|(ma, sa), (mb, sb)| {
            if ma == f64::NEG_INFINITY {
                (mb, sb)
            } else if mb == f64::NEG_INFINITY {
                (ma, sa)
            } else if ma >= mb {
                (ma, sa + sb * (mb - ma).exp())
            } else {
                (mb, sb + sa * (ma - mb).exp())
            }
        },
    );
    m + s.ln()
}

/// Log-domain estimate of E[exp(X)] from samples of X.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanEstimate {
    pub log_mean: f64,
    /// Delta-method standard error of `log_mean`.
    pub stderr_log: f64,
    pub samples: usize,
    /// exp(entropy of normalized weights); equals `samples` for equal weights.
    pub ess: f64,
}

impl LogMeanEstimate {
    pub fn ess_fraction(&self) -> f64 {
        self.ess / self.samples as f64
    }
}

pub fn log_mean_exp(xs: &[f64]) -> LogMeanEstimate {
    let n = xs.len();
    let lse = log_sum_exp(xs);
    let log_mean = lse - (n as f64).ln();
    // normalized weights p_i = exp(x_i - lse)
    let p: Vec<f64> = xs.iter().map(|x| (x - lse).exp()).collect();
    let ent: Vec<f64> = p.iter().map(|&q| if q > 0.0 { -q * q.ln() } else { 0.0 }).collect();
    let ess = tree_sum(&ent).exp();
    // Var(e^X)/E[e^X]^2 estimated from ratios r_i = e^{x_i - log_mean}
    let r: Vec<f64> = p.iter().map(|q| q * n as f64).collect();
    let dev: Vec<f64> = r.iter().map(|v| (v - 1.0).powi(2)).collect();
    let rel_var = if n > 1 { tree_sum(&dev) / (n - 1) as f64 } else { f64::INFINITY };
    LogMeanEstimate { log_mean, stderr_log: (rel_var / n as f64).sqrt(), samples: n, ess }
}

/// Delete-one jackknife standard error of a statistic of the sample mean vector.
/// `rows` are per-sample vectors; `stat` maps a mean vector to a scalar.
pub fn jackknife<F: Fn(&[f64]) -> f64>(rows: &[Vec<f64>], stat: F) -> (f64, f64) {
    let n = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    let mut total = vec![0.0; k];
    for j in 0..k {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        total[j] = tree_sum(&col);
    }
    let full: Vec<f64> = total.iter().map(|s| s / n as f64).collect();
    let value = stat(&full);
    if n < 2 {
        return (value, f64::INFINITY);
    }
    let loo: Vec<f64> = rows
        .iter()
        .map(|r| {
            let m: Vec<f64> = total.iter().zip(r).map(|(s, x)| (s - x) / (n - 1) as f64).collect();
            stat(&m)
        })
        .collect();
    let lm = tree_sum(&loo) / n as f64;
    let dev: Vec<f64> = loo.iter().map(|v| (v - lm).powi(2)).collect();
    let var = (n - 1) as f64 / n as f64 * tree_sum(&dev);
    (value, var.sqrt())
}
