//! Gaussian-smoothed covariance Ψ(m, v) = E[Λ(m + √v Z)], Z standard normal
//! in R^d. Path energies integrate Ψ with the Brownian-bridge conditional
//! mean and variance between grid nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use super::{SpaceFamily, SpaceKernelSpec};
use crate::error::{Error, Result};
use crate::quad::{self, Tails, Tol};

const TABLE_MAX: f64 = 16.0;
const TABLE_STEP: f64 = 0.01;

/// E|ρ e_1 + Z|^{-η} for Z ~ N(0, I_d), tabulated in ρ with Hermite
/// interpolation and an asymptotic series beyond the table.
#[derive(Debug)]
struct RieszProfile {
    eta: f64,
    /// prefactor 2^{-η/2} Γ((d-η)/2)/Γ(d/2)
    #[cfg_attr(not(test), allow(dead_code))]
    pre: f64,
    a: f64,
    b: f64,
    f: Vec<f64>,
    df: Vec<f64>,
}

/// Σ (p)_n/(q)_n x^n/n! for x ≥ 0.
fn hyp1f1_pos(p: f64, q: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        term *= (p + n) / (q + n) * x / (n + 1.0);
        sum += term;
        n += 1.0;
        if term < 1e-17 * sum && n > x {
            break;
        }
        if n > 5000.0 {
            break;
        }
    }
    sum
}

/// 1F1(a; b; -x) through Kummer's transformation.
fn hyp1f1_neg(a: f64, b: f64, x: f64) -> f64 {
    (-x).exp() * hyp1f1_pos(b - a, b, x)
}

impl RieszProfile {
    fn new(eta: f64, d: usize) -> Self {
        let df = d as f64;
        let a = eta / 2.0;
        let b = df / 2.0;
        let pre = 2f64.powf(-a) * gamma((df - eta) / 2.0) / gamma(b);
        let n = (TABLE_MAX / TABLE_STEP).round() as usize + 1;
        let mut f = Vec::with_capacity(n);
        let mut dfv = Vec::with_capacity(n);
        for i in 0..n {
            let rho = i as f64 * TABLE_STEP;
            let x = rho * rho / 2.0;
            f.push(pre * hyp1f1_neg(a, b, x));
            // d/dρ 1F1(a;b;-ρ²/2) = -ρ (a/b) 1F1(a+1;b+1;-ρ²/2)
            dfv.push(-pre * rho * a / b * hyp1f1_neg(a + 1.0, b + 1.0, x));
        }
        RieszProfile { eta, pre, a, b, f, df: dfv }
    }

    /// ρ^η E|ρ e_1 + Z|^{-η} for large ρ.
    fn asymptotic_ratio(&self, rho: f64) -> f64 {
        let x = rho * rho / 2.0;
        let c = 1.0 + self.a - self.b;
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..10 {
            let nf = n as f64;
            term *= (self.a + nf) * (c + nf) / ((nf + 1.0) * x);
            sum += term;
            if term.abs() < 1e-16 {
                break;
            }
        }
        sum
    }

    /// E|m + √v Z|^{-η} given |m| and v > 0.
    fn eval(&self, m: f64, v: f64) -> f64 {
        let sv = v.sqrt();
        let rho = m / sv;
        if rho >= TABLE_MAX {
            return m.powf(-self.eta) * self.asymptotic_ratio(rho);
        }
        let u = rho / TABLE_STEP;
        let i = (u as usize).min(self.f.len() - 2);
        let t = u - i as f64;
        let h = TABLE_STEP;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let val = h00 * self.f[i] + h10 * h * self.df[i] + h01 * self.f[i + 1] + h11 * h * self.df[i + 1];
        v.powf(-self.eta / 2.0) * val
    }

    #[cfg(test)]
    fn direct(&self, rho: f64) -> f64 {
        self.pre * hyp1f1_neg(self.a, self.b, rho * rho / 2.0)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Riesz(Arc<RieszProfile>),
    Fractional(Vec<(f64, Arc<RieszProfile>)>),
    Bessel { eta: f64 },
    Mollified { e2: f64 },
    Gaussian { s2: f64 },
    Constant { c: f64 },
}

/// Evaluator for Ψ(m, v) prepared from a space kernel.
#[derive(Debug, Clone)]
pub struct ConditionalKernel {
    kind: Kind,
    dim: usize,
    norm: f64,
}

impl ConditionalKernel {
    pub fn new(spec: &SpaceKernelSpec) -> Result<Self> {
        if !spec.is_pointwise() {
            return Err(Error::NotPointwise(spec.name()));
        }
        let kind = match &spec.family {
            SpaceFamily::Riesz { eta } => Kind::Riesz(Arc::new(RieszProfile::new(*eta, spec.dim))),
            SpaceFamily::Fractional { hurst } => Kind::Fractional(
                hurst
                    .iter()
                    .map(|&h| (h * (2.0 * h - 1.0), Arc::new(RieszProfile::new(2.0 - 2.0 * h, 1))))
                    .collect(),
            ),
            SpaceFamily::Bessel { eta } => Kind::Bessel { eta: *eta },
            SpaceFamily::MollifiedWhite { epsilon } => Kind::Mollified { e2: epsilon * epsilon },
            SpaceFamily::GaussianTest { scale } => Kind::Gaussian { s2: scale * scale },
            SpaceFamily::ConstantTest { c } => Kind::Constant { c: *c },
            SpaceFamily::White => return Err(Error::NotPointwise("white")),
        };
        Ok(ConditionalKernel { kind, dim: spec.dim, norm: spec.normalization })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// Ψ(m, v) = E[Λ(m + √v Z)] for v ≥ 0.
    pub fn eval(&self, m: &[f64], v: f64) -> Result<f64> {
        debug_assert_eq!(m.len(), self.dim);
        let m2: f64 = m.iter().map(|x| x * x).sum();
        let d = self.dim as f64;
        let val = match &self.kind {
            Kind::Constant { c } => *c,
            Kind::Gaussian { s2 } => (s2 / (s2 + v)).powf(d / 2.0) * (-m2 / (2.0 * (s2 + v))).exp(),
            Kind::Mollified { e2 } => (-m2 / (2.0 * (e2 + v))).exp() / (2.0 * PI * (e2 + v)).sqrt(),
            Kind::Riesz(p) => {
                if v <= 0.0 {
                    if m2 == 0.0 {
                        return Err(Error::SingularNode);
                    }
                    m2.powf(-p.eta / 2.0)
                } else {
                    p.eval(m2.sqrt(), v)
                }
            }
            Kind::Fractional(parts) => {
                let mut prod = 1.0;
                for ((c, p), mi) in parts.iter().zip(m) {
                    let f = if v <= 0.0 {
                        if *mi == 0.0 {
                            return Err(Error::SingularNode);
                        }
                        mi.abs().powf(-p.eta)
                    } else {
                        p.eval(mi.abs(), v)
                    };
                    prod *= c * f;
                }
                prod
            }
            Kind::Bessel { eta } => {
                if v <= 0.0 && m2 == 0.0 && *eta <= d {
                    return Err(Error::SingularNode);
                }
                let a = eta / 2.0 - 1.0;
                let zero = if v > 0.0 || m2 > 0.0 { a } else { a - d / 2.0 };
                let r = quad::half_line(
                    |w: f64| {
                        let s = 2.0 * w + v;
                        w.powf(a) * (-w).exp() * (2.0 * PI * s).powf(-d / 2.0) * (-m2 / (2.0 * s)).exp()
                    },
                    Tails { zero: Some(zero), inf: None },
                    Tol::new(1e-12, 1e-9),
                )?;
                r.value / gamma(eta / 2.0)
            }
        };
        Ok(self.norm * val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn profile_limits() {
        let p = RieszProfile::new(0.5, 1);
        // ρ = 0: E|Z|^{-η} = 2^{-η/2} Γ((1-η)/2)/Γ(1/2)
        assert_relative_eq!(p.eval(0.0, 1.0), 2f64.powf(-0.25) * gamma(0.25) / gamma(0.5), max_relative = 1e-12);
        // table/asymptotic seam
        let below = p.direct(15.999);
        let above = 15.999f64.powf(-0.5) * p.asymptotic_ratio(15.999);
        assert_relative_eq!(below, above, max_relative = 1e-9);
        for rho in [0.013, 1.234, 7.77, 15.5] {
            assert_relative_eq!(p.eval(rho, 1.0), p.direct(rho), max_relative = 1e-9);
        }
    }

    #[test]
    fn riesz_conditional_matches_mc() {
        let spec = SpaceKernelSpec::riesz(0.8, 2).unwrap();
        let k = ConditionalKernel::new(&spec).unwrap();
        let m = [0.3, -0.2];
        let v: f64 = 0.5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let z: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            let x = [m[0] + v.sqrt() * z[0], m[1] + v.sqrt() * z[1]];
            let f = spec.eval_lambda(&x).unwrap();
            s += f;
            s2 += f * f;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((k.eval(&m, v).unwrap() - mean).abs() < 4.0 * se);
    }

    #[test]
    fn gaussian_family_closed_form_consistent() {
        // with v = 0 the smoothed kernel is Λ itself
        for spec in [
            SpaceKernelSpec::gaussian_test(0.7, 2).unwrap(),
            SpaceKernelSpec::mollified_white(0.3).unwrap(),
            SpaceKernelSpec::riesz(0.5, 1).unwrap(),
            SpaceKernelSpec::fractional(vec![0.7, 0.9]).unwrap(),
            SpaceKernelSpec::bessel(1.5, 1).unwrap(),
        ] {
            let k = ConditionalKernel::new(&spec).unwrap();
            let x: Vec<f64> = (0..spec.dim).map(|i| 0.4 + 0.3 * i as f64).collect();
            assert_relative_eq!(k.eval(&x, 0.0).unwrap(), spec.eval_lambda(&x).unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn smoothing_semigroup_gaussian() {
        // E over Z of a Gaussian kernel with variance v: expected value against independent BMs
        let spec = SpaceKernelSpec::gaussian_test(1.0, 1).unwrap();
        let k = ConditionalKernel::new(&spec).unwrap();
        assert_relative_eq!(k.eval(&[0.0], 2.0).unwrap(), spec.expected_lambda(2.0).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn bessel_conditional_matches_expected_lambda() {
        let spec = SpaceKernelSpec::bessel(1.5, 1).unwrap();
        let k = ConditionalKernel::new(&spec).unwrap();
        assert_relative_eq!(k.eval(&[0.0], 1.3).unwrap(), spec.expected_lambda(1.3).unwrap(), max_relative = 1e-7);
    }

    #[test]
    fn singular_node_guard() {
        let spec = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        let k = ConditionalKernel::new(&spec).unwrap();
        assert_eq!(k.eval(&[0.0], 0.0).unwrap_err().reason(), "singular_node");
        assert!(ConditionalKernel::new(&SpaceKernelSpec::white(1).unwrap()).is_err());
    }
}
