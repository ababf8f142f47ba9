//! Covariance families: the time kernel γ, the space kernel Λ and its
//! spectral measure μ = ℱΛ under ℱu(ξ) = ∫ e^{-i⟨ξ,x⟩} u(x) dx.

mod conditional;
mod hypothesis;

pub use conditional::ConditionalKernel;
pub use hypothesis::{
    cn_dn, mu_moment_integral, smoothed_mu_sup_bound, DominationReport, HypothesisReport,
};

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{self, Tails, Tol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFamily {
    RieszTime { beta: f64 },
    FbmDerivative { hurst: f64 },
    Constant { c: f64 },
    /// γ ≡ 1 inside the double integral: time-independent noise.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeKernelSpec {
    pub family: TimeFamily,
    pub normalization: f64,
}

impl TimeKernelSpec {
    pub fn new(family: TimeFamily, normalization: f64) -> Result<Self> {
        let s = TimeKernelSpec { family, normalization };
        s.validate()?;
        Ok(s)
    }

    pub fn riesz_time(beta: f64) -> Result<Self> {
        Self::new(TimeFamily::RieszTime { beta }, 1.0)
    }

    pub fn fbm_derivative(hurst: f64) -> Result<Self> {
        Self::new(TimeFamily::FbmDerivative { hurst }, 1.0)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(TimeFamily::Constant { c }, 1.0)
    }

    pub fn none() -> Self {
        TimeKernelSpec { family: TimeFamily::None, normalization: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return Err(Error::OutOfRange(format!("time normalization {} must be positive", self.normalization)));
        }
        match self.family {
            TimeFamily::RieszTime { beta } if !(beta > 0.0 && beta < 1.0) => {
                Err(Error::OutOfRange(format!("riesz_time beta = {beta} not in (0,1)")))
            }
            TimeFamily::FbmDerivative { hurst } if !(hurst > 0.5 && hurst < 1.0) => {
                Err(Error::OutOfRange(format!("fbm_derivative H = {hurst} not in (1/2,1)")))
            }
            TimeFamily::Constant { c } if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::OutOfRange(format!("constant c = {c} must be nonnegative")))
            }
            _ => Ok(()),
        }
    }

    /// Singularity exponent: γ(t) ~ |t|^{-β}; 0 for bounded kernels.
    pub fn beta(&self) -> f64 {
        match self.family {
            TimeFamily::RieszTime { beta } => beta,
            TimeFamily::FbmDerivative { hurst } => 2.0 - 2.0 * hurst,
            TimeFamily::Constant { .. } | TimeFamily::None => 0.0,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self.family, TimeFamily::None)
    }

    fn amplitude(&self) -> f64 {
        self.normalization
            * match self.family {
                TimeFamily::RieszTime { .. } | TimeFamily::None => 1.0,
                TimeFamily::FbmDerivative { hurst } => hurst * (2.0 * hurst - 1.0),
                TimeFamily::Constant { c } => c,
            }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let b = self.beta();
        if b > 0.0 {
            if t == 0.0 {
                return Err(Error::SingularAtZero { family: self.name() });
            }
            Ok(self.amplitude() * t.abs().powf(-b))
        } else {
            Ok(self.amplitude())
        }
    }

    /// ∫_0^t γ(s) ds for t ≥ 0.
    pub fn integral(&self, t: f64) -> f64 {
        let b = self.beta();
        self.amplitude() * t.powf(1.0 - b) / (1.0 - b)
    }

    /// F with F'' = γ on (0,∞), F(0) = F'(0) = 0, extended evenly.
    /// The double integral of γ(s-r) over a product of two intervals is a
    /// second difference of F.
    pub fn double_antiderivative(&self, x: f64) -> f64 {
        let b = self.beta();
        self.amplitude() * x.abs().powf(2.0 - b) / ((1.0 - b) * (2.0 - b))
    }

    /// ∫_a^{a+h} ∫_c^{c+h} γ(s - r) dr ds.
    pub fn cell_weight(&self, a: f64, c: f64, h: f64) -> f64 {
        let d = a - c;
        let f = |x: f64| self.double_antiderivative(x);
        f(d + h) - 2.0 * f(d) + f(d - h)
    }

    /// Spectral density of γ in time: ∫ e^{-iτt} γ(t) dt = c |τ|^{β-1}.
    /// Bounded families are atoms at τ = 0 and return 0 here.
    pub fn spectral_density(&self, tau: f64) -> f64 {
        let b = self.beta();
        if b == 0.0 {
            return 0.0;
        }
        self.amplitude() * riesz_constant_unchecked(b, 1) * tau.abs().powf(b - 1.0)
    }

    /// Spectral mass of γ on the symmetric band `[-w, w]`.
    pub fn spectral_mass_to(&self, w: f64) -> f64 {
        let b = self.beta();
        if b == 0.0 {
            return 2.0 * PI * self.amplitude();
        }
        self.amplitude() * riesz_constant_unchecked(b, 1) * 2.0 * w.powf(b) / b
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            TimeFamily::RieszTime { .. } => "riesz_time",
            TimeFamily::FbmDerivative { .. } => "fbm_derivative",
            TimeFamily::Constant { .. } => "constant",
            TimeFamily::None => "none",
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TimeKernelSpec { family: self.family, normalization: self.normalization * factor }
    }
}

pub fn eval_gamma(spec: &TimeKernelSpec, t: f64) -> Result<f64> {
    spec.eval(t)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceFamily {
    Riesz { eta: f64 },
    Bessel { eta: f64 },
    Fractional { hurst: Vec<f64> },
    /// Heat kernel with standard deviation ε (d = 1).
    MollifiedWhite { epsilon: f64 },
    GaussianTest { scale: f64 },
    ConstantTest { c: f64 },
    /// Lebesgue spectral measure (space white noise); spectral-only.
    White,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceKernelSpec {
    pub family: SpaceFamily,
    pub dim: usize,
    pub normalization: f64,
}

fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

fn riesz_constant_unchecked(eta: f64, d: usize) -> f64 {
    let df = d as f64;
    PI.powf(df / 2.0) * 2f64.powf(df - eta) * gamma((df - eta) / 2.0) / gamma(eta / 2.0)
}

/// c_{η,d} with ℱ|x|^{-η} = c_{η,d} |ξ|^{η-d}, for 0 < η < min(2, d).
pub fn riesz_constant(eta: f64, d: usize) -> Result<f64> {
    if d == 0 || !(eta > 0.0 && eta < 2.0 && eta < d as f64) {
        return Err(Error::OutOfRange(format!(
            "riesz constant needs 0 < eta < min(2, d); got eta = {eta}, d = {d}"
        )));
    }
    Ok(riesz_constant_unchecked(eta, d))
}

/// ∫_0^∞ w^a e^{-w} e^{-r²/(4w)} dw.
pub fn bessel_integral(a: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        if a <= -1.0 {
            return Err(Error::SingularAtZero { family: "bessel" });
        }
        return Ok(gamma(a + 1.0));
    }
    let q = r * r / 4.0;
    let res = quad::half_line(
        |w: f64| w.powf(a) * (-w - q / w).exp(),
        Tails { zero: None, inf: None },
        Tol::new(1e-13, 1e-11),
    )?;
    Ok(res.value)
}

/// Radial description of μ: the mass density per unit |ξ| plus an atom at 0.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial {
    /// Power of the radial density near r = 0.
    pub zero: f64,
    /// Power at infinity, `None` for faster-than-polynomial decay.
    pub inf: Option<f64>,
    pub atom: f64,
}

impl SpaceKernelSpec {
    pub fn new(family: SpaceFamily, dim: usize, normalization: f64) -> Result<Self> {
        let s = SpaceKernelSpec { family, dim, normalization };
        s.validate()?;
        Ok(s)
    }

    /// Builds a spec without the admissibility checks, for integrability
    /// diagnostics on candidate kernels. Only the spectral side is meaningful
    /// outside the admissible range.
    pub fn unchecked(family: SpaceFamily, dim: usize, normalization: f64) -> Self {
        SpaceKernelSpec { family, dim, normalization }
    }

    pub fn riesz(eta: f64, dim: usize) -> Result<Self> {
        Self::new(SpaceFamily::Riesz { eta }, dim, 1.0)
    }
    pub fn bessel(eta: f64, dim: usize) -> Result<Self> {
        Self::new(SpaceFamily::Bessel { eta }, dim, 1.0)
    }
    pub fn fractional(hurst: Vec<f64>) -> Result<Self> {
        let d = hurst.len();
        Self::new(SpaceFamily::Fractional { hurst }, d, 1.0)
    }
    pub fn mollified_white(epsilon: f64) -> Result<Self> {
        Self::new(SpaceFamily::MollifiedWhite { epsilon }, 1, 1.0)
    }
    pub fn gaussian_test(scale: f64, dim: usize) -> Result<Self> {
        Self::new(SpaceFamily::GaussianTest { scale }, dim, 1.0)
    }
    pub fn constant_test(c: f64, dim: usize) -> Result<Self> {
        Self::new(SpaceFamily::ConstantTest { c }, dim, 1.0)
    }
    pub fn white(dim: usize) -> Result<Self> {
        Self::new(SpaceFamily::White, dim, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim as f64;
        let bad = |m: String| Err(Error::OutOfRange(m));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return bad(format!("space normalization {} must be positive", self.normalization));
        }
        match &self.family {
            SpaceFamily::Riesz { eta } if !(*eta > 0.0 && *eta < 2.0 && *eta < d.max(2.0)) => {
                bad(format!("riesz eta = {eta} not in (0,2)"))
            }
            SpaceFamily::Riesz { eta } if *eta >= d && self.dim != 1 => {
                bad(format!("riesz eta = {eta} must be below d = {d}"))
            }
            SpaceFamily::Bessel { eta } if !(*eta > d - 2.0 && *eta > 0.0) => {
                bad(format!("bessel eta = {eta} must exceed max(0, d-2) = {}", (d - 2.0).max(0.0)))
            }
            SpaceFamily::Fractional { hurst } => {
                if hurst.len() != self.dim {
                    return bad(format!("fractional needs {} Hurst indices, got {}", self.dim, hurst.len()));
                }
                if let Some(h) = hurst.iter().find(|h| !(**h > 0.5 && **h < 1.0)) {
                    return bad(format!("fractional H_i = {h} not in (1/2,1)"));
                }
                let s: f64 = hurst.iter().sum();
                if s <= d - 1.0 {
                    return bad(format!("fractional needs sum H_i = {s} > d - 1 = {}", d - 1.0));
                }
                Ok(())
            }
            SpaceFamily::MollifiedWhite { epsilon } => {
                if self.dim != 1 {
                    return bad("mollified_white is defined for d = 1 only".into());
                }
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return bad(format!("mollified_white epsilon = {epsilon} must be positive"));
                }
                Ok(())
            }
            SpaceFamily::GaussianTest { scale } if !(*scale > 0.0 && scale.is_finite()) => {
                bad(format!("gaussian_test scale = {scale} must be positive"))
            }
            SpaceFamily::ConstantTest { c } if !(*c >= 0.0 && c.is_finite()) => {
                bad(format!("constant_test c = {c} must be nonnegative"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            SpaceFamily::Riesz { .. } => "riesz",
            SpaceFamily::Bessel { .. } => "bessel",
            SpaceFamily::Fractional { .. } => "fractional",
            SpaceFamily::MollifiedWhite { .. } => "mollified_white",
            SpaceFamily::GaussianTest { .. } => "gaussian_test",
            SpaceFamily::ConstantTest { .. } => "constant_test",
            SpaceFamily::White => "white",
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpaceKernelSpec { normalization: self.normalization * factor, ..self.clone() }
    }

    /// Whether Λ exists as a function (otherwise only μ is available).
    pub fn is_pointwise(&self) -> bool {
        match self.family {
            SpaceFamily::White => false,
            SpaceFamily::Riesz { eta } => eta < self.dim as f64,
            _ => true,
        }
    }

    /// Homogeneity exponent a of Λ near the origin: Λ(x) ~ |x|^{-a}.
    pub fn spatial_exponent(&self) -> f64 {
        let d = self.dim as f64;
        match &self.family {
            SpaceFamily::Riesz { eta } => *eta,
            SpaceFamily::Fractional { hurst } => hurst.iter().map(|h| 2.0 - 2.0 * h).sum(),
            SpaceFamily::Bessel { eta } => (d - eta).max(0.0),
            SpaceFamily::White => d,
            _ => 0.0,
        }
    }

    fn riesz_like_constant(&self) -> f64 {
        match &self.family {
            SpaceFamily::Riesz { eta } => {
                if *eta < self.dim as f64 {
                    riesz_constant_unchecked(*eta, self.dim)
                } else {
                    1.0
                }
            }
            _ => 1.0,
        }
    }

    pub fn eval_lambda(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::OutOfRange(format!("point has {} coordinates, kernel has d = {}", x.len(), self.dim)));
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let n = self.normalization;
        let d = self.dim as f64;
        let v = match &self.family {
            SpaceFamily::Riesz { eta } => {
                if !self.is_pointwise() {
                    return Err(Error::NotPointwise("riesz with eta >= d"));
                }
                if r2 == 0.0 {
                    return Err(Error::SingularAtZero { family: "riesz" });
                }
                r2.powf(-eta / 2.0)
            }
            SpaceFamily::Fractional { hurst } => {
                let mut p = 1.0;
                for (&h, xi) in hurst.iter().zip(x) {
                    if *xi == 0.0 {
                        return Err(Error::SingularAtZero { family: "fractional" });
                    }
                    p *= h * (2.0 * h - 1.0) * xi.abs().powf(2.0 * h - 2.0);
                }
                p
            }
            SpaceFamily::Bessel { eta } => {
                let a = (eta - d) / 2.0 - 1.0;
                (4.0 * PI).powf(-d / 2.0) / gamma(eta / 2.0) * bessel_integral(a, r2.sqrt())?
            }
            SpaceFamily::MollifiedWhite { epsilon } => {
                let e2 = epsilon * epsilon;
                (-r2 / (2.0 * e2)).exp() / (2.0 * PI * e2).sqrt()
            }
            SpaceFamily::GaussianTest { scale } => (-r2 / (2.0 * scale * scale)).exp(),
            SpaceFamily::ConstantTest { c } => *c,
            SpaceFamily::White => return Err(Error::NotPointwise("white")),
        };
        Ok(n * v)
    }

    /// Density of μ with respect to Lebesgue measure. The constant test
    /// kernel is a pure atom at 0 and has density 0 elsewhere.
    pub fn mu_density(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::OutOfRange(format!("point has {} coordinates, kernel has d = {}", xi.len(), self.dim)));
        }
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let d = self.dim as f64;
        let v = match &self.family {
            SpaceFamily::Riesz { eta } => {
                if r2 == 0.0 {
                    return Err(Error::SingularAtZero { family: "riesz" });
                }
                self.riesz_like_constant() * r2.powf((eta - d) / 2.0)
            }
            SpaceFamily::Fractional { hurst } => {
                let mut p = 1.0;
                for (&h, x) in hurst.iter().zip(xi) {
                    if *x == 0.0 {
                        return Err(Error::SingularAtZero { family: "fractional" });
                    }
                    let c = h * (2.0 * h - 1.0) * riesz_constant_unchecked(2.0 - 2.0 * h, 1);
                    p *= c * x.abs().powf(1.0 - 2.0 * h);
                }
                p
            }
            SpaceFamily::Bessel { eta } => (1.0 + r2).powf(-eta / 2.0),
            SpaceFamily::MollifiedWhite { epsilon } => (-epsilon * epsilon * r2 / 2.0).exp(),
            SpaceFamily::GaussianTest { scale } => {
                let s2 = scale * scale;
                (2.0 * PI * s2).powf(d / 2.0) * (-s2 * r2 / 2.0).exp()
            }
            SpaceFamily::ConstantTest { .. } => 0.0,
            SpaceFamily::White => 1.0,
        };
        Ok(self.normalization * v)
    }

    /// Mass of μ at the origin (nonzero only for the constant kernel).
    pub fn mu_atom(&self) -> f64 {
        match self.family {
            SpaceFamily::ConstantTest { c } => self.normalization * c * (2.0 * PI).powi(self.dim as i32),
            _ => 0.0,
        }
    }

    /// Radial mass density m(r) with ∫ f(|ξ|) μ(dξ) = ∫_0^∞ f(r) m(r) dr + atom·f(0).
    pub(crate) fn radial_mass(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        let n = self.normalization;
        let v = match &self.family {
            SpaceFamily::Riesz { eta } => sphere_area(self.dim) * self.riesz_like_constant() * r.powf(eta - 1.0),
            SpaceFamily::Fractional { hurst } => {
                let (c, b) = fractional_radial(hurst);
                c * r.powf(b - 1.0)
            }
            SpaceFamily::Bessel { eta } => sphere_area(self.dim) * r.powf(d - 1.0) * (1.0 + r * r).powf(-eta / 2.0),
            SpaceFamily::MollifiedWhite { epsilon } => 2.0 * (-epsilon * epsilon * r * r / 2.0).exp(),
            SpaceFamily::GaussianTest { scale } => {
                let s2 = scale * scale;
                sphere_area(self.dim) * r.powf(d - 1.0) * (2.0 * PI * s2).powf(d / 2.0) * (-s2 * r * r / 2.0).exp()
            }
            SpaceFamily::ConstantTest { .. } => 0.0,
            SpaceFamily::White => sphere_area(self.dim) * r.powf(d - 1.0),
        };
        n * v
    }

    pub(crate) fn radial(&self) -> Radial {
        let d = self.dim as f64;
        match &self.family {
            SpaceFamily::Riesz { eta } => Radial { zero: eta - 1.0, inf: Some(eta - 1.0), atom: 0.0 },
            SpaceFamily::Fractional { hurst } => {
                let b = fractional_radial(hurst).1;
                Radial { zero: b - 1.0, inf: Some(b - 1.0), atom: 0.0 }
            }
            SpaceFamily::Bessel { eta } => Radial { zero: d - 1.0, inf: Some(d - 1.0 - eta), atom: 0.0 },
            SpaceFamily::White => Radial { zero: d - 1.0, inf: Some(d - 1.0), atom: 0.0 },
            SpaceFamily::ConstantTest { .. } => Radial { zero: 0.0, inf: None, atom: self.mu_atom() },
            _ => Radial { zero: d - 1.0, inf: None, atom: 0.0 },
        }
    }

    /// φ(w) = ∫ e^{-w|ξ|²} μ(dξ), w > 0. Then E[Λ(B_u - B'_v)] = (2π)^{-d} φ((u+v)/2).
    pub fn gaussian_mu_transform(&self, w: f64) -> Result<f64> {
        if w <= 0.0 {
            return Err(Error::OutOfRange(format!("gaussian transform needs w > 0, got {w}")));
        }
        let d = self.dim as f64;
        let n = self.normalization;
        let v = match &self.family {
            SpaceFamily::Riesz { eta } => {
                sphere_area(self.dim) * self.riesz_like_constant() * gamma(eta / 2.0) / (2.0 * w.powf(eta / 2.0))
            }
            SpaceFamily::Fractional { hurst } => {
                let (c, b) = fractional_radial(hurst);
                c * gamma(b / 2.0) / (2.0 * w.powf(b / 2.0))
            }
            SpaceFamily::MollifiedWhite { epsilon } => (PI / (w + epsilon * epsilon / 2.0)).sqrt(),
            SpaceFamily::GaussianTest { scale } => {
                let s2 = scale * scale;
                (2.0 * PI * s2).powf(d / 2.0) * (PI / (w + s2 / 2.0)).powf(d / 2.0)
            }
            SpaceFamily::ConstantTest { .. } => return Ok(self.mu_atom()),
            SpaceFamily::White => (PI / w).powf(d / 2.0),
            SpaceFamily::Bessel { .. } => {
                let rad = self.radial();
                let r = quad::half_line(
                    |r| self.radial_mass(r) * (-w * r * r).exp(),
                    Tails { zero: Some(rad.zero), inf: None },
                    Tol::new(1e-13, 1e-11),
                )?;
                return Ok(r.value);
            }
        };
        Ok(n * v)
    }

    /// E[Λ(B_u - B'_v)] for independent Brownian motions started together.
    pub fn expected_lambda(&self, u_plus_v: f64) -> Result<f64> {
        Ok((2.0 * PI).powf(-(self.dim as f64)) * self.gaussian_mu_transform(u_plus_v / 2.0)?)
    }
}

/// The fractional measure in polar form: μ-mass per dr is c·r^{b-1} with
/// b = Σ(2 - 2H_i) and c = C_H ∫_{S^{d-1}} Π|ω_i|^{1-2H_i} dω.
fn fractional_radial(hurst: &[f64]) -> (f64, f64) {
    let mut c = 2.0;
    let mut b = 0.0;
    for &h in hurst {
        let bi = 2.0 - 2.0 * h;
        c *= h * (2.0 * h - 1.0) * riesz_constant_unchecked(bi, 1) * gamma(bi / 2.0);
        b += bi;
    }
    c /= gamma(b / 2.0);
    (c, b)
}

pub fn eval_lambda(spec: &SpaceKernelSpec, x: &[f64]) -> Result<f64> {
    spec.eval_lambda(x)
}

pub fn mu_density(spec: &SpaceKernelSpec, xi: &[f64]) -> Result<f64> {
    spec.mu_density(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_examples() {
        let g = TimeKernelSpec::fbm_derivative(0.75).unwrap();
        assert_relative_eq!(g.eval(1.0).unwrap(), 0.375, max_relative = 1e-15);
        assert_eq!(TimeKernelSpec::constant(1.0).unwrap().eval(7.3).unwrap(), 1.0);
        assert_relative_eq!(TimeKernelSpec::riesz_time(0.5).unwrap().eval(4.0).unwrap(), 0.5);
        assert_eq!(g.eval(0.0).unwrap_err().reason(), "singular_at_zero");
    }

    #[test]
    fn gamma_ranges() {
        assert!(TimeKernelSpec::riesz_time(1.0).is_err());
        assert!(TimeKernelSpec::fbm_derivative(0.5).is_err());
        assert!(TimeKernelSpec::constant(-1.0).is_err());
    }

    #[test]
    fn cell_weight_matches_quadrature() {
        let g = TimeKernelSpec::riesz_time(0.3).unwrap();
        let w = g.cell_weight(2.0, 0.5, 0.5);
        let q = crate::quad::integrate(
            |s| crate::quad::integrate(|r| g.eval(s - r).unwrap(), 0.5, 1.0, Tol::default()).unwrap().value,
            2.0,
            2.5,
            Tol::default(),
        )
        .unwrap();
        assert_relative_eq!(w, q.value, max_relative = 1e-9);
        // diagonal cell: 2 ∫_0^h (h - x) γ(x) dx
        let h: f64 = 0.25;
        let exact = 2.0 * h.powf(1.7) / (0.7 * 1.7);
        assert_relative_eq!(g.cell_weight(1.0, 1.0, h), exact, max_relative = 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let r = SpaceKernelSpec::riesz(1.0, 2).unwrap();
        assert_relative_eq!(r.eval_lambda(&[3.0, 4.0]).unwrap(), 0.2, max_relative = 1e-15);
        let g = SpaceKernelSpec::gaussian_test(1.0, 1).unwrap();
        assert_eq!(g.eval_lambda(&[0.0]).unwrap(), 1.0);
        assert_eq!(r.eval_lambda(&[0.0, 0.0]).unwrap_err().reason(), "singular_at_zero");
        let f = SpaceKernelSpec::fractional(vec![0.7, 0.8]).unwrap();
        assert_eq!(f.eval_lambda(&[1.0, 0.0]).unwrap_err().reason(), "singular_at_zero");
        assert_relative_eq!(f.eval_lambda(&[1.0, 1.0]).unwrap(), 0.7 * 0.4 * 0.8 * 0.6, max_relative = 1e-14);
    }

    #[test]
    fn bessel_integral_gamma_oracle() {
        assert_relative_eq!(bessel_integral(0.5, 0.0).unwrap(), PI.sqrt() / 2.0, max_relative = 1e-14);
        // quadrature path agrees with Γ at small r
        let q = bessel_integral(0.5, 1e-6).unwrap();
        assert_relative_eq!(q, PI.sqrt() / 2.0, max_relative = 1e-6);
        // closed form for a = -1/2: √π e^{-r}
        assert_relative_eq!(bessel_integral(-0.5, 2.0).unwrap(), PI.sqrt() * (-2.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn mu_examples() {
        let b = SpaceKernelSpec::bessel(2.0, 1).unwrap();
        assert_relative_eq!(b.mu_density(&[1.0]).unwrap(), 0.5);
        let g = SpaceKernelSpec::gaussian_test(1.0, 1).unwrap();
        assert_relative_eq!(g.mu_density(&[0.0]).unwrap(), (2.0 * PI).sqrt(), max_relative = 1e-15);
        let r = SpaceKernelSpec::riesz(1.0, 1).unwrap();
        assert_relative_eq!(r.mu_density(&[2.0]).unwrap(), 1.0);
        let r = SpaceKernelSpec::riesz(0.5, 1).unwrap();
        assert_relative_eq!(
            r.mu_density(&[2.0]).unwrap(),
            riesz_constant(0.5, 1).unwrap() * 2f64.powf(-0.5),
            max_relative = 1e-15
        );
    }

    #[test]
    fn riesz_constant_domain() {
        assert_eq!(riesz_constant(1.0, 1).unwrap_err().reason(), "out_of_range");
        assert!(riesz_constant(2.0, 3).is_err());
        assert!(riesz_constant(1.0, 2).is_ok());
    }

    #[test]
    fn fractional_product_transform() {
        // the polar form of the fractional measure must agree with the product of 1-d Riesz transforms
        let f = SpaceKernelSpec::fractional(vec![0.7, 0.85]).unwrap();
        let w = 0.8;
        let mut prod = 1.0;
        for h in [0.7f64, 0.85] {
            let one = SpaceKernelSpec::riesz(2.0 - 2.0 * h, 1).unwrap();
            prod *= h * (2.0 * h - 1.0) * one.gaussian_mu_transform(w).unwrap();
        }
        assert_relative_eq!(f.gaussian_mu_transform(w).unwrap(), prod, max_relative = 1e-12);
    }

    #[test]
    fn expected_lambda_gaussian() {
        let g = SpaceKernelSpec::gaussian_test(1.0, 1).unwrap();
        assert_relative_eq!(g.expected_lambda(2.0).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-14);
    }
}
