//! Integrability conditions on μ and the smoothed-mass domination check.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::{SpaceFamily, SpaceKernelSpec};
use crate::error::{Error, Result};
use crate::quad::{self, Tails, Tol};

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `f64::INFINITY` when the integral diverges.
    pub integral_value: f64,
    pub finite: bool,
    pub exponent_p: f64,
    pub converged: bool,
    pub quadrature_error: f64,
}

/// `∫ μ(dξ) / (1 + |ξ|^p)`; finiteness is decided from the tail exponents.
pub fn mu_moment_integral(spec: &SpaceKernelSpec, p: f64, tol: f64) -> Result<HypothesisReport> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::OutOfRange(format!("exponent p = {p} must be nonnegative")));
    }
    let rad = spec.radial();
    let inf = rad.inf.map(|q| q - p);
    let finite = rad.zero > -1.0 && inf.is_none_or(|q| q < -1.0);
    if !finite {
        return Ok(HypothesisReport {
            integral_value: f64::INFINITY,
            finite: false,
            exponent_p: p,
            converged: true,
            quadrature_error: 0.0,
        });
    }
    let r = quad::half_line(
        |r| spec.radial_mass(r) / (1.0 + r.powf(p)),
        Tails { zero: Some(rad.zero), inf },
        Tol::new(tol, tol),
    )?;
    Ok(HypothesisReport {
        integral_value: r.value + rad.atom,
        finite: true,
        exponent_p: p,
        converged: true,
        quadrature_error: r.error,
    })
}

/// `C_N = ∫_{|ξ|≥N} μ(dξ)/|ξ|²` and `D_N = μ{|ξ| ≤ N}`.
pub fn cn_dn(spec: &SpaceKernelSpec, n: f64) -> Result<(f64, f64)> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::OutOfRange(format!("N = {n} must be positive")));
    }
    let rad = spec.radial();
    let tol = Tol::new(1e-13, 1e-12);
    let c = quad::radial_interval(
        |r| spec.radial_mass(r) / (r * r),
        n,
        f64::INFINITY,
        Tails { zero: None, inf: rad.inf.map(|q| q - 2.0) },
        tol,
    )?;
    let d = quad::radial_interval(|r| spec.radial_mass(r), 0.0, n, Tails { zero: Some(rad.zero), inf: None }, tol)?;
    Ok((c.value, d.value + rad.atom))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub v: f64,
    pub at_zero: f64,
    pub values: Vec<f64>,
}

/// Evaluates `g(η) = ∫ e^{-(v/2)|ξ-η|²} μ(dξ)` at each probe and checks `g(η) ≤ g(0)`.
pub fn smoothed_mu_sup_bound(spec: &SpaceKernelSpec, v: f64, probes: &[Vec<f64>]) -> Result<DominationReport> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::OutOfRange(format!("v = {v} must be positive")));
    }
    if let Some(p) = probes.iter().find(|p| p.len() != spec.dim) {
        return Err(Error::OutOfRange(format!("probe {p:?} has wrong dimension")));
    }
    if spec.dim > 1 && matches!(spec.family, SpaceFamily::Fractional { .. }) {
        return Err(Error::Unsupported("smoothed mass for anisotropic fractional kernels in d >= 2".into()));
    }
    let zero = vec![0.0; spec.dim];
    let (at_zero, err0) = smoothed_mass(spec, v, &zero)?;
    let mut values = Vec::with_capacity(probes.len());
    for p in probes {
        let (g, err) = smoothed_mass(spec, v, p)?;
        if g > at_zero * (1.0 + 1e-9) + 10.0 * (err + err0) {
            return Err(Error::DominationViolated { probe: p.clone(), value: g, at_zero });
        }
        values.push(g);
    }
    Ok(DominationReport { v, at_zero, values })
}

fn smoothed_mass(spec: &SpaceKernelSpec, v: f64, eta: &[f64]) -> Result<(f64, f64)> {
    let rho = eta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rad = spec.radial();
    let atom = rad.atom * (-v * rho * rho / 2.0).exp();
    let tol = Tol::new(1e-13, 1e-11);
    let tails = Tails { zero: Some(rad.zero), inf: None };
    let r = if spec.dim == 1 {
        quad::half_line(
            |r| {
                let k = (-v * (r - rho).powi(2) / 2.0).exp() + (-v * (r + rho).powi(2) / 2.0).exp();
                0.5 * spec.radial_mass(r) * k
            },
            tails,
            tol,
        )?
    } else {
        let d = spec.dim as f64;
        let norm = PI.sqrt() * gamma((d - 1.0) / 2.0) / gamma(d / 2.0);
        quad::half_line(
            |r| {
                let kappa = v * r * rho;
                let avg = if kappa == 0.0 {
                    1.0
                } else {
                    quad::integrate(
                        |th: f64| (-kappa * (1.0 - th.cos())).exp() * th.sin().powf(d - 2.0),
                        0.0,
                        PI,
                        Tol::new(1e-14, 1e-12),
                    )
                    .map(|q| q.value / norm)
                    .unwrap_or(f64::NAN)
                };
                spec.radial_mass(r) * (-v * (r - rho).powi(2) / 2.0).exp() * avg
            },
            tails,
            tol,
        )?
    };
    if !r.value.is_finite() {
        return Err(Error::QuadratureNotConverged { estimate: r.value, error: r.error, tol: tol.abs });
    }
    Ok((r.value + atom, r.error))
}
