//! Named kernel pairs with their admissibility inequalities checked at
//! construction.

use crate::error::{Error, Result};
use crate::kernels::{SpaceKernelSpec, TimeKernelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub gamma: TimeKernelSpec,
    pub lambda: SpaceKernelSpec,
}

fn inadmissible(msg: String) -> Error {
    Error::InadmissibleConfig(msg)
}

/// γ = |t|^{-β}, Λ = |x|^{-η}; the time-dependent functional needs η < 2 - 2β.
pub fn riesz(beta: f64, eta: f64, dim: usize) -> Result<Preset> {
    if !(eta > 0.0 && eta < 2.0 - 2.0 * beta) {
        return Err(inadmissible(format!("riesz preset needs 0 < eta < 2 - 2 beta, got beta = {beta}, eta = {eta}")));
    }
    Ok(Preset { name: "riesz", gamma: TimeKernelSpec::riesz_time(beta)?, lambda: SpaceKernelSpec::riesz(eta, dim)? })
}

/// γ = |t|^{-β} with the Bessel kernel of order η; needs η > d + 2β - 2.
pub fn bessel(beta: f64, eta: f64, dim: usize) -> Result<Preset> {
    let d = dim as f64;
    if !(eta > d + 2.0 * beta - 2.0) {
        return Err(inadmissible(format!("bessel preset needs eta > d + 2 beta - 2, got beta = {beta}, eta = {eta}, d = {dim}")));
    }
    Ok(Preset { name: "bessel", gamma: TimeKernelSpec::riesz_time(beta)?, lambda: SpaceKernelSpec::bessel(eta, dim)? })
}

/// Fractional in time (Hurst H) and in each space coordinate (H_i); needs Σ H_i > d - 2H + 1.
pub fn fractional(hurst: f64, space_hurst: Vec<f64>) -> Result<Preset> {
    let d = space_hurst.len() as f64;
    let s: f64 = space_hurst.iter().sum();
    if !(s > d - 2.0 * hurst + 1.0) {
        return Err(inadmissible(format!("fractional preset needs sum H_i > d - 2H + 1, got H = {hurst}, sum = {s}")));
    }
    Ok(Preset {
        name: "fractional",
        gamma: TimeKernelSpec::fbm_derivative(hurst)?,
        lambda: SpaceKernelSpec::fractional(space_hurst)?,
    })
}

/// γ = |t|^{-β} with mollified space white noise in d = 1; the limit kernel
/// δ_0 behaves like η = d = 1, so β < 1/2.
pub fn white_space(beta: f64, epsilon: f64) -> Result<Preset> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(inadmissible(format!("white-space preset needs 0 < beta < 1/2, got {beta}")));
    }
    Ok(Preset {
        name: "white_space",
        gamma: TimeKernelSpec::riesz_time(beta)?,
        lambda: SpaceKernelSpec::mollified_white(epsilon)?,
    })
}

/// One admissible representative per family, all in d = 1.
pub fn defaults() -> Vec<Preset> {
    vec![
        riesz(0.5, 0.5, 1).expect("admissible"),
        bessel(0.5, 1.0, 1).expect("admissible"),
        fractional(0.75, vec![0.75]).expect("admissible"),
        white_space(0.25, 0.05).expect("admissible"),
    ]
}

pub fn by_name(name: &str) -> Option<Preset> {
    defaults().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequalities_enforced() {
        assert!(riesz(0.5, 0.5, 1).is_ok());
        assert_eq!(riesz(0.5, 1.0, 1).unwrap_err().reason(), "inadmissible_config");
        assert!(bessel(0.9, 0.5, 2).is_err());
        assert!(bessel(0.5, 1.5, 2).is_ok());
        assert!(fractional(0.75, vec![0.75]).is_ok());
        assert!(fractional(0.55, vec![0.55, 0.55]).is_err());
        assert!(white_space(0.6, 0.1).is_err());
    }

    #[test]
    fn defaults_lookup() {
        assert_eq!(defaults().len(), 4);
        assert_eq!(by_name("bessel").unwrap().lambda.dim, 1);
        assert!(by_name("nope").is_none());
    }
}
