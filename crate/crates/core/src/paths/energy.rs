//! Interaction energy `∫_0^t ∫_0^t γ(s-r) Λ(B^i_s - B^j_r) ds dr` of sampled paths.
//!
//! Between grid nodes each path is a Brownian bridge, so the integrand is
//! replaced by its conditional expectation given the grid,
//! `Ψ(m, v) = E[Λ(m + √v Z)]` with the bridge mean `m` and variance `v`.
//! That keeps the integrand integrable on the diagonal of the self-energy
//! (straight-line interpolation would make it behave like |s-r|^{-β-a}).

use crate::error::{Error, Result};
use crate::kernels::{ConditionalKernel, SpaceKernelSpec, TimeKernelSpec};
use crate::quad::{KahanSum, Rule01};

use super::PathBundle;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMode {
    /// Midpoints of a uniform sub-grid everywhere; diagonal sub-cells of a
    /// self-energy are sampled at a quarter-step offset.
    MidpointTensor,
    /// Sub-grid midpoints away from the diagonal, Gauss products in a band
    /// around it, and graded / Duffy rules on the singular cells.
    OffsetDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub mode: QuadratureMode,
    /// Each grid cell is split into `subdivision` sub-cells per time axis for the midpoint sums.
    pub subdivision: usize,
    /// Cells with `2 ≤ |a-b| ≤ band` use a 3×3 Gauss product.
    pub band: usize,
    /// Gauss order of the graded rules on singular cells.
    pub near_order: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { mode: QuadratureMode::OffsetDiagonal, subdivision: 1, band: 8, near_order: 8 }
    }
}

impl QuadratureRule {
    pub fn midpoint(subdivision: usize) -> Self {
        QuadratureRule { mode: QuadratureMode::MidpointTensor, subdivision, band: 0, near_order: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subdivision == 0 || self.subdivision > 64 {
            return Err(Error::OutOfRange(format!("subdivision {} must lie in 1..=64", self.subdivision)));
        }
        if self.near_order < 2 || self.near_order > 64 {
            return Err(Error::OutOfRange(format!("near_order {} must lie in 2..=64", self.near_order)));
        }
        Ok(())
    }
}

/// Everything that depends on (γ, Λ, rule, grid) but not on the paths.
#[derive(Debug, Clone)]
pub struct EnergyPlan {
    gamma: TimeKernelSpec,
    kern: ConditionalKernel,
    rule: QuadratureRule,
    t: f64,
    steps: usize,
    h: f64,
    d: usize,
    a: f64,
    beta: f64,
    constant: Option<f64>,
    /// sub-cell γ weights indexed by offset + steps·q
    w_sub: Vec<f64>,
    sub_u: Vec<f64>,
    sub_var: Vec<f64>,
    diag: Rule01,
    duffy_z: Rule01,
    duffy_y: Rule01,
    corner_y: Rule01,
    gauss: Rule01,
    gauss_var: Vec<f64>,
}

impl EnergyPlan {
    pub fn new(
        gamma: &TimeKernelSpec,
        lambda: &SpaceKernelSpec,
        rule: QuadratureRule,
        t: f64,
        steps: usize,
    ) -> Result<Self> {
        rule.validate()?;
        gamma.validate()?;
        lambda.validate()?;
        if lambda.dim > MAX_DIM {
            return Err(Error::Unsupported(format!("path energies support d <= {MAX_DIM}")));
        }
        if !(t > 0.0 && t.is_finite()) || steps < 2 {
            return Err(Error::OutOfRange(format!("need t > 0 and steps >= 2, got t = {t}, steps = {steps}")));
        }
        let kern = ConditionalKernel::new(lambda)?;
        let d = lambda.dim;
        let h = t / steps as f64;
        let q = rule.subdivision;
        let hs = h / q as f64;
        let n_sub = steps * q;
        let w_sub = (0..=2 * n_sub)
            .map(|i| {
                let off = i as f64 - n_sub as f64;
                gamma.cell_weight(off * hs, 0.0, hs)
            })
            .collect();
        let sub_u: Vec<f64> = (0..q).map(|k| (k as f64 + 0.5) * hs).collect();
        let sub_var = sub_u.iter().map(|u| u * (h - u) / h).collect();
        let beta = gamma.beta();
        let a = lambda.spatial_exponent();
        let n = rule.near_order;
        let diag = {
            // graded on [0, 1/2], plain on [1/2, 1]
            let g = Rule01::graded(n, -beta - a / 2.0);
            let p = Rule01::legendre(n);
            let mut nodes: Vec<f64> = g.nodes.iter().map(|x| 0.5 * x).collect();
            let mut weights: Vec<f64> = g.weights.iter().map(|w| 0.5 * w).collect();
            nodes.extend(p.nodes.iter().map(|x| 0.5 + 0.5 * x));
            weights.extend(p.weights.iter().map(|w| 0.5 * w));
            Rule01 { nodes, weights }
        };
        let duffy_z = Rule01::graded(n, 1.0 - beta - a / 2.0);
        let duffy_y = Rule01::legendre(n);
        let corner_y = {
            let g = Rule01::graded(n, -beta);
            Rule01 { nodes: g.nodes.iter().map(|x| 1.0 - x).collect(), weights: g.weights }
        };
        let gauss = Rule01::legendre(3);
        let gauss_var = gauss.nodes.iter().map(|x| x * (1.0 - x) * h).collect();
        let constant = if kern.is_constant() { Some(kern.eval(&vec![0.0; d], 0.0)?) } else { None };
        Ok(EnergyPlan {
            gamma: *gamma,
            kern,
            rule,
            t,
            steps,
            h,
            d,
            a,
            beta,
            constant,
            w_sub,
            sub_u,
            sub_var,
            diag,
            duffy_z,
            duffy_y,
            corner_y,
            gauss,
            gauss_var,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Self-energies need `a < 2 - 2β`.
    pub fn check_self_admissible(&self) -> Result<()> {
        if self.a >= 2.0 - 2.0 * self.beta {
            return Err(Error::InadmissibleSelfEnergy { a: self.a, beta: self.beta });
        }
        Ok(())
    }

    fn check_path(&self, p: &[f64]) -> Result<()> {
        if p.len() != (self.steps + 1) * self.d {
            return Err(Error::OutOfRange(format!(
                "path has {} values, plan expects {}",
                p.len(),
                (self.steps + 1) * self.d
            )));
        }
        Ok(())
    }

    /// Energy between two paths; `same` selects the self-energy of `pi`.
    pub fn energy(&self, pi: &[f64], pj: &[f64], same: bool) -> Result<f64> {
        self.check_path(pi)?;
        self.check_path(pj)?;
        if same {
            self.check_self_admissible()?;
        }
        if let Some(c) = self.constant {
            return Ok(c * 2.0 * self.gamma.double_antiderivative(self.t));
        }
        let e = if same {
            self.self_energy(pi)?
        } else {
            self.cross_energy(pi, pj)?
        };
        Ok(e.max(0.0))
    }

    fn slopes(&self, p: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..self.steps * d).map(|i| (p[i + d] - p[i]) / self.h).collect()
    }

    /// Sub-grid centre positions, `steps·q × d`.
    fn sub_positions(&self, p: &[f64], slope: &[f64]) -> Vec<f64> {
        let d = self.d;
        let q = self.rule.subdivision;
        let mut out = Vec::with_capacity(self.steps * q * d);
        for a in 0..self.steps {
            for &u in &self.sub_u {
                for c in 0..d {
                    out.push(p[a * d + c] + slope[a * d + c] * u);
                }
            }
        }
        out
    }

    #[inline]
    fn psi(&self, m: &[f64; MAX_DIM], v: f64) -> Result<f64> {
        self.kern.eval(&m[..self.d], v)
    }

    #[inline]
    fn w_sub(&self, off: isize) -> f64 {
        self.w_sub[(off + (self.steps * self.rule.subdivision) as isize) as usize]
    }

    fn self_energy(&self, p: &[f64]) -> Result<f64> {
        let d = self.d;
        let h = self.h;
        let q = self.rule.subdivision;
        let slope = self.slopes(p);
        let x = self.sub_positions(p, &slope);
        let mut acc = KahanSum::default();
        let mut m = [0.0; MAX_DIM];
        let offset = self.rule.mode == QuadratureMode::OffsetDiagonal;

        for a in 0..self.steps {
            let sa = &slope[a * d..(a + 1) * d];
            if offset {
                // 2 h² ∫_0^1 (1-x) γ(hx) Ψ(slope·hx, hx(1-x)) dx
                let mut s = 0.0;
                for (&xn, &w) in self.diag.nodes.iter().zip(&self.diag.weights) {
                    let lag = h * xn;
                    for c in 0..d {
                        m[c] = sa[c] * lag;
                    }
                    s += w * (1.0 - xn) * self.gamma.eval(lag)? * self.psi(&m, lag * (1.0 - xn))?;
                }
                acc.add(2.0 * h * h * s);
            } else {
                for ka in 0..q {
                    for kb in 0..q {
                        let lag = if ka == kb { 0.5 * h / q as f64 } else { (self.sub_u[ka] - self.sub_u[kb]).abs() };
                        for c in 0..d {
                            m[c] = sa[c] * lag;
                        }
                        acc.add(self.w_sub(ka as isize - kb as isize) * self.psi(&m, lag * (1.0 - lag / h))?);
                    }
                }
            }
        }

        for a in 1..self.steps {
            for b in 0..a {
                let delta = a - b;
                if offset && delta == 1 {
                    acc.add(2.0 * self.adjacent(&slope[a * d..(a + 1) * d], &slope[b * d..(b + 1) * d])?);
                } else if offset && delta <= self.rule.band {
                    acc.add(2.0 * self.gauss_cell(p, &slope, a, p, &slope, b)?);
                } else {
                    acc.add(2.0 * self.sub_cell(&x, a, &x, b, &mut m)?);
                }
            }
        }
        Ok(acc.value())
    }

    fn cross_energy(&self, pi: &[f64], pj: &[f64]) -> Result<f64> {
        let d = self.d;
        let si = self.slopes(pi);
        let sj = self.slopes(pj);
        let xi = self.sub_positions(pi, &si);
        let xj = self.sub_positions(pj, &sj);
        let shared = pi[..d] == pj[..d];
        let offset = self.rule.mode == QuadratureMode::OffsetDiagonal;
        let mut acc = KahanSum::default();
        let mut m = [0.0; MAX_DIM];
        for a in 0..self.steps {
            for b in 0..self.steps {
                let delta = a.abs_diff(b);
                let v = if offset && shared && a == 0 && b == 0 {
                    self.corner(&si[..d], &sj[..d])?
                } else if offset && delta >= 2 && delta <= self.rule.band {
                    self.gauss_cell(pi, &si, a, pj, &sj, b)?
                } else {
                    self.sub_cell(&xi, a, &xj, b, &mut m)?
                };
                acc.add(v);
            }
        }
        Ok(acc.value())
    }

    /// Sub-grid midpoint sum over cell pair (a, b) with exact γ weights.
    fn sub_cell(&self, xa: &[f64], a: usize, xb: &[f64], b: usize, m: &mut [f64; MAX_DIM]) -> Result<f64> {
        let d = self.d;
        let q = self.rule.subdivision;
        let mut s = 0.0;
        for ka in 0..q {
            let ia = a * q + ka;
            for kb in 0..q {
                let ib = b * q + kb;
                for c in 0..d {
                    m[c] = xa[ia * d + c] - xb[ib * d + c];
                }
                let v = self.sub_var[ka] + self.sub_var[kb];
                s += self.w_sub(ia as isize - ib as isize) * self.psi(m, v)?;
            }
        }
        Ok(s)
    }

    /// 3×3 Gauss product on a cell pair away from the diagonal.
    fn gauss_cell(&self, pa: &[f64], sa: &[f64], a: usize, pb: &[f64], sb: &[f64], b: usize) -> Result<f64> {
        let d = self.d;
        let h = self.h;
        let mut m = [0.0; MAX_DIM];
        let mut s = 0.0;
        for (k, (&ua, &wa)) in self.gauss.nodes.iter().zip(&self.gauss.weights).enumerate() {
            for (l, (&ub, &wb)) in self.gauss.nodes.iter().zip(&self.gauss.weights).enumerate() {
                for c in 0..d {
                    m[c] = pa[a * d + c] + sa[a * d + c] * ua * h - pb[b * d + c] - sb[b * d + c] * ub * h;
                }
                let lag = (a as f64 + ua - b as f64 - ub) * h;
                s += wa * wb * self.gamma.eval(lag)? * self.psi(&m, self.gauss_var[k] + self.gauss_var[l])?;
            }
        }
        Ok(h * h * s)
    }

    /// Cells sharing the node τ on one path: s = τ + u, r = τ - w.
    /// Duffy split at the corner u = w = 0.
    fn adjacent(&self, s_after: &[f64], s_before: &[f64]) -> Result<f64> {
        let d = self.d;
        let h = self.h;
        let mut m = [0.0; MAX_DIM];
        let mut f = |u: f64, w: f64| -> Result<f64> {
            for c in 0..d {
                m[c] = s_after[c] * u + s_before[c] * w;
            }
            let v = u * (1.0 - u / h) + w * (1.0 - w / h);
            Ok(self.gamma.eval(u + w)? * self.kern.eval(&m[..d], v)?)
        };
        let mut s = 0.0;
        for (&z, &wz) in self.duffy_z.nodes.iter().zip(&self.duffy_z.weights) {
            let rho = h * z;
            for (&y, &wy) in self.duffy_y.nodes.iter().zip(&self.duffy_y.weights) {
                s += wz * wy * z * (f(rho, rho * y)? + f(rho * y, rho)?);
            }
        }
        Ok(h * h * s)
    }

    /// First cell of two paths leaving the same point.
    fn corner(&self, s_i: &[f64], s_j: &[f64]) -> Result<f64> {
        let d = self.d;
        let h = self.h;
        let mut m = [0.0; MAX_DIM];
        let mut f = |u: f64, w: f64| -> Result<f64> {
            for c in 0..d {
                m[c] = s_i[c] * u - s_j[c] * w;
            }
            let v = u * (1.0 - u / h) + w * (1.0 - w / h);
            Ok(self.gamma.eval(u - w)? * self.kern.eval(&m[..d], v)?)
        };
        let mut s = 0.0;
        for (&z, &wz) in self.duffy_z.nodes.iter().zip(&self.duffy_z.weights) {
            let rho = h * z;
            for (&y, &wy) in self.corner_y.nodes.iter().zip(&self.corner_y.weights) {
                s += wz * wy * z * (f(rho, rho * y)? + f(rho * y, rho)?);
            }
        }
        Ok(h * h * s)
    }
}

pub fn interaction_energy(
    bundle: &PathBundle,
    i: usize,
    j: usize,
    gamma: &TimeKernelSpec,
    lambda: &SpaceKernelSpec,
    rule: QuadratureRule,
) -> Result<f64> {
    check_bundle(bundle, lambda)?;
    if i >= bundle.k || j >= bundle.k {
        return Err(Error::OutOfRange(format!("path index out of range for k = {}", bundle.k)));
    }
    let plan = EnergyPlan::new(gamma, lambda, rule, bundle.t, bundle.steps)?;
    plan.energy(bundle.path(i), bundle.path(j), i == j)
}

/// Symmetric k×k matrix of energies; the diagonal is zero unless requested.
pub fn pairwise_energy_matrix(
    bundle: &PathBundle,
    gamma: &TimeKernelSpec,
    lambda: &SpaceKernelSpec,
    rule: QuadratureRule,
    include_diagonal: bool,
) -> Result<Vec<Vec<f64>>> {
    check_bundle(bundle, lambda)?;
    let plan = EnergyPlan::new(gamma, lambda, rule, bundle.t, bundle.steps)?;
    let k = bundle.k;
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        if include_diagonal {
            out[i][i] = plan.energy(bundle.path(i), bundle.path(i), true)?;
        }
        for j in (i + 1)..k {
            let e = plan.energy(bundle.path(i), bundle.path(j), false)?;
            out[i][j] = e;
            out[j][i] = e;
        }
    }
    Ok(out)
}

fn check_bundle(bundle: &PathBundle, lambda: &SpaceKernelSpec) -> Result<()> {
    if bundle.d != lambda.dim {
        return Err(Error::OutOfRange(format!("paths are {}-dimensional, kernel has d = {}", bundle.d, lambda.dim)));
    }
    Ok(())
}
