//! Experiment configuration: one TOML file per run.
//!
//! Every section is optional; a missing section means the documented
//! defaults of its `Default` impl. Parsing and re-serialising a config gives
//! back the same value.

use heatlab::kernels::{SpaceFamily, SpaceKernelSpec, TimeFamily, TimeKernelSpec};
use heatlab::presets::{self, Preset};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Hypothesis,
    Moments,
    Chaos,
    Simplex,
    Partition,
    Synthesize,
    Besov,
    Intermittency,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Hypothesis => "hypothesis",
            Command::Moments => "moments",
            Command::Chaos => "chaos",
            Command::Simplex => "simplex",
            Command::Partition => "partition",
            Command::Synthesize => "synthesize",
            Command::Besov => "besov",
            Command::Intermittency => "intermittency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    /// 0 lets the pool pick the thread count.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<TimeKernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<SpaceKernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<HypothesisParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chaos: Option<ChaosParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex: Option<SimplexParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesize: Option<SynthesizeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besov: Option<BesovParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermittency: Option<IntermittencyParams>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            command,
            seed: 0,
            workers: 0,
            out: None,
            preset: None,
            gamma: None,
            lambda: None,
            hypothesis: None,
            moments: None,
            chaos: None,
            simplex: None,
            partition: None,
            synthesize: None,
            besov: None,
            intermittency: None,
        }
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(cfg.schema_version));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// The (γ, Λ) pair, from the preset if one is given, else from the
    /// `gamma` and `lambda` tables.
    pub fn kernels(&self) -> CliResult<(TimeKernelSpec, SpaceKernelSpec)> {
        if let Some(p) = &self.preset {
            if self.gamma.is_some() || self.lambda.is_some() {
                return Err(CliError::Invalid("give either a preset or gamma/lambda tables, not both".into()));
            }
            let p = p.resolve()?;
            return Ok((p.gamma, p.lambda));
        }
        let g = self.gamma.as_ref().ok_or(CliError::Missing("gamma"))?.to_spec()?;
        let l = self.lambda.as_ref().ok_or(CliError::Missing("lambda"))?.to_spec()?;
        Ok((g, l))
    }

    /// Λ alone, for the commands that never touch γ.
    pub fn space_kernel(&self) -> CliResult<SpaceKernelSpec> {
        match (&self.preset, &self.lambda) {
            (Some(_), _) => self.kernels().map(|k| k.1),
            (None, Some(l)) => l.to_spec(),
            (None, None) => Err(CliError::Missing("lambda")),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn need<T: Copy>(v: Option<T>, field: &'static str) -> CliResult<T> {
    v.ok_or(CliError::Missing(field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFamilyName {
    RieszTime,
    FbmDerivative,
    Constant,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeKernelConfig {
    pub family: TimeFamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub normalization: f64,
}

impl TimeKernelConfig {
    pub fn to_spec(&self) -> CliResult<TimeKernelSpec> {
        let family = match self.family {
            TimeFamilyName::RieszTime => TimeFamily::RieszTime { beta: need(self.beta, "gamma.beta")? },
            TimeFamilyName::FbmDerivative => TimeFamily::FbmDerivative { hurst: need(self.hurst, "gamma.H")? },
            TimeFamilyName::Constant => TimeFamily::Constant { c: need(self.c, "gamma.c")? },
            TimeFamilyName::None => TimeFamily::None,
        };
        Ok(TimeKernelSpec::new(family, self.normalization)?)
    }

    pub fn from_spec(spec: &TimeKernelSpec) -> Self {
        let mut c = TimeKernelConfig {
            family: TimeFamilyName::None,
            beta: None,
            hurst: None,
            c: None,
            normalization: spec.normalization,
        };
        match spec.family {
            TimeFamily::RieszTime { beta } => {
                c.family = TimeFamilyName::RieszTime;
                c.beta = Some(beta);
            }
            TimeFamily::FbmDerivative { hurst } => {
                c.family = TimeFamilyName::FbmDerivative;
                c.hurst = Some(hurst);
            }
            TimeFamily::Constant { c: v } => {
                c.family = TimeFamilyName::Constant;
                c.c = Some(v);
            }
            TimeFamily::None => {}
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceFamilyName {
    Riesz,
    Bessel,
    Fractional,
    MollifiedWhite,
    GaussianTest,
    ConstantTest,
    White,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceKernelConfig {
    pub family: SpaceFamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(rename = "Hvec", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Ignored for `fractional`, whose dimension is the length of `Hvec`.
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub normalization: f64,
}

impl SpaceKernelConfig {
    fn family(&self) -> CliResult<(SpaceFamily, usize)> {
        let dim = self.dim;
        let f = match self.family {
            SpaceFamilyName::Riesz => SpaceFamily::Riesz { eta: need(self.eta, "lambda.eta")? },
            SpaceFamilyName::Bessel => SpaceFamily::Bessel { eta: need(self.eta, "lambda.eta")? },
            SpaceFamilyName::Fractional => {
                let h = self.hurst.clone().ok_or(CliError::Missing("lambda.Hvec"))?;
                let d = h.len();
                return Ok((SpaceFamily::Fractional { hurst: h }, d));
            }
            SpaceFamilyName::MollifiedWhite => {
                SpaceFamily::MollifiedWhite { epsilon: need(self.epsilon, "lambda.epsilon")? }
            }
            SpaceFamilyName::GaussianTest => SpaceFamily::GaussianTest { scale: need(self.scale, "lambda.scale")? },
            SpaceFamilyName::ConstantTest => SpaceFamily::ConstantTest { c: need(self.c, "lambda.c")? },
            SpaceFamilyName::White => SpaceFamily::White,
        };
        Ok((f, dim))
    }

    pub fn to_spec(&self) -> CliResult<SpaceKernelSpec> {
        let (f, d) = self.family()?;
        Ok(SpaceKernelSpec::new(f, d, self.normalization)?)
    }

    /// Skips the admissibility ranges so that integrability can be probed
    /// outside them; parameters must still be finite and the dimension
    /// positive.
    pub fn to_spec_unchecked(&self) -> CliResult<SpaceKernelSpec> {
        let (f, d) = self.family()?;
        let params: Vec<f64> = match &f {
            SpaceFamily::Riesz { eta } | SpaceFamily::Bessel { eta } => vec![*eta],
            SpaceFamily::Fractional { hurst } => hurst.clone(),
            SpaceFamily::MollifiedWhite { epsilon } => vec![*epsilon],
            SpaceFamily::GaussianTest { scale } => vec![*scale],
            SpaceFamily::ConstantTest { c } => vec![*c],
            SpaceFamily::White => vec![],
        };
        if d == 0 || d > 8 {
            return Err(CliError::Invalid(format!("dimension {d} must lie in 1..=8")));
        }
        if params.iter().any(|p| !(p.is_finite() && *p > 0.0)) || !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return Err(CliError::Invalid("kernel parameters must be finite and positive".into()));
        }
        Ok(SpaceKernelSpec::unchecked(f, d, self.normalization))
    }

    pub fn from_spec(spec: &SpaceKernelSpec) -> Self {
        let mut c = SpaceKernelConfig {
            family: SpaceFamilyName::White,
            eta: None,
            hurst: None,
            epsilon: None,
            scale: None,
            c: None,
            dim: spec.dim,
            normalization: spec.normalization,
        };
        match &spec.family {
            SpaceFamily::Riesz { eta } => {
                c.family = SpaceFamilyName::Riesz;
                c.eta = Some(*eta);
            }
            SpaceFamily::Bessel { eta } => {
                c.family = SpaceFamilyName::Bessel;
                c.eta = Some(*eta);
            }
            SpaceFamily::Fractional { hurst } => {
                c.family = SpaceFamilyName::Fractional;
                c.hurst = Some(hurst.clone());
            }
            SpaceFamily::MollifiedWhite { epsilon } => {
                c.family = SpaceFamilyName::MollifiedWhite;
                c.epsilon = Some(*epsilon);
            }
            SpaceFamily::GaussianTest { scale } => {
                c.family = SpaceFamilyName::GaussianTest;
                c.scale = Some(*scale);
            }
            SpaceFamily::ConstantTest { c: v } => {
                c.family = SpaceFamilyName::ConstantTest;
                c.c = Some(*v);
            }
            SpaceFamily::White => {}
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Riesz,
    Bessel,
    Fractional,
    WhiteSpace,
}

/// A named kernel pair; unset parameters take the values of
/// `heatlab::presets::defaults`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub name: PresetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(rename = "Hvec", default, skip_serializing_if = "Option::is_none")]
    pub space_hurst: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl PresetConfig {
    pub fn named(name: PresetName) -> Self {
        PresetConfig { name, beta: None, eta: None, dim: None, hurst: None, space_hurst: None, epsilon: None }
    }

    pub fn resolve(&self) -> CliResult<Preset> {
        let p = match self.name {
            PresetName::Riesz => {
                presets::riesz(self.beta.unwrap_or(0.5), self.eta.unwrap_or(0.5), self.dim.unwrap_or(1))?
            }
            PresetName::Bessel => {
                presets::bessel(self.beta.unwrap_or(0.5), self.eta.unwrap_or(1.0), self.dim.unwrap_or(1))?
            }
            PresetName::Fractional => {
                presets::fractional(self.hurst.unwrap_or(0.75), self.space_hurst.clone().unwrap_or_else(|| vec![0.75]))?
            }
            PresetName::WhiteSpace => presets::white_space(self.beta.unwrap_or(0.25), self.epsilon.unwrap_or(0.05))?,
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisParams {
    /// Exponent in `∫ μ(dξ) / (1 + |ξ|^p)`.
    pub p: f64,
    pub tol: f64,
    /// Also report `C_N`, `D_N` at this cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        HypothesisParams { p: 2.0, tol: 1e-10, cutoff: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenseName {
    Skorohod,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindName {
    TimeDependent,
    TimeIndependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    One,
    GaussianBump { center: Vec<f64>, width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsParams {
    pub sense: SenseName,
    pub noise: NoiseKindName,
    pub k: usize,
    pub t: f64,
    /// Defaults to the origin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub u0: InitialConfig,
    pub samples: usize,
    pub steps: usize,
    /// Exit with a numerical failure when ESS / samples falls below this.
    pub ess_floor: f64,
}

impl Default for MomentsParams {
    fn default() -> Self {
        MomentsParams {
            sense: SenseName::Skorohod,
            noise: NoiseKindName::TimeDependent,
            k: 2,
            t: 1.0,
            x: None,
            u0: InitialConfig::One,
            samples: 1000,
            steps: 32,
            ess_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosParams {
    pub order: usize,
    pub t: f64,
    pub samples: usize,
    pub steps: usize,
    /// Also estimate `E[u(t,x)²]` by Feynman-Kac and report the z-score.
    pub compare_fk: bool,
    pub fk_samples: usize,
}

impl Default for ChaosParams {
    fn default() -> Self {
        ChaosParams { order: 6, t: 0.5, samples: 2000, steps: 16, compare_fk: false, fk_samples: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1Params {
    pub n: usize,
    pub cutoff: f64,
    pub samples: usize,
}

impl Default for Lemma1Params {
    fn default() -> Self {
        Lemma1Params { n: 2, cutoff: 2.0, samples: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplexParams {
    pub t: f64,
    pub alpha: Vec<f64>,
    pub tol: f64,
    /// Needs a space kernel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma1: Option<Lemma1Params>,
}

impl Default for SimplexParams {
    fn default() -> Self {
        SimplexParams { t: 1.0, alpha: vec![-0.5, -0.5], tol: 1e-10, lemma1: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionParams {
    pub levels: u32,
    pub t: f64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams { levels: 4, t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nt: usize,
    pub dt: f64,
    pub nx: usize,
    pub dx: f64,
    pub dim: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nt: 32, dt: 1.0 / 32.0, nx: 256, dx: 1.0 / 32.0, dim: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeParams {
    pub grid: GridConfig,
    pub epsilon: f64,
    pub delta: f64,
    pub realizations: usize,
    /// Write each realization to `fields/field_<i>.bin`.
    pub write_fields: bool,
}

impl Default for SynthesizeParams {
    fn default() -> Self {
        SynthesizeParams { grid: GridConfig::default(), epsilon: 0.0625, delta: 0.0625, realizations: 1, write_fields: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    One,
    Polynomial { sigma: f64 },
    Exponential { lambda: f64 },
}

impl WeightConfig {
    pub fn to_weight(self) -> CliResult<heatlab::noise::Weight> {
        use heatlab::noise::Weight;
        match self {
            WeightConfig::One => Ok(Weight::One),
            WeightConfig::Polynomial { sigma } if sigma.is_finite() && sigma >= 0.0 => Ok(Weight::Polynomial { sigma }),
            WeightConfig::Exponential { lambda } if lambda.is_finite() && lambda >= 0.0 => {
                Ok(Weight::Exponential { lambda })
            }
            _ => Err(CliError::Invalid("weight parameter must be finite and nonnegative".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovParams {
    pub grid: GridConfig,
    pub epsilon: f64,
    pub delta: f64,
    /// Time slice whose spatial blocks are analysed.
    pub time_index: usize,
    pub kappa: f64,
    pub weight: WeightConfig,
}

impl Default for BesovParams {
    fn default() -> Self {
        BesovParams {
            grid: GridConfig { nt: 128, dt: 1.0 / 128.0, nx: 1024, dx: 0.00625, dim: 1 },
            epsilon: 0.00625,
            delta: 1.0 / 128.0,
            time_index: 0,
            kappa: -0.5,
            weight: WeightConfig::Polynomial { sigma: 2.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntermittencyParams {
    pub t_list: Vec<f64>,
    pub k_list: Vec<usize>,
    pub noise: NoiseKindName,
    pub samples: usize,
    pub steps: usize,
    /// Same meaning as in `moments`; 0 keeps collapsed points in the fit.
    pub ess_floor: f64,
}

impl Default for IntermittencyParams {
    fn default() -> Self {
        IntermittencyParams {
            t_list: vec![0.5, 1.0, 2.0, 4.0],
            k_list: vec![2, 3, 4],
            noise: NoiseKindName::TimeDependent,
            samples: 2000,
            steps: 32,
            ess_floor: 0.0,
        }
    }
}

/// `[gamma]` and `[lambda]` tables on their own, as found in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTables {
    pub gamma: TimeKernelConfig,
    pub lambda: SpaceKernelConfig,
}

pub fn parse_kernels(text: &str) -> CliResult<(TimeKernelSpec, SpaceKernelSpec)> {
    let t: KernelTables = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    Ok((t.gamma.to_spec()?, t.lambda.to_spec()?))
}
