//! JSON run configuration and its conversion to core types.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use graphopt::costs::{CostField, Profile};
use graphopt::dynamics::{DriftFn, GeneralSystemSpec, InitialLaw, Mode, SimConfig};
use graphopt::gains::{GeneralGains, PowerLawGain, SgdGains, TrackingGains};
use graphopt::graphon::{CustomKind, GraphonKernel};
use graphopt::linalg::Matrix;
use graphopt::noise::OuSpec;

/// Complete description of one run. Flags only select files and override
/// the seed or thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    pub gains: GainsSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub sim: SimSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Constant { c: f64 },
    /// `cuts` runs from 0 to 1; `weights` is the symmetric block matrix.
    BlockModel { cuts: Vec<f64>, weights: Vec<Vec<f64>> },
    Min,
    Product,
    ExpDecay { rate: f64 },
    Gaussian { width: f64 },
    OneMinusMax,
    Power { a: f64, b: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<GraphonKernel<f64>> {
        let custom = |kind, params| GraphonKernel::custom(kind, params, true);
        let kernel = match self {
            KernelSpec::Constant { c } => GraphonKernel::constant(*c),
            KernelSpec::BlockModel { cuts, weights } => GraphonKernel::block_model(cuts.clone(), weights.clone()),
            KernelSpec::Min => Ok(GraphonKernel::Min),
            KernelSpec::Product => Ok(GraphonKernel::Product),
            KernelSpec::ExpDecay { rate } => custom(CustomKind::ExpDecay, vec![*rate]),
            KernelSpec::Gaussian { width } => custom(CustomKind::Gaussian, vec![*width]),
            KernelSpec::OneMinusMax => custom(CustomKind::OneMinusMax, vec![]),
            KernelSpec::Power { a, b } => custom(CustomKind::Power, vec![*a, *b]),
        };
        kernel.context("kernel")
    }
}

/// A profile over `[0, 1]`: a bare number is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Constant(f64),
    Shaped(ShapedProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapedProfile {
    Affine { intercept: f64, slope: f64 },
    Blocks { cuts: Vec<f64>, values: Vec<f64> },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile<f64>> {
        match self {
            ProfileSpec::Constant(c) => Ok(Profile::constant(*c)),
            ProfileSpec::Shaped(ShapedProfile::Affine { intercept, slope }) => Ok(Profile::affine(*intercept, *slope)),
            ProfileSpec::Shaped(ShapedProfile::Blocks { cuts, values }) => {
                Profile::blocks(cuts.clone(), values.clone()).context("profile")
            }
        }
    }
}

fn build_profiles(specs: &[ProfileSpec]) -> Result<Vec<Profile<f64>>> {
    specs.iter().map(ProfileSpec::build).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `q(p)/2 · ‖x − θ(p)‖²`.
    Quadratic { weight: ProfileSpec, target: Vec<ProfileSpec> },
    /// `κ₂/2 · ‖x‖² + Σₖ log cosh(xₖ − θₖ(p))`.
    RegularizedSmooth { kappa2: f64, shift: Vec<ProfileSpec> },
}

impl CostSpec {
    pub fn build(&self) -> Result<CostField<f64>> {
        let cost = match self {
            CostSpec::Quadratic { weight, target } => CostField::quadratic(weight.build()?, build_profiles(target)?),
            CostSpec::RegularizedSmooth { kappa2, shift } => CostField::regularized_smooth(*kappa2, build_profiles(shift)?),
        };
        cost.context("cost")
    }
}

/// `scale · (1 + t)^(−exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawSpec {
    #[serde(default = "one")]
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLawSpec {
    fn build(&self) -> Result<PowerLawGain<f64>> {
        Ok(PowerLawGain::new(self.scale, self.exponent)?)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainsSpec {
    /// `α₁ = a(1+t)^(−γ₁)`, `α₂ = b(1+t)^(−γ₂)`.
    Sgd {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "sgd_gamma1")]
        gamma1: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "sgd_gamma2")]
        gamma2: f64,
    },
    /// `βₖ = bₖ(1+t)^(−γₖ)`.
    Tracking {
        #[serde(default = "one")]
        b1: f64,
        #[serde(default = "tracking_gamma12")]
        gamma1: f64,
        #[serde(default = "one")]
        b2: f64,
        #[serde(default = "tracking_gamma12")]
        gamma2: f64,
        #[serde(default = "one")]
        b3: f64,
        #[serde(default = "tracking_gamma3")]
        gamma3: f64,
    },
    /// Coefficients `c₁..c₅`.
    General { c: [PowerLawSpec; 5] },
}

fn sgd_gamma1() -> f64 {
    0.25
}

fn sgd_gamma2() -> f64 {
    0.75
}

fn tracking_gamma12() -> f64 {
    0.4
}

fn tracking_gamma3() -> f64 {
    0.2
}

impl GainsSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GainsSpec::Sgd { .. } => "sgd",
            GainsSpec::Tracking { .. } => "tracking",
            GainsSpec::General { .. } => "general",
        }
    }
}

/// Ornstein–Uhlenbeck noise with mean reversion `rho` and stationary
/// standard deviation `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    #[serde(default = "one")]
    pub rho: f64,
    pub s: f64,
}

impl OuParams {
    fn build(&self) -> Result<OuSpec<f64>> {
        Ok(OuSpec::new(self.rho, self.s)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Diffusion matrix of the SGD flow; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<Vec<Vec<f64>>>,
    /// Drive of the tracking auxiliary state; off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<OuParams>,
    /// Drive of the general system; off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<OuParams>,
    /// Diffusion matrix of the general system; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Sgd,
    Tracking,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub mode: ModeName,
    #[serde(rename = "N")]
    pub n_nodes: usize,
    #[serde(rename = "R")]
    pub n_replicas: usize,
    pub dim: usize,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub record_every: usize,
    /// Drifts of the general system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<DriftSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    Linear { scale: f64 },
    ClippedLinear { scale: f64, clip: f64 },
}

impl DriftSpec {
    fn build(self) -> DriftFn<f64> {
        match self {
            DriftSpec::Zero => DriftFn::Zero,
            DriftSpec::Linear { scale } => DriftFn::Linear { scale },
            DriftSpec::ClippedLinear { scale, clip } => DriftFn::ClippedLinear { scale, clip },
        }
    }
}

/// Independent Gaussian initial states with per-component mean profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub mean: Vec<ProfileSpec>,
    #[serde(default = "one")]
    pub std: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub emit_states: bool,
}

/// Parses JSON, reporting line and column on syntax or schema errors.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("{path}:{}:{}: {e}", e.line(), e.column()))
}

pub fn read_config<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
    parse(&text, path)
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix<f64>> {
    Matrix::from_rows(rows).with_context(|| format!("matrix {name}"))
}

impl RunConfig {
    pub fn cost(&self) -> Result<Option<CostField<f64>>> {
        self.cost.as_ref().map(CostSpec::build).transpose()
    }

    /// Core configuration with `seed` as the resolved seed.
    pub fn to_sim_config(&self, seed: u64) -> Result<SimConfig<f64>> {
        let dim = self.sim.dim;
        if dim == 0 {
            bail!("sim.dim must be positive");
        }
        let need_cost = || self.cost().and_then(|c| c.ok_or_else(|| anyhow!("mode {:?} needs a cost block", self.sim.mode)));
        let mode = match (self.sim.mode, &self.gains) {
            (ModeName::Sgd, GainsSpec::Sgd { a, gamma1, b, gamma2 }) => Mode::Sgd {
                cost: need_cost()?,
                gains: SgdGains::new(*a, *gamma1, *b, *gamma2)?,
                sigma1: match &self.noise.sigma1 {
                    Some(rows) => matrix(rows, "noise.sigma1")?,
                    None => Matrix::zeros(dim, dim),
                },
            },
            (ModeName::Tracking, GainsSpec::Tracking { b1, gamma1, b2, gamma2, b3, gamma3 }) => Mode::Tracking {
                cost: need_cost()?,
                gains: TrackingGains::new(
                    PowerLawGain::new(*b1, *gamma1)?,
                    PowerLawGain::new(*b2, *gamma2)?,
                    PowerLawGain::new(*b3, *gamma3)?,
                ),
                eta: self.noise.eta.map(|p| p.build()).transpose()?.unwrap_or_else(OuSpec::off),
            },
            (ModeName::General, GainsSpec::General { c }) => {
                let c = [c[0].build()?, c[1].build()?, c[2].build()?, c[3].build()?, c[4].build()?];
                Mode::General(GeneralSystemSpec {
                    gains: GeneralGains::new(c),
                    f: self.sim.f.unwrap_or(DriftSpec::Zero).build(),
                    g: self.sim.g.unwrap_or(DriftSpec::Zero).build(),
                    xi: self.noise.xi.map(|p| p.build()).transpose()?.unwrap_or_else(OuSpec::off),
                    sigma: match &self.noise.sigma {
                        Some(rows) => matrix(rows, "noise.sigma")?,
                        None => Matrix::zeros(dim, dim),
                    },
                })
            }
            (mode, gains) => bail!("gains kind {:?} does not match sim.mode {mode:?}", gains.kind()),
        };
        if mode.dim() != dim {
            bail!("sim.dim = {dim} but the {} block has dimension {}", if self.cost.is_some() { "cost" } else { "noise" }, mode.dim());
        }
        let init = match &self.init {
            Some(spec) => InitialLaw::gaussian(build_profiles(&spec.mean)?, spec.std)?,
            None => InitialLaw::standard(dim),
        };
        let config = SimConfig {
            kernel: self.kernel.build()?,
            mode,
            init,
            n_nodes: self.sim.n_nodes,
            n_replicas: self.sim.n_replicas,
            dt: self.sim.h,
            horizon: self.sim.horizon,
            record_every: self.sim.record_every,
            seed,
        };
        config.validate()?;
        Ok(config)
    }
}
