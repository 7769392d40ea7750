//! Experiment configuration (strict JSON).

use std::path::{Path, PathBuf};

use collarflow_core::fields::TargetSpec;
use collarflow_core::flow::{FlowConfig, Stepper};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub qd: QdBlock,
    #[serde(default)]
    pub flow: FlowBlock,
    #[serde(default)]
    pub angular: AngularBlock,
    #[serde(default)]
    pub wp: WpBlock,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: default_output_dir(),
            geometry: GeometryBlock::default(),
            qd: QdBlock::default(),
            flow: FlowBlock::default(),
            angular: AngularBlock::default(),
            wp: WpBlock::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryBlock {
    pub ell: f64,
    /// Sample points along `s` for `geometry.csv`.
    pub samples: usize,
    pub deltas: Vec<f64>,
    /// Grid used for the quadrature cross-check of the `dz²` norms.
    pub n_s: usize,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self { ell: 0.1, samples: 401, deltas: vec![0.1, 0.2, 0.4], n_s: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub n: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QdBlock {
    pub ell: f64,
    pub n_s: usize,
    pub n_theta: usize,
    pub n_max: usize,
    pub delta0: f64,
    pub deltas: Vec<f64>,
    /// Holomorphic modes `b_n e^{ns} e^{inθ}`; `b_n` relative to `e^{|n| s_max}`.
    pub modes: Vec<ModeSpec>,
    /// Optional field CSV to decompose instead of the synthesised modes.
    pub field: Option<PathBuf>,
}

impl Default for QdBlock {
    fn default() -> Self {
        Self {
            ell: 0.1,
            n_s: 2000,
            n_theta: 32,
            n_max: 8,
            delta0: 0.2,
            deltas: vec![0.05, 0.1, 0.2],
            modes: vec![ModeSpec { n: 1, re: 1.0, im: 0.0 }, ModeSpec { n: -2, re: 0.5, im: 0.25 }],
            field: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperName {
    ExplicitEuler,
    Rk2,
}

impl From<StepperName> for Stepper {
    fn from(s: StepperName) -> Self {
        match s {
            StepperName::ExplicitEuler => Stepper::ExplicitEuler,
            StepperName::Rk2 => Stepper::Rk2,
        }
    }
}

/// A fixed time step, or a fraction of the explicit limit at a given `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Limit {
        fraction: f64,
        at_ell: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetBlock {
    FlatTorus { periods: Vec<Option<f64>> },
    RoundSphere { dim: usize },
}

impl TargetBlock {
    pub fn spec(&self) -> TargetSpec {
        match self {
            TargetBlock::FlatTorus { periods } => TargetSpec::flat_torus(periods.clone()),
            TargetBlock::RoundSphere { dim } => TargetSpec::round_sphere(*dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseMap {
    Constant { point: Vec<f64> },
    /// `u₀ = aθ` (winding `2πa`), other components zero.
    Wrap { amplitude: f64 },
    /// `u₀ = as`, other components zero.
    Radial { amplitude: f64 },
    /// `u = a s + b θ` componentwise.
    Linear { a: Vec<f64>, b: Vec<f64> },
    /// `(cos θ, sin θ, 0, …)` on the sphere.
    Equator,
    File { path: PathBuf },
}

/// `amplitude · cos(mode·θ + phase) · exp(−((s − center)/width)²)` added to
/// one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub component: usize,
    pub amplitude: f64,
    pub mode: u32,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Seeded random θ-harmonics `1..=max_mode` with a Gaussian envelope in `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub amplitude: f64,
    pub max_mode: u32,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub base: BaseMap,
    #[serde(default)]
    pub bumps: Vec<Bump>,
    #[serde(default)]
    pub noise: Option<Noise>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowBlock {
    pub eta: f64,
    pub dt: DtSpec,
    pub t_end: f64,
    pub n_s: usize,
    pub n_theta: usize,
    pub ell0: f64,
    pub ell_max: f64,
    pub ell_floor: f64,
    pub stepper: StepperName,
    pub freeze_ell: bool,
    pub stride: usize,
    pub blowup_threshold: f64,
    pub stability_safety: f64,
    pub target: TargetBlock,
    pub initial: InitialBlock,
}

impl Default for FlowBlock {
    fn default() -> Self {
        let a = 0.5;
        Self {
            eta: 1.0,
            dt: DtSpec::Limit { fraction: 0.5, at_ell: 0.2 },
            t_end: 0.05,
            n_s: 32,
            n_theta: 12,
            ell0: 0.3,
            ell_max: 0.6,
            ell_floor: 0.05,
            stepper: StepperName::Rk2,
            freeze_ell: false,
            stride: 1,
            blowup_threshold: 1e8,
            stability_safety: 1.0,
            target: TargetBlock::FlatTorus { periods: vec![Some(std::f64::consts::TAU * a), None] },
            initial: InitialBlock { base: BaseMap::Wrap { amplitude: a }, bumps: Vec::new(), noise: None },
        }
    }
}

impl FlowBlock {
    /// Core configuration with `dt` resolved against the grid.
    pub fn flow_config(&self) -> Result<FlowConfig, CliError> {
        let mut cfg = FlowConfig::new(self.ell0, 1.0, self.t_end, self.n_s, self.n_theta);
        cfg.eta = self.eta;
        cfg.ell_max = self.ell_max;
        cfg.ell_floor = self.ell_floor;
        cfg.stepper = self.stepper.into();
        cfg.freeze_ell = self.freeze_ell;
        cfg.stride = self.stride;
        cfg.blowup_threshold = self.blowup_threshold;
        cfg.stability_safety = self.stability_safety;
        cfg.dt = match self.dt {
            DtSpec::Fixed(dt) => dt,
            DtSpec::Limit { fraction, at_ell } => {
                if !(fraction > 0.0 && fraction.is_finite()) {
                    return Err(CliError::invalid("flow.dt.fraction must be positive"));
                }
                let g = cfg.grid().map_err(CliError::core)?;
                fraction * g.with_ell(at_ell).map_err(CliError::core)?.parabolic_dt_limit()
            }
        };
        cfg.validate().map_err(CliError::core)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngularBlock {
    /// Map field CSV; when absent the flow block's initial map is used.
    pub field: Option<PathBuf>,
    /// Kernel constant; fitted from the field when absent.
    pub c1: Option<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub n_kernel: usize,
}

impl Default for AngularBlock {
    fn default() -> Self {
        Self { field: None, c1: None, lambda: 1.0, delta: 0.3, n_kernel: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WpBlock {
    pub ell0: f64,
    pub tol: f64,
    pub sweep: Vec<f64>,
}

impl Default for WpBlock {
    fn default() -> Self {
        Self { ell0: 0.01, tol: 1e-12, sweep: vec![0.02, 0.05, 0.1] }
    }
}
