use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Built-in configuration; the single source of numeric defaults.
pub const DEFAULT_CONFIG: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UndercountConfig {
    pub photons: Vec<usize>,
    pub modes: Vec<usize>,
    pub trials: u32,
    pub sigma_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_max: Vec<usize>,
    pub epsilon: f64,
    /// Further target probabilities whose slopes are reported, not checked.
    pub epsilon_sensitivity: Vec<f64>,
    pub max_modes: u64,
    pub slope_target: f64,
    pub slope_tolerance: f64,
    /// Count uncertainty held fixed while the photon range grows.
    pub delta_n: f64,
    /// Kerr period as a multiple of `n_max` (must exceed 1).
    pub period_factor: f64,
    pub phase_slope_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub sigma: f64,
    pub cutoff: usize,
    pub input_squeezing: f64,
    pub min_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaScalingConfig {
    pub w: f64,
    pub eta: f64,
    pub cutoff: usize,
    pub preparations: usize,
    pub max_attempts: u32,
    pub ratio_range: (f64, f64),
    pub min_fit_improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicGateConfig {
    pub gamma: f64,
    pub sigmas: Vec<f64>,
    pub cutoffs: Vec<usize>,
    pub trials: u32,
    pub homodyne_resolution: f64,
    /// Position squeezing of the gate input (0 for vacuum).
    pub input_squeezing: f64,
    pub monotone_tolerance: f64,
    pub spread_tolerance: f64,
    pub outcome_bins: usize,
    pub control: ControlConfig,
    pub gamma_scaling: GammaScalingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionConfig {
    pub delta_phi: f64,
    pub period: usize,
    pub photons: usize,
    pub strictness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrConfig {
    pub cutoff: usize,
    pub period: usize,
    /// Phase noise as a fraction of `chi_t`.
    pub width_fraction: f64,
    pub trials: u32,
    pub superposition: (usize, usize),
    pub min_fidelity: f64,
    pub precision: PrecisionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerConfig {
    pub cutoff: usize,
    pub lambda_t: f64,
    pub delta_p: f64,
    pub superposition: (usize, usize),
    pub trials: u32,
    /// Trials per Fock input in the no-aliasing table.
    pub fock_trials: u32,
    pub sigma_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: OutputConfig,
    pub undercount: UndercountConfig,
    pub scaling: ScalingConfig,
    pub cubic_gate: CubicGateConfig,
    pub kerr: KerrConfig,
    pub pointer: PointerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("embedded default config is valid")
    }
}

/// Recursively overlays `patch` on `base`; objects merge, everything else
/// replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentConfig {
    /// Defaults overlaid with a (possibly partial) JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let patch: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base: Value = serde_json::from_str(DEFAULT_CONFIG).expect("embedded default config is valid");
        merge(&mut base, patch);
        let config: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Overrides the trial count of every Monte Carlo experiment.
    pub fn set_trials(&mut self, trials: u32) {
        self.undercount.trials = trials;
        self.cubic_gate.trials = trials;
        self.kerr.trials = trials;
        self.pointer.trials = trials;
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, t) in [
            ("undercount", self.undercount.trials),
            ("cubic_gate", self.cubic_gate.trials),
            ("kerr", self.kerr.trials),
            ("pointer", self.pointer.trials),
        ] {
            if t == 0 {
                return fail(format!("{name}.trials must be at least 1"));
            }
        }
        let u = &self.undercount;
        if u.photons.is_empty() || u.modes.is_empty() {
            return fail("undercount sweeps must be nonempty".into());
        }
        let s = &self.scaling;
        if s.n_max.is_empty() {
            return fail("scaling.n_max must be nonempty".into());
        }
        if !(s.period_factor > 1.0) {
            return fail("scaling.period_factor must exceed 1 so the period covers n_max".into());
        }
        let c = &self.cubic_gate;
        if c.sigmas.is_empty() || c.cutoffs.is_empty() {
            return fail("cubic_gate sweeps must be nonempty".into());
        }
        if c.outcome_bins == 0 || c.gamma_scaling.preparations < 3 {
            return fail("cubic_gate needs outcome_bins >= 1 and at least 3 preparations".into());
        }
        if self.kerr.period == 0 || self.kerr.precision.period == 0 {
            return fail("kerr periods must be positive".into());
        }
        Ok(())
    }
}
