//! TOML configuration files.
//!
//! ```toml
//! [drives]
//! delta = 10.0
//! omega21 = { amplitude = 0.0, phase_deg = 0.0 }
//! omega31 = { amplitude = 1.0, phase_deg = 0.0 }
//! omega32 = { amplitude = 1.0, phase_deg = 0.0 }
//!
//! [decoherence]
//! gamma12 = 0.1
//! gamma13 = 0.1
//! gamma23 = 0.1
//! dephasing21 = 0.1
//! dephasing31 = 0.1
//! dephasing32 = 0.1
//!
//! [equilibrium]
//! p1 = 1.0
//! p2 = 0.0
//! p3 = 0.0
//!
//! [molecule]
//! name = "1,2-propanediol"
//! nu21 = 100961300.0
//! nu31 = 100962100.0
//! nu32 = 846.8
//! ```
//!
//! Frequencies are in units of 2π × MHz and phases in degrees. Every section
//! and key is optional; missing values fall back to the baseline model
//! (uniform rates 0.1, Ω31 = Ω32 = 1, Δ = 10, ground-state equilibrium).
//! Optional `[switch]`, `[mixture]`, `[robustness]` and `[sweep]` sections
//! drive the CLI subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chirality, DecoherenceConfig, DriveConfig, EquilibriumState, MoleculeMetadata};
use crate::protocol::{Mixture, Summation, DEFAULT_TARGET_ETA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchSettings {
    /// Enantiomer whose radiation is switched off.
    pub silenced: Chirality,
}

impl Default for SwitchSettings {
    fn default() -> Self {
        SwitchSettings {
            silenced: Chirality::Right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSettings {
    pub target_eta: f64,
    pub summation: Summation,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        RobustnessSettings {
            target_eta: DEFAULT_TARGET_ETA,
            summation: Summation::Amplitude,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub phi_min_deg: f64,
    pub phi_span_deg: f64,
    pub phi_points: usize,
    pub line_points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    /// Decoherence regimes γ/Ω̄ for the detuning scans.
    pub gamma_ratios: Vec<f64>,
    /// Enantiomer silenced along the detuning scans.
    pub curve_silenced: Chirality,
    pub deviation_points: usize,
    /// Half-width of the relative amplitude window; three times the critical
    /// deviation when absent.
    pub domega_rel_max: Option<f64>,
    pub dphi_max_deg: Option<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            omega_min: 0.0,
            omega_max: 0.3,
            omega_points: 201,
            phi_min_deg: 0.0,
            phi_span_deg: 360.0,
            phi_points: 181,
            line_points: 721,
            delta_min: 0.5,
            delta_max: 20.0,
            delta_points: 41,
            gamma_ratios: vec![0.1, 1.0, 10.0],
            curve_silenced: Chirality::Left,
            deviation_points: 81,
            domega_rel_max: None,
            dphi_max_deg: None,
        }
    }
}

impl SweepSettings {
    /// Overrides every resolution with `n`.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.omega_points = n;
        self.phi_points = n;
        self.line_points = n;
        self.delta_points = n;
        self.deviation_points = n;
        self
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            ("omega_points", self.omega_points),
            ("phi_points", self.phi_points),
            ("line_points", self.line_points),
            ("delta_points", self.delta_points),
            ("deviation_points", self.deviation_points),
        ];
        for (name, n) in counts {
            if n == 0 {
                return Err(Error::InvalidConfig(format!("sweep.{name} must be positive")));
            }
        }
        let finite = [
            self.omega_min,
            self.omega_max,
            self.phi_min_deg,
            self.phi_span_deg,
            self.delta_min,
            self.delta_max,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("sweep ranges must be finite".into()));
        }
        if self.omega_min < 0.0 || self.omega_max < self.omega_min {
            return Err(Error::InvalidConfig(
                "sweep needs 0 <= omega_min <= omega_max".into(),
            ));
        }
        if self.delta_max < self.delta_min {
            return Err(Error::InvalidConfig("sweep needs delta_min <= delta_max".into()));
        }
        if self.gamma_ratios.is_empty() || self.gamma_ratios.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(Error::InvalidConfig(
                "sweep.gamma_ratios must be a nonempty list of positive numbers".into(),
            ));
        }
        for w in [self.domega_rel_max, self.dphi_max_deg].into_iter().flatten() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig("deviation windows must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub drives: DriveConfig,
    pub decoherence: DecoherenceConfig,
    pub equilibrium: EquilibriumState,
    pub molecule: MoleculeMetadata,
    pub switch: SwitchSettings,
    pub mixture: MixtureSettings,
    pub robustness: RobustnessSettings,
    pub sweep: SweepSettings,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSettings {
    pub n_left: f64,
    pub n_right: f64,
}

impl Default for MixtureSettings {
    fn default() -> Self {
        MixtureSettings {
            n_left: 1.0,
            n_right: 1.0,
        }
    }
}

impl MixtureSettings {
    pub fn mixture(&self) -> Result<Mixture> {
        Mixture::new(self.n_left, self.n_right)
    }
}

/// Named configurations accepted in place of a file path.
pub const PRESETS: [&str; 3] = ["baseline", "medium", "large"];

impl Config {
    /// Uniform decoherence at `ratio` times the baseline mean coupling Ω̄ = 1.
    fn with_ratio(ratio: f64) -> Self {
        Config {
            decoherence: DecoherenceConfig::uniform(ratio),
            ..Config::default()
        }
    }

    pub fn preset(name: &str) -> Option<Config> {
        match name {
            "baseline" | "small" => Some(Config::with_ratio(0.1)),
            "medium" => Some(Config::with_ratio(1.0)),
            "large" => Some(Config::with_ratio(10.0)),
            _ => None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    /// A file path if it exists, otherwise a preset name; the baseline when
    /// nothing is given.
    pub fn resolve(arg: Option<&str>) -> Result<Config> {
        let Some(arg) = arg else {
            return Ok(Config::default());
        };
        let path = Path::new(arg);
        if path.exists() {
            return Config::load(path);
        }
        Config::preset(arg).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "'{arg}' is neither a readable file nor a preset ({})",
                PRESETS.join(", ")
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.drives.validate()?;
        self.decoherence.validate()?;
        self.equilibrium.validate()?;
        self.mixture.mixture()?;
        if !(self.robustness.target_eta > 0.0 && self.robustness.target_eta.is_finite()) {
            return Err(Error::InvalidConfig(
                "robustness.target_eta must be positive".into(),
            ));
        }
        self.sweep.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// Mean two-photon coupling `sqrt(|Ω31| |Ω32|)`.
    pub fn mean_coupling(&self) -> f64 {
        (self.drives.omega31.amplitude * self.drives.omega32.amplitude).sqrt()
    }
}
