//! Physical parameters, unit conventions and configuration validation.
//!
//! Every frequency (Rabi frequencies, detunings, decay rates, Doppler width,
//! transition frequency) is expressed in units of the reference decay rate γ.
//! Conversion to SI happens only when group velocities, delays and pulse
//! envelopes are reported, through [`MediumParams::gamma_unit`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doppler::QuadratureSpec;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Magnetic-to-electric dipole ratio r_μ, with μ₁₃ = r_μ · c · σ₁₄.
pub const DEFAULT_DIPOLE_RATIO: f64 = 5.3e-5;

/// Field amplitudes, detunings, decay rates and propagation geometry of the
/// four-level system, all in units of γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub omega_1: f64,
    pub omega_2: f64,
    /// Microwave coupling between the two excited levels.
    pub omega_3: f64,
    /// Probe electric Rabi frequency. Enters only linearly.
    pub omega_p: f64,
    /// Probe magnetic Rabi frequency. Enters only linearly.
    pub omega_b: f64,
    pub delta_p: f64,
    pub delta_b: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_3: f64,
    pub gamma_4: f64,
    /// Microwave phase (radians).
    pub phi: f64,
    /// Propagation sign of each control field relative to the probe:
    /// +1 co-propagating, −1 counter-propagating.
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub alpha_3: f64,
}

impl Default for SystemParams {
    /// The fig2a preset parameters.
    fn default() -> Self {
        Self {
            omega_1: 0.1,
            omega_2: 1.0,
            omega_3: 0.7,
            omega_p: 0.01,
            omega_b: 0.01,
            delta_p: 0.0,
            delta_b: 0.0,
            delta_1: 0.0,
            delta_2: 0.0,
            gamma_1: 0.1,
            gamma_2: 0.1,
            gamma_3: 0.1,
            gamma_4: 0.1,
            phi: FRAC_PI_2,
            alpha_1: 1.0,
            alpha_2: 1.0,
            alpha_3: 1.0,
        }
    }
}

impl SystemParams {
    pub fn with_probe_detuning(mut self, delta_p: f64) -> Self {
        self.delta_p = delta_p;
        self
    }

    pub fn with_uniform_decay(mut self, gamma: f64) -> Self {
        self.gamma_1 = gamma;
        self.gamma_2 = gamma;
        self.gamma_3 = gamma;
        self.gamma_4 = gamma;
        self
    }
}

/// Bulk properties of the atomic medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumParams {
    /// Absolute value of γ as an angular frequency (s⁻¹).
    pub gamma_unit: f64,
    /// Probe transition frequency ω₁₄ in units of γ.
    pub omega_14: f64,
    /// Medium length (m).
    #[serde(rename = "length_L")]
    pub length_l: f64,
    /// Doppler width in units of γ. Zero is the cold medium.
    pub v_doppler: f64,
    /// κ_e = Nσ₁₄²/(ε₀ħγ).
    pub density_coupling: f64,
    /// r_μ such that μ₁₃ = r_μ · c · σ₁₄.
    pub dipole_ratio: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            gamma_unit: 1.0e9,
            omega_14: 1.0e4,
            length_l: 0.06,
            v_doppler: 0.5,
            density_coupling: 1.0,
            dipole_ratio: DEFAULT_DIPOLE_RATIO,
        }
    }
}

/// Dimensionless prefactors of the response functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// Electric coupling κ_e.
    pub kappa_e: f64,
    /// Magnetic coupling κ_m = κ_e r_μ².
    pub kappa_m: f64,
    /// Cross coupling κ_x = κ_e r_μ.
    pub kappa_x: f64,
}

/// κ_m and κ_x follow from κ_e and r_μ using μ₀ε₀ = 1/c².
pub fn derived_couplings(m: &MediumParams) -> Couplings {
    let r = m.dipole_ratio;
    Couplings {
        kappa_e: m.density_coupling,
        kappa_m: m.density_coupling * r * r,
        kappa_x: m.density_coupling * r,
    }
}

/// Record of a κ_e calibration, persisted next to the calibrated value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub scenario: String,
    pub mode: String,
    pub quantity: String,
    pub target: f64,
    pub achieved: f64,
    pub kappa_e: f64,
}

/// Raw configuration document as read from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub system: SystemParams,
    pub medium: MediumParams,
    pub quadrature: QuadratureSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
}

impl Config {
    pub fn new(system: SystemParams, medium: MediumParams) -> Self {
        Self {
            system,
            medium,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ValidationErrors> {
        validate(self)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(#[source] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("NonPositiveDecay: {field} = {value} must be > 0")]
    NonPositiveDecay { field: &'static str, value: f64 },
    #[error("BadPropagationSign: {field} = {value} must be exactly +1 or -1")]
    BadPropagationSign { field: &'static str, value: f64 },
    #[error("NegativeDopplerWidth: v_doppler = {value} must be >= 0")]
    NegativeDopplerWidth { value: f64 },
    #[error("NonPositiveCoupling: {field} = {value} is out of range")]
    NonPositiveCoupling { field: &'static str, value: f64 },
    #[error("NonPositiveMedium: {field} = {value} must be > 0")]
    NonPositiveMedium { field: &'static str, value: f64 },
    #[error("NonFinite: {field} is not a finite number")]
    NonFinite { field: &'static str },
    #[error("BadQuadrature: {0}")]
    BadQuadrature(String),
}

/// The complete list of violations found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl ValidationErrors {
    pub fn contains(&self, pred: impl Fn(&ValidationError) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// A configuration whose invariants have all been checked. Immutable; the
/// only way to vary a parameter is through the `with_*` methods, which
/// revalidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    system: SystemParams,
    medium: MediumParams,
    quadrature: QuadratureSpec,
    couplings: Couplings,
}

impl ValidatedConfig {
    pub fn system(&self) -> &SystemParams {
        &self.system
    }

    pub fn medium(&self) -> &MediumParams {
        &self.medium
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn to_config(&self) -> Config {
        Config {
            system: self.system,
            medium: self.medium,
            quadrature: self.quadrature.clone(),
            calibration: None,
        }
    }

    /// Probe detuning is unconstrained, so this never fails.
    pub fn with_probe_detuning(&self, delta_p: f64) -> Self {
        let mut out = self.clone();
        out.system.delta_p = delta_p;
        out
    }

    pub fn with_system(&self, system: SystemParams) -> Result<Self, ValidationErrors> {
        validate(&Config {
            system,
            ..self.to_config()
        })
    }

    pub fn with_medium(&self, medium: MediumParams) -> Result<Self, ValidationErrors> {
        validate(&Config {
            medium,
            ..self.to_config()
        })
    }

    pub fn with_doppler_width(&self, v_doppler: f64) -> Result<Self, ValidationErrors> {
        self.with_medium(MediumParams {
            v_doppler,
            ..self.medium
        })
    }

    pub fn with_density_coupling(&self, kappa_e: f64) -> Result<Self, ValidationErrors> {
        self.with_medium(MediumParams {
            density_coupling: kappa_e,
            ..self.medium
        })
    }

    pub fn with_omega_3(&self, omega_3: f64) -> Result<Self, ValidationErrors> {
        self.with_system(SystemParams {
            omega_3,
            ..self.system
        })
    }

    pub fn with_quadrature(&self, quadrature: QuadratureSpec) -> Result<Self, ValidationErrors> {
        validate(&Config {
            quadrature,
            ..self.to_config()
        })
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate(config: &Config) -> Result<ValidatedConfig, ValidationErrors> {
    let mut errors = Vec::new();
    let s = &config.system;
    let m = &config.medium;

    let finite: [(&'static str, f64); 23] = [
        ("omega_1", s.omega_1),
        ("omega_2", s.omega_2),
        ("omega_3", s.omega_3),
        ("omega_p", s.omega_p),
        ("omega_b", s.omega_b),
        ("delta_p", s.delta_p),
        ("delta_b", s.delta_b),
        ("delta_1", s.delta_1),
        ("delta_2", s.delta_2),
        ("gamma_1", s.gamma_1),
        ("gamma_2", s.gamma_2),
        ("gamma_3", s.gamma_3),
        ("gamma_4", s.gamma_4),
        ("phi", s.phi),
        ("alpha_1", s.alpha_1),
        ("alpha_2", s.alpha_2),
        ("alpha_3", s.alpha_3),
        ("gamma_unit", m.gamma_unit),
        ("omega_14", m.omega_14),
        ("length_L", m.length_l),
        ("v_doppler", m.v_doppler),
        ("density_coupling", m.density_coupling),
        ("dipole_ratio", m.dipole_ratio),
    ];
    for (field, value) in finite {
        if !value.is_finite() {
            errors.push(ValidationError::NonFinite { field });
        }
    }

    for (field, value) in [
        ("omega_1", s.omega_1),
        ("omega_2", s.omega_2),
        ("omega_3", s.omega_3),
        ("omega_p", s.omega_p),
        ("omega_b", s.omega_b),
    ] {
        if value < 0.0 {
            errors.push(ValidationError::NonPositiveCoupling { field, value });
        }
    }

    for (field, value) in [
        ("gamma_1", s.gamma_1),
        ("gamma_2", s.gamma_2),
        ("gamma_3", s.gamma_3),
        ("gamma_4", s.gamma_4),
    ] {
        if !(value > 0.0) {
            errors.push(ValidationError::NonPositiveDecay { field, value });
        }
    }

    for (field, value) in [
        ("alpha_1", s.alpha_1),
        ("alpha_2", s.alpha_2),
        ("alpha_3", s.alpha_3),
    ] {
        if value != 1.0 && value != -1.0 {
            errors.push(ValidationError::BadPropagationSign { field, value });
        }
    }

    if m.v_doppler < 0.0 {
        errors.push(ValidationError::NegativeDopplerWidth { value: m.v_doppler });
    }
    if !(m.density_coupling > 0.0) {
        errors.push(ValidationError::NonPositiveCoupling {
            field: "density_coupling",
            value: m.density_coupling,
        });
    }
    if !(m.dipole_ratio >= 0.0 && m.dipole_ratio < 1.0) {
        errors.push(ValidationError::NonPositiveCoupling {
            field: "dipole_ratio",
            value: m.dipole_ratio,
        });
    }
    for (field, value) in [
        ("gamma_unit", m.gamma_unit),
        ("omega_14", m.omega_14),
        ("length_L", m.length_l),
    ] {
        if !(value > 0.0) {
            errors.push(ValidationError::NonPositiveMedium { field, value });
        }
    }

    if let Err(msg) = config.quadrature.check() {
        errors.push(ValidationError::BadQuadrature(msg));
    }

    if errors.is_empty() {
        Ok(ValidatedConfig {
            system: *s,
            medium: *m,
            quadrature: config.quadrature.clone(),
            couplings: derived_couplings(m),
        })
    } else {
        Err(ValidationErrors(errors))
    }
}
