//! Named parameter sets for every figure panel.
//!
//! Two families cover all figures. The subluminal family has γᵢ = 0.1γ,
//! Ω₁ = 0.1γ, Ω₂ = 1γ. The superluminal family has γᵢ = 2γ, Ω₁ = Ω₂ = 2γ,
//! V_D = 1.5γ. Both use φ = π/2, zero control and microwave detunings,
//! co-propagating fields, ω₁₄ = 10⁴γ, γ = 10⁹ s⁻¹ and L = 6 cm.
//!
//! The group-index narrative values at Ω₃ = 0.5γ and 1γ belong to the
//! subluminal family (presets fig7a, fig7b, fig8ab). The caption parameters
//! of the group-index figure belong to the superluminal family (fig7,
//! fig7c–fig7f, fig8cd).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::params::{Config, MediumParams, SystemParams};
use crate::response::Mode;

/// Quantity matched by a κ_e calibration. Both name the group index at Δ_p = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "N_g")]
    GroupIndex,
    #[serde(rename = "n_0")]
    CarrierIndex,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::GroupIndex => "N_g",
            Quantity::CarrierIndex => "n_0",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "N_g" | "n_g" | "ng" => Some(Quantity::GroupIndex),
            "n_0" | "n0" => Some(Quantity::CarrierIndex),
            _ => None,
        }
    }
}

/// Target value for the κ_e root-find of a parameter family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTarget {
    /// Preset whose parameters the target refers to.
    pub scenario: String,
    pub mode: Mode,
    pub quantity: Quantity,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Which figure panel the parameters encode.
    pub note: String,
    pub config: Config,
    pub modes: Vec<Mode>,
    /// Doppler widths swept when the figure overlays several.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vd_sweep: Vec<f64>,
    /// Ω₃ values swept when the figure plots against Ω₃.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega3_sweep: Vec<f64>,
    pub calibration: CalibrationTarget,
}

pub const SUBLUMINAL_TARGET: f64 = 1415.65;
pub const SUPERLUMINAL_TARGET: f64 = -2023.81;

fn subluminal(omega_2: f64, omega_3: f64, v_doppler: f64) -> Config {
    Config::new(
        SystemParams {
            omega_1: 0.1,
            omega_2,
            omega_3,
            phi: FRAC_PI_2,
            ..SystemParams::default()
        }
        .with_uniform_decay(0.1),
        MediumParams {
            v_doppler,
            ..MediumParams::default()
        },
    )
}

fn superluminal(omega_3: f64) -> Config {
    Config::new(
        SystemParams {
            omega_1: 2.0,
            omega_2: 2.0,
            omega_3,
            phi: FRAC_PI_2,
            ..SystemParams::default()
        }
        .with_uniform_decay(2.0),
        MediumParams {
            v_doppler: 1.5,
            ..MediumParams::default()
        },
    )
}

fn sub_target() -> CalibrationTarget {
    CalibrationTarget {
        scenario: "fig7a".into(),
        mode: Mode::Cold,
        quantity: Quantity::GroupIndex,
        value: SUBLUMINAL_TARGET,
    }
}

fn sup_target() -> CalibrationTarget {
    CalibrationTarget {
        scenario: "fig7c".into(),
        mode: Mode::Cold,
        quantity: Quantity::GroupIndex,
        value: SUPERLUMINAL_TARGET,
    }
}

fn scenario(name: &str, note: &str, config: Config, calibration: CalibrationTarget) -> Scenario {
    Scenario {
        name: name.into(),
        note: note.into(),
        config,
        modes: vec![Mode::Cold, Mode::Hot],
        vd_sweep: Vec::new(),
        omega3_sweep: Vec::new(),
        calibration,
    }
}

/// Every preset name, in figure order.
pub fn names() -> Vec<&'static str> {
    vec![
        "fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e",
        "fig3f", "fig4a", "fig4b", "fig4c", "fig4d", "fig5a", "fig5b", "fig5c", "fig5d", "fig6", "fig7",
        "fig7a", "fig7b", "fig7c", "fig7d", "fig7e", "fig7f", "fig8ab", "fig8a", "fig8b", "fig8cd", "fig8c",
        "fig8d",
    ]
}

pub fn preset(name: &str) -> Option<Scenario> {
    let sub = sub_target;
    let sup = sup_target;
    let s = match name {
        "fig2a" | "fig2c" | "fig3a" | "fig3c" => scenario(
            name,
            "susceptibility/chirality panels at Omega_3 = 0.7, V_D = 0.5",
            subluminal(1.0, 0.7, 0.5),
            sub(),
        ),
        "fig2b" | "fig2d" | "fig3b" | "fig3d" => scenario(
            name,
            "susceptibility/chirality panels at Omega_3 = 1, V_D = 0.5",
            subluminal(1.0, 1.0, 0.5),
            sub(),
        ),
        "fig2e" | "fig2f" | "fig3e" | "fig3f" => scenario(
            name,
            "susceptibility/chirality panels at Omega_2 = 4, Omega_3 = 0.7, V_D = 0.1",
            subluminal(4.0, 0.7, 0.1),
            sub(),
        ),
        "fig4a" | "fig4c" | "fig5a" | "fig5c" => scenario(
            name,
            "susceptibility/chirality panels at Omega_3 = 1.5, V_D = 1.5",
            superluminal(1.5),
            sup(),
        ),
        "fig4b" | "fig4d" | "fig5b" | "fig5d" => scenario(
            name,
            "susceptibility/chirality panels at Omega_3 = 5, V_D = 1.5",
            superluminal(5.0),
            sup(),
        ),
        "fig6" => Scenario {
            modes: vec![Mode::Hot],
            vd_sweep: vec![0.0, 0.1, 0.2, 0.3],
            ..scenario(
                name,
                "Doppler-width overlay at Omega_2 = 4, Omega_3 = 0.7, V_D = 0, 0.1, 0.2, 0.3",
                subluminal(4.0, 0.7, 0.0),
                sub(),
            )
        },
        "fig7" => scenario(
            name,
            "group-index caption parameters, Omega_3 = 1.5 (override with --omega3)",
            superluminal(1.5),
            sup(),
        ),
        "fig7a" => scenario(
            name,
            "subluminal group index at Omega_3 = 0.5, hot V_D = 0.1",
            subluminal(1.0, 0.5, 0.1),
            sub(),
        ),
        "fig7b" => scenario(
            name,
            "subluminal group index at Omega_3 = 1, hot V_D = 0.1",
            subluminal(1.0, 1.0, 0.1),
            sub(),
        ),
        "fig7c" => scenario(name, "superluminal group index at Omega_3 = 1.5", superluminal(1.5), sup()),
        "fig7d" => scenario(name, "superluminal group index at Omega_3 = 5", superluminal(5.0), sup()),
        "fig7e" | "fig7f" => Scenario {
            omega3_sweep: (1..=12).map(|k| 0.5 * k as f64).collect(),
            ..scenario(
                name,
                "group index and velocity against Omega_3 at Delta_p = 0",
                superluminal(1.5),
                sup(),
            )
        },
        "fig8ab" | "fig8a" | "fig8b" => scenario(
            name,
            "pulse through the subluminal medium, Omega_3 = 0.5, hot V_D = 0.1 (a: time, b: frequency)",
            subluminal(1.0, 0.5, 0.1),
            sub(),
        ),
        "fig8cd" | "fig8c" | "fig8d" => scenario(
            name,
            "pulse through the superluminal medium, Omega_3 = 1.5 (c: time, d: frequency)",
            superluminal(1.5),
            sup(),
        ),
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves_and_validates() {
        for n in names() {
            let s = preset(n).unwrap_or_else(|| panic!("{n}"));
            assert_eq!(s.name, n);
            s.config.validate().unwrap_or_else(|e| panic!("{n}: {e}"));
            assert!(preset(&s.calibration.scenario).is_some());
        }
        assert!(preset("fig9").is_none());
    }

    #[test]
    fn subluminal_captions() {
        for n in ["fig2a", "fig2b", "fig2e", "fig3f", "fig6", "fig7a", "fig8ab"] {
            let c = preset(n).unwrap().config;
            let s = c.system;
            assert_eq!([s.gamma_1, s.gamma_2, s.gamma_3, s.gamma_4], [0.1; 4], "{n}");
            assert_eq!(s.omega_1, 0.1, "{n}");
            assert_eq!([s.delta_1, s.delta_2, s.delta_b], [0.0; 3], "{n}");
            assert_eq!(s.phi, FRAC_PI_2);
            assert_eq!(c.medium.gamma_unit, 1e9);
            assert_eq!(c.medium.dipole_ratio, 5.3e-5);
        }
        let a = preset("fig2a").unwrap().config;
        assert_eq!((a.system.omega_2, a.system.omega_3, a.medium.v_doppler), (1.0, 0.7, 0.5));
        let b = preset("fig2d").unwrap().config;
        assert_eq!((b.system.omega_2, b.system.omega_3, b.medium.v_doppler), (1.0, 1.0, 0.5));
        let e = preset("fig3e").unwrap().config;
        assert_eq!((e.system.omega_2, e.system.omega_3, e.medium.v_doppler), (4.0, 0.7, 0.1));
        assert_eq!(preset("fig6").unwrap().vd_sweep, vec![0.0, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn superluminal_captions() {
        for (n, o3) in [("fig4a", 1.5), ("fig4d", 5.0), ("fig5b", 5.0), ("fig7", 1.5), ("fig7c", 1.5), ("fig7d", 5.0), ("fig8cd", 1.5)] {
            let c = preset(n).unwrap().config;
            let s = c.system;
            assert_eq!([s.gamma_1, s.gamma_2, s.gamma_3, s.gamma_4], [2.0; 4], "{n}");
            assert_eq!((s.omega_1, s.omega_2, s.omega_3), (2.0, 2.0, o3), "{n}");
            assert_eq!(c.medium.v_doppler, 1.5);
            assert_eq!(c.medium.omega_14, 1e4);
            assert_eq!(c.medium.length_l, 0.06);
        }
    }

    #[test]
    fn families_share_one_calibration_target() {
        assert_eq!(preset("fig2b").unwrap().calibration.value, 1415.65);
        assert_eq!(preset("fig8ab").unwrap().calibration.scenario, "fig7a");
        assert_eq!(preset("fig5c").unwrap().calibration.value, -2023.81);
        assert_eq!(preset("fig8d").unwrap().calibration.scenario, "fig7c");
    }
}
