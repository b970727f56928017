//! Macroscopic response: electric and magnetic susceptibilities and the two
//! chirality coefficients, after eliminating the magnetization.
//!
//! In dimensionless form, with D = 1 − κ_m β_BB:
//!
//! χ_e = κ_x² β_BE β_EB / D + κ_e β_EE,   χ_m = κ_m β_BB / D,
//! ξ_EH = κ_x β_EB / D,                   ξ_HE = κ_x β_BE / D.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherences::{betas_at, CoherenceCoefficients, CoherenceError};
use crate::doppler::{hot_response, DopplerAverager, DopplerError};
use crate::params::{Couplings, ValidatedConfig};

/// |1 − κ_m β_BB| below this is treated as a vanishing magnetic denominator.
pub const MAGNETIC_DENOMINATOR_TOL: f64 = 1.0e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpticalResponse {
    pub chi_e: C64,
    pub chi_m: C64,
    pub xi_eh: C64,
    pub xi_he: C64,
}

impl OpticalResponse {
    pub fn as_array(&self) -> [C64; 4] {
        [self.chi_e, self.chi_m, self.xi_eh, self.xi_he]
    }

    pub fn map(self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            chi_e: f(self.chi_e),
            chi_m: f(self.chi_m),
            xi_eh: f(self.xi_eh),
            xi_he: f(self.xi_he),
        }
    }

    /// Largest component-wise relative difference.
    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| {
                let scale = a.norm().max(b.norm());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).norm() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

impl Add for OpticalResponse {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            chi_e: self.chi_e + o.chi_e,
            chi_m: self.chi_m + o.chi_m,
            xi_eh: self.xi_eh + o.xi_eh,
            xi_he: self.xi_he + o.xi_he,
        }
    }
}

impl Sub for OpticalResponse {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for OpticalResponse {
    type Output = Self;
    fn mul(self, w: f64) -> Self {
        self.map(|z| z * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ResponseError {
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("DegenerateMagnetic: 1 - kappa_m*beta_BB = {denominator} vanishes")]
    DegenerateMagnetic { denominator: C64 },
}

/// Failure while evaluating the response at one detuning, cold or hot.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Doppler(#[from] DopplerError),
}

pub fn response_from_betas(
    b: &CoherenceCoefficients,
    k: Couplings,
) -> Result<OpticalResponse, ResponseError> {
    let d = C64::new(1.0, 0.0) - b.beta_bb * k.kappa_m;
    if d.norm() < MAGNETIC_DENOMINATOR_TOL {
        return Err(ResponseError::DegenerateMagnetic { denominator: d });
    }
    Ok(OpticalResponse {
        chi_e: b.beta_be * b.beta_eb * (k.kappa_x * k.kappa_x) / d + b.beta_ee * k.kappa_e,
        chi_m: b.beta_bb * k.kappa_m / d,
        xi_eh: b.beta_eb * k.kappa_x / d,
        xi_he: b.beta_be * k.kappa_x / d,
    })
}

/// Response of the velocity class kv at the configured probe detuning.
pub fn response_at(cfg: &ValidatedConfig, kv: f64) -> Result<OpticalResponse, ResponseError> {
    let b = betas_at(cfg.system(), kv)?;
    response_from_betas(&b, cfg.couplings())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cold,
    Hot,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Cold => "cold",
            Mode::Hot => "hot",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Cold: the kv = 0 class. Hot: the Maxwellian average over kv.
pub fn response_point(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
) -> Result<OpticalResponse, EvalError> {
    match mode {
        Mode::Cold => Ok(response_at(cfg, 0.0)?),
        Mode::Hot => hot_response(cfg, averager),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("empty detuning grid")]
    EmptyGrid,
    #[error("detuning grid must be strictly monotone (violated at index {index})")]
    NonMonotoneGrid { index: usize },
    #[error("at grid index {index} (delta_p = {delta_p}): {source}")]
    AtPoint {
        index: usize,
        delta_p: f64,
        #[source]
        source: EvalError,
    },
}

impl SpectrumError {
    pub fn at(index: usize, delta_p: f64, source: EvalError) -> Self {
        Self::AtPoint {
            index,
            delta_p,
            source,
        }
    }
}

/// Strictly increasing or strictly decreasing, all values finite.
pub fn check_monotone(grid: &[f64]) -> Result<(), SpectrumError> {
    if grid.is_empty() {
        return Err(SpectrumError::EmptyGrid);
    }
    if let Some(i) = grid.iter().position(|x| !x.is_finite()) {
        return Err(SpectrumError::NonMonotoneGrid { index: i });
    }
    if grid.len() < 2 {
        return Ok(());
    }
    let up = grid[1] > grid[0];
    for i in 1..grid.len() {
        let ok = if up { grid[i] > grid[i - 1] } else { grid[i] < grid[i - 1] };
        if !ok {
            return Err(SpectrumError::NonMonotoneGrid { index: i });
        }
    }
    Ok(())
}

/// Response at every grid detuning, in grid order.
pub fn spectrum(
    cfg: &ValidatedConfig,
    grid: &[f64],
    mode: Mode,
) -> Result<Vec<OpticalResponse>, SpectrumError> {
    spectrum_with(cfg, grid, mode, &DopplerAverager::new(cfg.quadrature()))
}

pub fn spectrum_with(
    cfg: &ValidatedConfig,
    grid: &[f64],
    mode: Mode,
    averager: &DopplerAverager,
) -> Result<Vec<OpticalResponse>, SpectrumError> {
    check_monotone(grid)?;
    grid.par_iter()
        .enumerate()
        .map(|(i, &d)| {
            response_point(&cfg.with_probe_detuning(d), mode, averager)
                .map_err(|e| SpectrumError::at(i, d, e))
        })
        .collect()
}

/// Contiguous index ranges where Im(χ_e) < 0 (gain).
pub fn gain_regions(spec: &[OpticalResponse]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, r) in spec.iter().enumerate() {
        match (r.chi_e.im < 0.0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, spec.len() - 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Config, MediumParams, SystemParams};

    fn cfg(dipole_ratio: f64) -> ValidatedConfig {
        Config::new(
            SystemParams::default(),
            MediumParams {
                dipole_ratio,
                ..MediumParams::default()
            },
        )
        .validate()
        .unwrap()
    }

    #[test]
    fn no_magnetic_dipole_leaves_pure_electric_response() {
        let c = cfg(0.0).with_density_coupling(2.5).unwrap();
        let r = response_at(&c, 0.1).unwrap();
        let b = betas_at(c.system(), 0.1).unwrap();
        assert_eq!(r.chi_m, C64::new(0.0, 0.0));
        assert_eq!(r.xi_eh, C64::new(0.0, 0.0));
        assert_eq!(r.xi_he, C64::new(0.0, 0.0));
        assert_eq!(r.chi_e, b.beta_ee * 2.5);
    }

    #[test]
    fn small_magnetic_coupling_series() {
        let c = cfg(5.3e-5);
        let k = c.couplings();
        let b = betas_at(c.system(), 0.0).unwrap();
        let r = response_from_betas(&b, k).unwrap();
        let approx = b.beta_ee * k.kappa_e + b.beta_be * b.beta_eb * k.kappa_x.powi(2);
        // Correction is of relative order κ_m β_BB.
        let bound = (b.beta_bb * k.kappa_m).norm() * 10.0 * r.chi_e.norm();
        assert!((r.chi_e - approx).norm() <= bound);
    }

    #[test]
    fn degenerate_magnetic_denominator() {
        let b = CoherenceCoefficients {
            beta_ee: C64::new(0.0, 1.0),
            beta_eb: C64::new(0.0, 0.0),
            beta_be: C64::new(0.0, 0.0),
            beta_bb: C64::new(4.0, 0.0),
        };
        let k = Couplings {
            kappa_e: 1.0,
            kappa_m: 0.25,
            kappa_x: 0.5,
        };
        assert!(matches!(
            response_from_betas(&b, k),
            Err(ResponseError::DegenerateMagnetic { .. })
        ));
    }

    #[test]
    fn one_point_cold_spectrum_matches_point_evaluation() {
        let c = cfg(5.3e-5);
        let s = spectrum(&c, &[0.25], Mode::Cold).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], response_at(&c.with_probe_detuning(0.25), 0.0).unwrap());
    }

    #[test]
    fn grid_checks() {
        let c = cfg(5.3e-5);
        assert_eq!(spectrum(&c, &[], Mode::Cold), Err(SpectrumError::EmptyGrid));
        assert_eq!(
            spectrum(&c, &[0.0, 1.0, 1.0], Mode::Cold),
            Err(SpectrumError::NonMonotoneGrid { index: 2 })
        );
        assert!(spectrum(&c, &[1.0, 0.0, -1.0], Mode::Cold).is_ok());
    }

    #[test]
    fn spectrum_is_in_grid_order() {
        let c = cfg(5.3e-5);
        let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let s = spectrum(&c, &grid, Mode::Cold).unwrap();
        for (d, r) in grid.iter().zip(&s) {
            assert_eq!(*r, response_at(&c.with_probe_detuning(*d), 0.0).unwrap());
        }
    }

    #[test]
    fn point_errors_carry_grid_index() {
        // Decay-free, field-free system is singular exactly at resonance.
        let p = SystemParams {
            omega_1: 0.0,
            omega_2: 0.0,
            omega_3: 0.0,
            delta_b: 0.5,
            ..SystemParams::default()
        }
        .with_uniform_decay(1e-14);
        let c = Config::new(p, MediumParams::default()).validate().unwrap();
        let err = spectrum(&c, &[-1.0, 0.0, 1.0], Mode::Cold).unwrap_err();
        assert!(matches!(err, SpectrumError::AtPoint { index: 1, .. }), "{err}");
    }

    #[test]
    fn gain_region_detection() {
        let mk = |im: f64| OpticalResponse {
            chi_e: C64::new(0.0, im),
            ..OpticalResponse::default()
        };
        let s: Vec<_> = [1.0, -1.0, -2.0, 1.0, -0.5].iter().map(|&x| mk(x)).collect();
        assert_eq!(gain_regions(&s), vec![(1, 2), (4, 4)]);
    }
}
