//! One-dimensional root-find of the density coupling κ_e.
//!
//! The group index at Δ_p = 0 is scanned on κ_e = 10^(k/8), k = −32…32. The
//! first sign change of N_g(κ_e) − target is refined by the Illinois variant
//! of regula falsi.

use rayon::prelude::*;
use thiserror::Error;

use crate::doppler::DopplerAverager;
use crate::optics::{group_index_at, OpticsError};
use crate::params::{CalibrationRecord, ValidatedConfig};
use crate::response::Mode;

use super::presets::Quantity;

/// Relative residual at which the refinement stops.
pub const CALIBRATION_REL_TOL: f64 = 1.0e-10;
const SCAN_STEPS_PER_DECADE: i32 = 8;
const SCAN_DECADES: i32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("NoRootInBracket: {quantity} never crosses {target} for kappa_e in [{lo:e}, {hi:e}]")]
    NoRootInBracket {
        quantity: &'static str,
        target: f64,
        lo: f64,
        hi: f64,
    },
    #[error("at kappa_e = {kappa_e:e}: {source}")]
    Eval {
        kappa_e: f64,
        #[source]
        source: OpticsError,
    },
}

/// N_g at Δ_p = 0 with the given κ_e.
pub fn carrier_group_index(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    kappa_e: f64,
) -> Result<f64, CalibrationError> {
    let eval = |e: OpticsError| CalibrationError::Eval { kappa_e, source: e };
    let c = cfg
        .with_density_coupling(kappa_e)
        .map_err(|e| eval(OpticsError::Invalid(e)))?;
    group_index_at(&c, mode, averager, 0.0).map(|p| p.n_g).map_err(eval)
}

fn scan_points() -> Vec<f64> {
    let k = SCAN_STEPS_PER_DECADE * SCAN_DECADES;
    (-k..=k)
        .map(|i| 10f64.powf(i as f64 / SCAN_STEPS_PER_DECADE as f64))
        .collect()
}

/// κ_e such that the group index at Δ_p = 0 equals `target`.
pub fn calibrate(
    cfg: &ValidatedConfig,
    scenario: &str,
    mode: Mode,
    quantity: Quantity,
    target: f64,
) -> Result<CalibrationRecord, CalibrationError> {
    let averager = DopplerAverager::new(cfg.quadrature());
    let g = |k: f64| carrier_group_index(cfg, mode, &averager, k).map(|v| v - target);
    let kappas = scan_points();
    let values: Vec<Result<f64, CalibrationError>> = kappas.par_iter().map(|&k| g(k)).collect();

    let mut bracket = None;
    for i in 0..kappas.len() {
        if let Ok(v) = values[i] {
            if v == 0.0 {
                bracket = Some((kappas[i], kappas[i], v, v));
                break;
            }
        }
        if i + 1 < kappas.len() {
            if let (Ok(a), Ok(b)) = (&values[i], &values[i + 1]) {
                if a.signum() != b.signum() && a.is_finite() && b.is_finite() {
                    bracket = Some((kappas[i], kappas[i + 1], *a, *b));
                    break;
                }
            }
        }
    }
    let Some((mut a, mut b, mut ga, mut gb)) = bracket else {
        // A failed evaluation is more informative than a missing bracket when
        // nothing could be evaluated at all.
        if values.iter().all(|v| v.is_err()) {
            return Err(values.into_iter().find_map(|v| v.err()).expect("nonempty scan"));
        }
        return Err(CalibrationError::NoRootInBracket {
            quantity: quantity.label(),
            target,
            lo: kappas[0],
            hi: kappas[kappas.len() - 1],
        });
    };

    let tol = CALIBRATION_REL_TOL * target.abs().max(1.0);
    let mut kappa = if ga.abs() <= gb.abs() { a } else { b };
    let mut side = 0i8;
    for _ in 0..200 {
        if ga.abs() <= tol {
            kappa = a;
            break;
        }
        if gb.abs() <= tol || (b - a).abs() <= 1e-15 * b.abs() {
            kappa = b;
            break;
        }
        let c = (a * gb - b * ga) / (gb - ga);
        let gc = g(c)?;
        kappa = c;
        if gc.abs() <= tol {
            break;
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    let achieved = carrier_group_index(cfg, mode, &averager, kappa)?;
    Ok(CalibrationRecord {
        scenario: scenario.to_string(),
        mode: mode.label().to_string(),
        quantity: quantity.label().to_string(),
        target,
        achieved,
        kappa_e: kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::presets::preset;

    fn fig7a() -> ValidatedConfig {
        preset("fig7a").unwrap().config.validate().unwrap()
    }

    #[test]
    fn fixed_point_returns_unit_coupling() {
        let cfg = fig7a();
        let avg = DopplerAverager::new(cfg.quadrature());
        let at_one = carrier_group_index(&cfg, Mode::Cold, &avg, 1.0).unwrap();
        let rec = calibrate(&cfg, "fig7a", Mode::Cold, Quantity::GroupIndex, at_one).unwrap();
        assert!((rec.kappa_e - 1.0).abs() < 1e-9, "{}", rec.kappa_e);
    }

    #[test]
    fn calibrated_coupling_reproduces_target() {
        let cfg = fig7a();
        let rec = calibrate(&cfg, "fig7a", Mode::Cold, Quantity::GroupIndex, 1415.65).unwrap();
        assert!((rec.achieved - 1415.65).abs() < 1e-6 * 1415.65);
        let avg = DopplerAverager::new(cfg.quadrature());
        let again = carrier_group_index(&cfg, Mode::Cold, &avg, rec.kappa_e).unwrap();
        assert_eq!(again, rec.achieved);
    }

    #[test]
    fn unreachable_target_has_no_bracket() {
        let err = calibrate(&fig7a(), "fig7a", Mode::Cold, Quantity::GroupIndex, 1e12).unwrap_err();
        assert!(matches!(err, CalibrationError::NoRootInBracket { .. }));
    }
}
