//! First-order probe coherences ρ̃₁₄, ρ̃₁₃ of the double-lambda system.
//!
//! With the atoms initially in |1⟩ (ρ̃₁₁ = 1, every other population and
//! second-order coherence zero) the equations of motion for
//! Y = (ρ̃₁₄, ρ̃₁₃, ρ̃₁₂) close into a linear system Ẏ = M·Y + X. The steady
//! state Y = −M⁻¹X is the authoritative result. Cofactor expansion of the
//! same system gives closed forms that are kept as an independent check.
//!
//! Row/column order is fixed: 0 ↔ ρ̃₁₄, 1 ↔ ρ̃₁₃, 2 ↔ ρ̃₁₂.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{vec_norm, Mat3, Vec3};
use crate::params::SystemParams;

/// Condition number above which the steady-state system is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1.0e12;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CoherenceError {
    #[error("SingularSystem: steady-state matrix condition number {condition:.3e} exceeds threshold")]
    SingularSystem { condition: f64 },
}

/// Detunings after the velocity-class replacement, in units of γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedDetunings {
    pub d_p: f64,
    pub d_b: f64,
    pub d_1: f64,
    pub d_2: f64,
    pub kv: f64,
}

impl ShiftedDetunings {
    /// All wave numbers are taken equal, so each detuning shifts by ±kv.
    pub fn new(p: &SystemParams, kv: f64) -> Self {
        Self {
            d_p: p.delta_p + kv,
            d_b: p.delta_b + p.alpha_3 * kv,
            d_1: p.delta_1 + p.alpha_1 * kv,
            d_2: p.delta_2 + p.alpha_2 * kv,
            kv,
        }
    }
}

/// Diagonal entries of the coherence matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenominatorTerms {
    /// ρ̃₁₄ (probe) coherence: i·d_p − (γ₁+γ₂)/2.
    pub a1: C64,
    /// ρ̃₁₂ (ground-state) coherence: i·(d_p − d₂) − (γ₁+γ₂+γ₃+γ₄)/2.
    pub a2: C64,
    /// ρ̃₁₃ (magnetic probe) coherence: i·d_b − (γ₁+γ₂)/2.
    pub a3: C64,
}

impl DenominatorTerms {
    pub fn new(p: &SystemParams, s: &ShiftedDetunings) -> Self {
        let g12 = 0.5 * (p.gamma_1 + p.gamma_2);
        let g_all = 0.5 * (p.gamma_1 + p.gamma_2 + p.gamma_3 + p.gamma_4);
        Self {
            a1: C64::new(-g12, s.d_p),
            a2: C64::new(-g_all, s.d_p - s.d_2),
            a3: C64::new(-g12, s.d_b),
        }
    }
}

/// Polarizability (β_EE, β_BB) and chirality (β_EB, β_BE) coefficients, in
/// units of 1/γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceCoefficients {
    pub beta_ee: C64,
    pub beta_eb: C64,
    pub beta_be: C64,
    pub beta_bb: C64,
}

impl CoherenceCoefficients {
    /// (ρ̃₁₄, ρ̃₁₃) for the given probe amplitudes.
    pub fn coherences(&self, omega_p: f64, omega_b: f64) -> (C64, C64) {
        (
            self.beta_ee * omega_p + self.beta_eb * omega_b,
            self.beta_be * omega_p + self.beta_bb * omega_b,
        )
    }

    /// Relative deviation from β_EB = β_BE*.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let scale = self.beta_eb.norm().max(self.beta_be.norm());
        if scale == 0.0 {
            return 0.0;
        }
        (self.beta_eb - self.beta_be.conj()).norm() / scale
    }

    pub fn as_array(&self) -> [C64; 4] {
        [self.beta_ee, self.beta_eb, self.beta_be, self.beta_bb]
    }
}

/// Coefficient matrix and the two probe drive vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrix {
    pub m: Mat3,
    /// (i/2)Ω_p ρ̃₁₁ drive of the ρ̃₁₄ equation.
    pub x_p: Vec3,
    /// (i/2)Ω_b ρ̃₁₁ drive of the ρ̃₁₃ equation.
    pub x_b: Vec3,
}

pub fn build_system_matrix(p: &SystemParams, s: &ShiftedDetunings) -> SystemMatrix {
    let d = DenominatorTerms::new(p, s);
    let half = 0.5;
    let e_phi = C64::from_polar(1.0, p.phi);
    let m = Mat3([
        [
            d.a1,
            I * half * p.omega_3 * e_phi,
            I * half * p.omega_2,
        ],
        [
            I * half * p.omega_3 * e_phi.conj(),
            d.a3,
            I * half * p.omega_1,
        ],
        [I * half * p.omega_2, -I * half * p.omega_1, d.a2],
    ]);
    SystemMatrix {
        m,
        x_p: [I * half * p.omega_p, ZERO, ZERO],
        x_b: [ZERO, I * half * p.omega_b, ZERO],
    }
}

/// Y = −M⁻¹X for unit probe amplitudes; by linearity the β coefficients are
/// the solution components themselves, so Ω_p = 0 or Ω_b = 0 is harmless.
pub fn solve_steady_state(sys: &SystemMatrix) -> Result<CoherenceCoefficients, CoherenceError> {
    let lu = sys.m.lu().ok_or(CoherenceError::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let condition = sys.m.norm_1() * lu.inverse().norm_1();
    if !(condition <= SINGULAR_CONDITION) {
        return Err(CoherenceError::SingularSystem { condition });
    }
    let unit_p = [I * 0.5, ZERO, ZERO];
    let unit_b = [ZERO, I * 0.5, ZERO];
    let yp = lu.solve(&unit_p);
    let yb = lu.solve(&unit_b);
    Ok(CoherenceCoefficients {
        beta_ee: -yp[0],
        beta_be: -yp[1],
        beta_eb: -yb[0],
        beta_bb: -yb[1],
    })
}

/// Relative residual ‖M·Y + X‖/‖X‖ of a solution for the actual drives.
pub fn steady_state_residual(sys: &SystemMatrix, b: &CoherenceCoefficients, omega_p: f64, omega_b: f64) -> f64 {
    let (r14, r13) = b.coherences(omega_p, omega_b);
    // ρ̃₁₂ follows from the third row of the steady-state equations.
    let m = &sys.m.0;
    let r12 = -(m[2][0] * r14 + m[2][1] * r13) / m[2][2];
    let y = [r14, r13, r12];
    let my = sys.m.mul_vec(&y);
    let x = [sys.x_p[0] + sys.x_b[0], sys.x_p[1] + sys.x_b[1], sys.x_p[2] + sys.x_b[2]];
    let r = [my[0] + x[0], my[1] + x[1], my[2] + x[2]];
    vec_norm(&r) / vec_norm(&x)
}

/// Full solution vector (ρ̃₁₄, ρ̃₁₃, ρ̃₁₂) for the configured probe amplitudes.
pub fn steady_state_vector(sys: &SystemMatrix) -> Result<Vec3, CoherenceError> {
    let lu = sys.m.lu().ok_or(CoherenceError::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let x = [sys.x_p[0] + sys.x_b[0], sys.x_p[1] + sys.x_b[1], sys.x_p[2] + sys.x_b[2]];
    let y = lu.solve(&x);
    Ok([-y[0], -y[1], -y[2]])
}

/// Cofactor closed forms of the β coefficients.
///
/// Common denominator:
/// 2[Ω₁Ω₂Ω₃ sin φ − Ω₁²A₁ + Ω₃²A₂ + Ω₂²A₃ + 4A₁A₂A₃].
pub fn closed_form_betas(
    p: &SystemParams,
    s: &ShiftedDetunings,
) -> Result<CoherenceCoefficients, CoherenceError> {
    let DenominatorTerms { a1, a2, a3 } = DenominatorTerms::new(p, s);
    let (o1, o2, o3) = (p.omega_1, p.omega_2, p.omega_3);
    let e_phi = C64::from_polar(1.0, p.phi);

    let terms = [
        C64::new(o1 * o2 * o3 * p.phi.sin(), 0.0),
        -a1 * (o1 * o1),
        a2 * (o3 * o3),
        a3 * (o2 * o2),
        a1 * a2 * a3 * 4.0,
    ];
    let den = terms.iter().sum::<C64>() * 2.0;
    let scale: f64 = terms.iter().map(|t| t.norm()).sum::<f64>() * 2.0;
    if den.norm() <= scale / SINGULAR_CONDITION {
        return Err(CoherenceError::SingularSystem {
            condition: scale / den.norm(),
        });
    }

    let o12 = I * (o1 * o2);
    Ok(CoherenceCoefficients {
        beta_ee: I * (o1 * o1 - a2 * a3 * 4.0) / den,
        beta_eb: -(o12 + a2 * e_phi * (2.0 * o3)) / den,
        beta_be: (o12 - a2 * e_phi.conj() * (2.0 * o3)) / den,
        beta_bb: -I * (a1 * a2 * 4.0 + o2 * o2) / den,
    })
}

/// β coefficients at velocity shift kv through the linear solve.
pub fn betas_at(p: &SystemParams, kv: f64) -> Result<CoherenceCoefficients, CoherenceError> {
    let s = ShiftedDetunings::new(p, kv);
    solve_steady_state(&build_system_matrix(p, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fig2() -> SystemParams {
        SystemParams::default()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn shifted_detunings_follow_construction_rule() {
        let p = SystemParams {
            delta_p: 0.3,
            delta_b: -0.2,
            delta_1: 0.1,
            delta_2: 0.4,
            alpha_1: -1.0,
            alpha_2: 1.0,
            alpha_3: -1.0,
            ..fig2()
        };
        let s = ShiftedDetunings::new(&p, 0.5);
        assert_eq!(s.d_p, 0.8);
        assert_eq!(s.d_b, -0.7);
        assert_eq!(s.d_1, -0.4);
        assert_eq!(s.d_2, 0.9);
    }

    #[test]
    fn decay_parts_of_diagonal() {
        let p = SystemParams {
            gamma_1: 0.1,
            gamma_2: 0.3,
            gamma_3: 0.5,
            gamma_4: 0.7,
            delta_p: 1.5,
            delta_b: -0.5,
            delta_2: 0.25,
            ..fig2()
        };
        let d = DenominatorTerms::new(&p, &ShiftedDetunings::new(&p, 0.0));
        assert_eq!(d.a1, c(-0.2, 1.5));
        assert_eq!(d.a3, c(-0.2, -0.5));
        assert_eq!(d.a2, c(-0.8, 1.25));
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let p = SystemParams {
            omega_1: 0.0,
            omega_2: 0.0,
            omega_3: 0.0,
            delta_p: 0.4,
            ..fig2()
        };
        let s = ShiftedDetunings::new(&p, 0.0);
        let sys = build_system_matrix(&p, &s);
        let d = DenominatorTerms::new(&p, &s);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(sys.m.0[i][j], ZERO);
                }
            }
        }
        assert_eq!(sys.m.0[0][0], d.a1);
        assert_eq!(sys.m.0[1][1], d.a3);
        assert_eq!(sys.m.0[2][2], d.a2);
    }

    #[test]
    fn microwave_off_removes_cross_terms() {
        let p = SystemParams { omega_3: 0.0, ..fig2() };
        let sys = build_system_matrix(&p, &ShiftedDetunings::new(&p, 0.0));
        assert_eq!(sys.m.0[0][1], ZERO);
        assert_eq!(sys.m.0[1][0], ZERO);
    }

    #[test]
    fn fig2_matrix_matches_hand_expansion() {
        // Ω₁ = 0.1, Ω₂ = 1, Ω₃ = 0.7, φ = π/2, γᵢ = 0.1, all Δ = 0, kv = 0.
        let p = fig2();
        let sys = build_system_matrix(&p, &ShiftedDetunings::new(&p, 0.0));
        let want = [
            [c(-0.1, 0.0), c(-0.35, 0.0), c(0.0, 0.5)],
            [c(0.35, 0.0), c(-0.1, 0.0), c(0.0, 0.05)],
            [c(0.0, 0.5), c(0.0, -0.05), c(-0.2, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (sys.m.0[i][j] - want[i][j]).norm() < 1e-15,
                    "M[{i}][{j}] = {} want {}",
                    sys.m.0[i][j],
                    want[i][j]
                );
            }
        }
        assert_eq!(sys.x_p, [c(0.0, 0.005), ZERO, ZERO]);
        assert_eq!(sys.x_b, [ZERO, c(0.0, 0.005), ZERO]);
    }

    #[test]
    fn two_level_limit() {
        let p = SystemParams {
            omega_1: 0.0,
            omega_2: 0.0,
            omega_3: 0.0,
            ..fig2()
        };
        let b = betas_at(&p, 0.0).unwrap();
        // −(i/2)/A₁ with A₁ = −(γ₁+γ₂)/2 = −0.1.
        assert!(rel(b.beta_ee, c(0.0, 5.0)) < 1e-14);
        assert_eq!(b.beta_eb, ZERO);
        assert_eq!(b.beta_be, ZERO);
    }

    #[test]
    fn closed_form_agrees_at_fig2() {
        let p = fig2();
        let s = ShiftedDetunings::new(&p, 0.0);
        let a = solve_steady_state(&build_system_matrix(&p, &s)).unwrap();
        let b = closed_form_betas(&p, &s).unwrap();
        for (x, y) in a.as_array().iter().zip(b.as_array()) {
            assert!(rel(*x, y) < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn microwave_off_cross_numerator() {
        let p = SystemParams { omega_3: 0.0, ..fig2() };
        let s = ShiftedDetunings::new(&p, 0.0);
        let d = DenominatorTerms::new(&p, &s);
        let den = (-d.a1 * p.omega_1.powi(2) + d.a3 * p.omega_2.powi(2) + d.a1 * d.a2 * d.a3 * 4.0) * 2.0;
        let b = closed_form_betas(&p, &s).unwrap();
        let want = -I * (p.omega_1 * p.omega_2) / den;
        assert!(rel(b.beta_eb, want) < 1e-14);
    }

    #[test]
    fn conjugate_relation_at_zero_detuning() {
        let b = betas_at(&fig2(), 0.0).unwrap();
        assert!(b.conjugate_asymmetry() < 1e-12);
        // Off resonance the relation is broken.
        let b = betas_at(&fig2().with_probe_detuning(0.7), 0.0).unwrap();
        assert!(b.conjugate_asymmetry() > 1e-3);
    }

    #[test]
    fn coherence_residual_is_tiny() {
        let p = SystemParams {
            omega_p: 0.02,
            omega_b: 0.03,
            delta_p: 0.3,
            ..fig2()
        };
        let sys = build_system_matrix(&p, &ShiftedDetunings::new(&p, 0.1));
        let b = solve_steady_state(&sys).unwrap();
        assert!(steady_state_residual(&sys, &b, p.omega_p, p.omega_b) < 1e-13);
        let y = steady_state_vector(&sys).unwrap();
        let (r14, r13) = b.coherences(p.omega_p, p.omega_b);
        assert!(rel(y[0], r14) < 1e-13);
        assert!(rel(y[1], r13) < 1e-13);
    }

    #[test]
    fn singular_matrix_is_reported() {
        // Zero decay would be rejected by validation; build the matrix anyway to
        // hit an exactly singular dark-state configuration.
        let p = SystemParams {
            gamma_1: 0.0,
            gamma_2: 0.0,
            gamma_3: 0.0,
            gamma_4: 0.0,
            omega_1: 0.0,
            omega_2: 0.0,
            omega_3: 0.0,
            phi: FRAC_PI_2,
            ..fig2()
        };
        let s = ShiftedDetunings::new(&p, 0.0);
        assert!(matches!(
            solve_steady_state(&build_system_matrix(&p, &s)),
            Err(CoherenceError::SingularSystem { .. })
        ));
        assert!(closed_form_betas(&p, &s).is_err());
    }

    #[test]
    fn probe_amplitudes_do_not_enter_betas() {
        let a = betas_at(&SystemParams { omega_p: 1e-6, omega_b: 0.0, ..fig2() }, 0.2).unwrap();
        let b = betas_at(&SystemParams { omega_p: 0.5, omega_b: 2.0, ..fig2() }, 0.2).unwrap();
        assert_eq!(a, b);
    }
}
