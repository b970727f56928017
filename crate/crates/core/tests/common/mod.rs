//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use chiral_eit::coherences::CoherenceCoefficients;
use chiral_eit::params::SystemParams;
use chiral_eit::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn draw_params(rng: &mut ChaCha8Rng) -> (SystemParams, f64) {
    let mut u = || rng.gen_range(0.05..=5.0);
    let p = SystemParams {
        omega_1: u(),
        omega_2: u(),
        omega_3: u(),
        omega_p: u(),
        omega_b: u(),
        delta_p: u(),
        delta_b: u(),
        delta_1: u(),
        delta_2: u(),
        gamma_1: u(),
        gamma_2: u(),
        gamma_3: u(),
        gamma_4: u(),
        ..SystemParams::default()
    };
    let phi = rng.gen_range(0.0..2.0 * PI);
    let signs: Vec<f64> = (0..3).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let kv = rng.gen_range(-5.0..=5.0);
    (
        SystemParams {
            phi,
            alpha_1: signs[0],
            alpha_2: signs[1],
            alpha_3: signs[2],
            ..p
        },
        kv,
    )
}

/// Cramer's rule on the 3×3 system, written out independently of the crate's
/// LU solver. Returns (ρ̃₁₄, ρ̃₁₃) for a unit drive (i/2) in row `row`.
pub fn cramer(m: &[[C64; 3]; 3], row: usize) -> (C64, C64) {
    let det = |a: &[[C64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let mut x = [C64::new(0.0, 0.0); 3];
    x[row] = C64::new(0.0, 0.5);
    let d = det(m);
    let col = |k: usize| {
        let mut a = *m;
        for r in 0..3 {
            a[r][k] = x[r];
        }
        -det(&a) / d
    };
    (col(0), col(1))
}

pub fn rel_vec_err(a: &CoherenceCoefficients, b: &CoherenceCoefficients) -> f64 {
    let scale = b.as_array().iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(x, y)| (x - y).norm() / scale)
        .fold(0.0, f64::max)
}

