//! Chiral refractive index, group index, group velocity and delay.
//!
//! n = √((1+χ_e)(1+χ_m) − ¼(ξ_EH+ξ_HE)²) + (i/2)(ξ_EH − ξ_HE)
//!
//! N_g = Re[n + (ω₁₄ − Δ_p) ∂n/∂Δ_p],  v_g = c/N_g,  τ = L(N_g − 1)/c.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::doppler::{hot_response_fixed, hot_response_with_report, AverageMethod, DopplerAverager};
use crate::params::{MediumParams, ValidatedConfig, SPEED_OF_LIGHT};
use crate::response::{response_at, EvalError, Mode, OpticalResponse};

/// Largest tolerated change of n between adjacent grid points.
pub const BRANCH_JUMP_THRESHOLD: f64 = 0.5;
/// Relative derivative-error bound above which a grid is too coarse.
pub const DERIVATIVE_REL_TOL: f64 = 0.01;
/// Detuning step of the local stencils used for single-point group indices.
pub const LOCAL_STEP: f64 = 1.0e-3;
/// Minimum number of samples the differentiation machinery accepts.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("BranchJump: refractive index jumps by {jump:.3e} between grid indices {} and {index}", index - 1)]
    BranchJump { index: usize, jump: f64 },
    #[error("GridTooCoarse: derivative error estimate {error:.3e} at grid index {index} exceeds 1% of {reference:.3e}")]
    GridTooCoarse {
        index: usize,
        error: f64,
        reference: f64,
    },
    #[error("grid needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("grid is not uniform (index {index})")]
    NonUniformGrid { index: usize },
    #[error("NoCrossoverInRange: no sign change of the difference on [{lo}, {hi}]")]
    NoCrossoverInRange { lo: f64, hi: f64 },
    #[error("at delta_p = {delta_p}: {source}")]
    Eval {
        delta_p: f64,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Invalid(#[from] crate::params::ValidationErrors),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub delta_p: f64,
    pub n_r: f64,
    pub n_complex: C64,
    /// ∂n/∂Δ_p in units of 1/γ.
    pub dn_ddelta: C64,
    pub n_g: f64,
    /// Group velocity (m/s); infinite when N_g = 0.
    pub v_g: f64,
    /// Delay (s); negative is an advance.
    pub tau: f64,
}

impl DispersionPoint {
    pub fn new(delta_p: f64, n: C64, dn: C64, medium: &MediumParams) -> Self {
        let n_g = (n + dn * (medium.omega_14 - delta_p)).re;
        Self {
            delta_p,
            n_r: n.re,
            n_complex: n,
            dn_ddelta: dn,
            n_g,
            v_g: SPEED_OF_LIGHT / n_g,
            tau: delay(n_g, medium.length_l),
        }
    }
}

/// τ = L(N_g − 1)/c in seconds.
pub fn delay(n_g: f64, length: f64) -> f64 {
    length * (n_g - 1.0) / SPEED_OF_LIGHT
}

fn radicand(r: &OpticalResponse) -> C64 {
    let one = C64::new(1.0, 0.0);
    let s = r.xi_eh + r.xi_he;
    (one + r.chi_e) * (one + r.chi_m) - s * s * 0.25
}

fn antisymmetric(r: &OpticalResponse) -> C64 {
    C64::new(0.0, 0.5) * (r.xi_eh - r.xi_he)
}

/// Principal-branch index: the vacuum response gives exactly 1.
pub fn refractive_index(r: &OpticalResponse) -> C64 {
    radicand(r).sqrt() + antisymmetric(r)
}

/// The root of the square root closest to `near`; ties go to Im ≥ 0.
pub fn refractive_index_near(r: &OpticalResponse, near: C64) -> C64 {
    let root = radicand(r).sqrt();
    let a = antisymmetric(r);
    let (plus, minus) = (a + root, a - root);
    let (dp, dm) = ((plus - near).norm(), (minus - near).norm());
    let tie = (dp - dm).abs() <= 1e-12 * dp.max(dm).max(f64::MIN_POSITIVE);
    if tie {
        if root.im > 0.0 || (root.im == 0.0 && root.re >= 0.0) {
            plus
        } else {
            minus
        }
    } else if dp < dm {
        plus
    } else {
        minus
    }
}

/// Continuous branch along a spectrum, seeded with the principal root at the
/// point of largest |1 + χ_e|.
pub fn track_branch(spec: &[OpticalResponse]) -> Result<Vec<C64>, OpticsError> {
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let seed = spec
        .iter()
        .enumerate()
        .max_by(|a, b| {
            (C64::new(1.0, 0.0) + a.1.chi_e)
                .norm()
                .total_cmp(&(C64::new(1.0, 0.0) + b.1.chi_e).norm())
        })
        .map(|(i, _)| i)
        .unwrap();
    let mut n = vec![C64::new(0.0, 0.0); spec.len()];
    n[seed] = refractive_index(&spec[seed]);
    for i in seed + 1..spec.len() {
        n[i] = refractive_index_near(&spec[i], n[i - 1]);
    }
    for i in (0..seed).rev() {
        n[i] = refractive_index_near(&spec[i], n[i + 1]);
    }
    for i in 1..n.len() {
        let jump = (n[i] - n[i - 1]).norm();
        if jump > BRANCH_JUMP_THRESHOLD {
            return Err(OpticsError::BranchJump { index: i, jump });
        }
    }
    Ok(n)
}

/// Derivative samples and their error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub value: Vec<C64>,
    pub error: Vec<f64>,
    /// Rounding-noise level of the stencils; error estimates below it are
    /// not meaningful.
    pub noise: f64,
}

/// Uniform spacing of a grid, or an error naming the first offending index.
pub fn uniform_spacing(grid: &[f64]) -> Result<f64, OpticsError> {
    if grid.len() < 2 {
        return Err(OpticsError::TooFewPoints(grid.len()));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    for i in 1..grid.len() {
        if ((grid[i] - grid[i - 1]) - h).abs() > 1e-6 * h.abs() {
            return Err(OpticsError::NonUniformGrid { index: i });
        }
    }
    Ok(h)
}

/// d f/dx on a uniform grid. Interior points use Richardson-extrapolated
/// central differences (4D(h) − D(2h))/3 with error estimate |D(h) − D(2h)|/3;
/// the two points at each edge use fourth-order one-sided stencils, with the
/// second-order stencil as the error estimate.
pub fn differentiate(f: &[C64], h: f64) -> Result<Derivative, OpticsError> {
    let n = f.len();
    if n < MIN_POINTS {
        return Err(OpticsError::TooFewPoints(n));
    }
    let mut value = vec![C64::new(0.0, 0.0); n];
    let mut error = vec![0.0; n];
    for i in 2..n - 2 {
        let d1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
        let d2 = (f[i + 2] - f[i - 2]) / (4.0 * h);
        value[i] = (d1 * 4.0 - d2) / 3.0;
        error[i] = (d1 - d2).norm() / 3.0;
    }
    let edge = |g: &dyn Fn(usize) -> C64, s: f64| -> [(C64, f64); 2] {
        let d0 = (g(0) * -25.0 + g(1) * 48.0 - g(2) * 36.0 + g(3) * 16.0 - g(4) * 3.0) / (12.0 * h * s);
        let d0_low = (g(0) * -3.0 + g(1) * 4.0 - g(2)) / (2.0 * h * s);
        let d1 = (g(0) * -3.0 - g(1) * 10.0 + g(2) * 18.0 - g(3) * 6.0 + g(4)) / (12.0 * h * s);
        let d1_low = (g(2) - g(0)) / (2.0 * h * s);
        [(d0, (d0 - d0_low).norm()), (d1, (d1 - d1_low).norm())]
    };
    let peak = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let noise = 64.0 * f64::EPSILON * peak / h.abs();
    let lo = edge(&|k| f[k], 1.0);
    let hi = edge(&|k| f[n - 1 - k], -1.0);
    for k in 0..2 {
        value[k] = lo[k].0;
        error[k] = lo[k].1;
        value[n - 1 - k] = hi[k].0;
        error[n - 1 - k] = hi[k].1;
    }
    Ok(Derivative { value, error, noise })
}

/// Rejects derivatives whose error estimate exceeds 1% of the local value.
/// Near a zero of the derivative the reference is floored at 1% of the
/// largest magnitude on the grid.
pub fn check_derivative(d: &Derivative) -> Result<(), OpticsError> {
    let peak = d.value.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (i, (v, e)) in d.value.iter().zip(&d.error).enumerate() {
        let reference = v.norm().max(0.01 * peak);
        if *e > DERIVATIVE_REL_TOL * reference && *e > d.noise {
            return Err(OpticsError::GridTooCoarse {
                index: i,
                error: *e,
                reference,
            });
        }
    }
    Ok(())
}

/// Group index along a uniform detuning grid of complex refractive indices.
pub fn group_index(
    grid: &[f64],
    n: &[C64],
    medium: &MediumParams,
) -> Result<Vec<DispersionPoint>, OpticsError> {
    assert_eq!(grid.len(), n.len(), "grid and index lengths differ");
    let h = uniform_spacing(grid)?;
    let d = differentiate(n, h)?;
    check_derivative(&d)?;
    Ok(grid
        .iter()
        .zip(n)
        .zip(&d.value)
        .map(|((&x, &ni), &dn)| DispersionPoint::new(x, ni, dn, medium))
        .collect())
}

/// Evaluates responses on `grid` around one configuration. Hot points share
/// the rule the adaptive averager picks at `anchor`, so the stencil sees one
/// smooth discretization.
fn stencil_responses(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    grid: &[f64],
    anchor: f64,
) -> Result<Vec<OpticalResponse>, OpticsError> {
    let wrap = |d: f64| move |e: EvalError| OpticsError::Eval { delta_p: d, source: e };
    match mode {
        Mode::Cold => grid
            .par_iter()
            .map(|&d| response_at(&cfg.with_probe_detuning(d), 0.0).map_err(|e| wrap(d)(e.into())))
            .collect(),
        Mode::Hot => {
            let method = hot_response_with_report(&cfg.with_probe_detuning(anchor), averager)
                .map_err(wrap(anchor))?
                .method;
            grid.par_iter()
                .map(|&d| hot_response_fixed(&cfg.with_probe_detuning(d), averager, method).map_err(wrap(d)))
                .collect()
        }
    }
}

/// Rule chosen by the adaptive averager at the configured detuning.
pub fn hot_rule(cfg: &ValidatedConfig, averager: &DopplerAverager) -> Result<AverageMethod, OpticsError> {
    hot_response_with_report(cfg, averager)
        .map(|r| r.method)
        .map_err(|e| OpticsError::Eval {
            delta_p: cfg.system().delta_p,
            source: e,
        })
}

fn local_grid(center: f64, h: f64, half: usize) -> Vec<f64> {
    (0..=2 * half)
        .map(|k| center + (k as f64 - half as f64) * h)
        .collect()
}

/// Group index at one detuning from a local five-point stencil.
pub fn group_index_at(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    delta_p: f64,
) -> Result<DispersionPoint, OpticsError> {
    let grid = local_grid(delta_p, LOCAL_STEP, 2);
    let spec = stencil_responses(cfg, mode, averager, &grid, delta_p)?;
    let n = track_branch(&spec)?;
    let points = group_index(&grid, &n, cfg.medium())?;
    Ok(points[2])
}

/// N_g and dN_g/dΔ_p (units of 1/γ) at one detuning, from a nine-point stencil.
pub fn group_index_slope(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    delta_p: f64,
) -> Result<(DispersionPoint, f64), OpticsError> {
    let grid = local_grid(delta_p, LOCAL_STEP, 4);
    let spec = stencil_responses(cfg, mode, averager, &grid, delta_p)?;
    let n = track_branch(&spec)?;
    let points = group_index(&grid, &n, cfg.medium())?;
    let inner: Vec<C64> = points[2..7].iter().map(|p| C64::new(p.n_g, 0.0)).collect();
    let d = differentiate(&inner, LOCAL_STEP)?;
    let centre = Derivative {
        value: vec![d.value[2]],
        error: vec![d.error[2]],
        noise: d.noise,
    };
    check_derivative(&centre).map_err(|_| OpticsError::GridTooCoarse {
        index: 4,
        error: d.error[2],
        reference: d.value[2].norm(),
    })?;
    Ok((points[4], d.value[2].re))
}

/// One row of a delay table. Failed rows keep their error text.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub scenario: String,
    pub mode: Mode,
    pub omega_3: f64,
    pub result: Result<DispersionPoint, String>,
}

impl DelayRow {
    pub fn tau_ns(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|p| p.tau * 1e9)
    }
}

/// N_g, v_g and τ at Δ_p = 0 for each named scenario.
pub fn delay_table(scenarios: &[(String, ValidatedConfig, Mode)]) -> Vec<DelayRow> {
    scenarios
        .par_iter()
        .map(|(name, cfg, mode)| {
            let averager = DopplerAverager::new(cfg.quadrature());
            DelayRow {
                scenario: name.clone(),
                mode: *mode,
                omega_3: cfg.system().omega_3,
                result: group_index_at(cfg, *mode, &averager, 0.0).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// Bisection for a sign change of `g` on [lo, hi], to absolute tolerance `tol`.
pub fn bisect<E>(
    g: impl Fn(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Result<f64, OpticsError>, E> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut ga, gb) = (g(a)?, g(b)?);
    if ga == 0.0 {
        return Ok(Ok(a));
    }
    if gb == 0.0 {
        return Ok(Ok(b));
    }
    if ga.signum() == gb.signum() || !ga.is_finite() || !gb.is_finite() {
        return Ok(Err(OpticsError::NoCrossoverInRange { lo, hi }));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(Ok(m));
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(Ok(0.5 * (a + b)))
}

/// Ω₃ at which cold and hot group indices at Δ_p = 0 coincide.
pub fn superluminal_crossover(
    cfg: &ValidatedConfig,
    omega3_lo: f64,
    omega3_hi: f64,
) -> Result<f64, OpticsError> {
    let averager = DopplerAverager::new(cfg.quadrature());
    let diff = |o3: f64| -> Result<f64, OpticsError> {
        let c = cfg.with_omega_3(o3)?.with_probe_detuning(0.0);
        let cold = group_index_at(&c, Mode::Cold, &averager, 0.0)?.n_g;
        let hot = group_index_at(&c, Mode::Hot, &averager, 0.0)?.n_g;
        Ok(cold - hot)
    };
    bisect(diff, omega3_lo, omega3_hi, 1e-3)?
}
