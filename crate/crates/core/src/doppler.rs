//! Maxwellian velocity averaging for the hot medium.
//!
//! ⟨f⟩ = (1/(V_D√π)) ∫ f(kv) exp(−(kv)²/V_D²) d(kv)
//!
//! After u = kv/V_D the weight is exactly the Hermite weight, so Gauss-Hermite
//! is the primary rule. Every Gauss-Hermite result is checked against the rule
//! with twice the nodes. When the two disagree, which happens when the
//! integrand has poles close to the real axis relative to V_D, the average is
//! recomputed with step-halving trapezoid on the truncated window.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ValidatedConfig;
use crate::response::{response_at, EvalError, OpticalResponse};

/// Doppler widths below this are treated as the cold limit.
pub const COLD_LIMIT: f64 = 1.0e-6;

const MAX_GH_NODES: usize = 256;
const MIN_TRAPEZOID_PANELS: usize = 128;
const MAX_TRAPEZOID_PANELS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMethod {
    GaussHermite,
    AdaptiveTrapezoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    /// Gauss-Hermite node count; the verification rule uses twice as many.
    pub node_count: usize,
    /// Half-width of the trapezoid window in units of V_D.
    pub truncation: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: QuadratureMethod::GaussHermite,
            node_count: 64,
            truncation: 6.0,
            rel_tol: 1.0e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn check(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if !(8..=MAX_GH_NODES).contains(&self.node_count) {
            problems.push(format!(
                "node_count = {} must lie in [8, {MAX_GH_NODES}]",
                self.node_count
            ));
        }
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            problems.push(format!("truncation = {} must be > 0", self.truncation));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            problems.push(format!("rel_tol = {} must be > 0", self.rel_tol));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DopplerError {
    #[error("PoleInSupport: integrand singular at kv = {kv:.6e} ({detail})")]
    PoleInSupport { kv: f64, detail: String },
    #[error("QuadratureNotConverged: trapezoid refinement reached {panels} panels, last change {change:.3e}")]
    QuadratureNotConverged { panels: usize, change: f64 },
}

/// Quantities that can be averaged: a real vector space of complex components.
pub trait Averageable: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, w: f64) -> Self;
    /// Component-wise magnitude, used for the absolute part of tolerances.
    fn magnitude(self) -> Self;
    fn components(&self) -> Vec<C64>;
}

impl Averageable for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(self) -> Self {
        C64::new(self.norm(), 0.0)
    }
    fn components(&self) -> Vec<C64> {
        vec![*self]
    }
}

impl Averageable for OpticalResponse {
    fn zero() -> Self {
        OpticalResponse::default()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(self) -> Self {
        self.map(|z| C64::new(z.norm(), 0.0))
    }
    fn components(&self) -> Vec<C64> {
        self.as_array().to_vec()
    }
}

/// Sum in a fixed binary-tree order, independent of how values were produced.
pub fn pairwise_sum<T: Averageable>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a).add(pairwise_sum(b))
        }
    }
}

/// Gauss-Hermite rule for weight exp(−u²). Nodes in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    /// Hermite recurrence, weights √π times the squared first eigenvector
    /// components.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut d = vec![0.0; n];
        let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();
        let mut z0 = vec![0.0; n];
        z0[0] = 1.0;
        tridiagonal_ql(&mut d, &mut e, &mut z0);

        let mut pairs: Vec<(f64, f64)> = d
            .iter()
            .zip(&z0)
            .map(|(&x, &v)| (x, std::f64::consts::PI.sqrt() * v * v))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        // Enforce the exact reflection symmetry of the rule.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[i].0 - pairs[j].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (x, w);
            pairs[j] = (-x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `d` holds the diagonal (overwritten by eigenvalues), `e[i]` the coupling
/// between i and i+1. Only the first row of the eigenvector matrix is tracked.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z0: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let t = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * t;
                z0[i] = c * z0[i] - s * t;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Which rule produced an average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMethod {
    Cold,
    GaussHermite { nodes: usize },
    Trapezoid { panels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageReport<T> {
    pub value: T,
    pub method: AverageMethod,
}

/// Holds the quadrature rules for one [`QuadratureSpec`]. Build once and
/// reuse across a spectrum.
#[derive(Debug, Clone)]
pub struct DopplerAverager {
    spec: QuadratureSpec,
    primary: GaussHermite,
    check: GaussHermite,
}

impl DopplerAverager {
    pub fn new(spec: &QuadratureSpec) -> Self {
        Self {
            spec: spec.clone(),
            primary: GaussHermite::new(spec.node_count),
            check: GaussHermite::new(2 * spec.node_count),
        }
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn average<T, E, F>(&self, f: F, v_doppler: f64) -> Result<T, DopplerError>
    where
        T: Averageable,
        E: std::fmt::Display,
        F: Fn(f64) -> Result<T, E> + Sync,
    {
        self.average_with_report(f, v_doppler).map(|r| r.value)
    }

    pub fn average_with_report<T, E, F>(
        &self,
        f: F,
        v_doppler: f64,
    ) -> Result<AverageReport<T>, DopplerError>
    where
        T: Averageable,
        E: std::fmt::Display,
        F: Fn(f64) -> Result<T, E> + Sync,
    {
        if v_doppler < COLD_LIMIT {
            return Ok(AverageReport {
                value: eval(&f, 0.0)?,
                method: AverageMethod::Cold,
            });
        }
        match self.spec.method {
            QuadratureMethod::GaussHermite => {
                let (a, _) = gauss_hermite_sum(&self.primary, &f, v_doppler)?;
                let (b, l1) = gauss_hermite_sum(&self.check, &f, v_doppler)?;
                if agrees(&a, &b, &l1, self.spec.rel_tol) {
                    Ok(AverageReport {
                        value: b,
                        method: AverageMethod::GaussHermite {
                            nodes: self.check.nodes.len(),
                        },
                    })
                } else {
                    self.trapezoid(&f, v_doppler)
                }
            }
            QuadratureMethod::AdaptiveTrapezoid => self.trapezoid(&f, v_doppler),
        }
    }

    /// Re-evaluates with the rule an earlier adaptive call settled on, so that
    /// neighbouring detunings share one smooth discretization.
    pub fn average_fixed<T, E, F>(
        &self,
        f: F,
        v_doppler: f64,
        method: AverageMethod,
    ) -> Result<T, DopplerError>
    where
        T: Averageable,
        E: std::fmt::Display,
        F: Fn(f64) -> Result<T, E> + Sync,
    {
        if v_doppler < COLD_LIMIT {
            return eval(&f, 0.0);
        }
        match method {
            AverageMethod::Cold => eval(&f, 0.0),
            AverageMethod::GaussHermite { nodes } => {
                let built;
                let rule = if nodes == self.check.nodes.len() {
                    &self.check
                } else if nodes == self.primary.nodes.len() {
                    &self.primary
                } else {
                    built = GaussHermite::new(nodes);
                    &built
                };
                Ok(gauss_hermite_sum(rule, &f, v_doppler)?.0)
            }
            AverageMethod::Trapezoid { panels } => {
                let a = self.spec.truncation * v_doppler;
                let h = 2.0 * a / panels as f64;
                let norm = h / (v_doppler * std::f64::consts::PI.sqrt());
                let vals: Vec<T> = (0..=panels)
                    .into_par_iter()
                    .map(|j| {
                        let kv = -a + j as f64 * h;
                        let end = if j == 0 || j == panels { 0.5 } else { 1.0 };
                        Ok(eval(&f, kv)?.scale(end * norm * (-(kv / v_doppler).powi(2)).exp()))
                    })
                    .collect::<Result<_, DopplerError>>()?;
                Ok(pairwise_sum(&vals))
            }
        }
    }

    /// Step-halving trapezoid on [−T·V_D, T·V_D].
    pub fn trapezoid<T, E, F>(&self, f: &F, v_doppler: f64) -> Result<AverageReport<T>, DopplerError>
    where
        T: Averageable,
        E: std::fmt::Display,
        F: Fn(f64) -> Result<T, E> + Sync,
    {
        let a = self.spec.truncation * v_doppler;
        let norm = 1.0 / (v_doppler * std::f64::consts::PI.sqrt());
        let weighted = |kv: f64, end: bool| -> Result<T, DopplerError> {
            let g = norm * (-(kv / v_doppler).powi(2)).exp();
            Ok(eval(f, kv)?.scale(if end { 0.5 * g } else { g }))
        };

        let mut panels = 64usize;
        let mut h = 2.0 * a / panels as f64;
        let mut vals: Vec<T> = (0..=panels)
            .into_par_iter()
            .map(|j| weighted(-a + j as f64 * h, j == 0 || j == panels))
            .collect::<Result<_, _>>()?;
        let mut estimate = pairwise_sum(&vals).scale(h);
        let mut change = f64::INFINITY;
        loop {
            if panels >= MAX_TRAPEZOID_PANELS {
                return Err(DopplerError::QuadratureNotConverged { panels, change });
            }
            let fresh: Vec<T> = (0..panels)
                .into_par_iter()
                .map(|j| weighted(-a + (j as f64 + 0.5) * h, false))
                .collect::<Result<_, _>>()?;
            vals.extend(fresh);
            panels *= 2;
            h *= 0.5;
            let next = pairwise_sum(&vals).scale(h);
            let l1 = pairwise_sum(&vals.iter().map(|v| v.magnitude()).collect::<Vec<_>>()).scale(h);
            let converged = agrees(&estimate, &next, &l1, self.spec.rel_tol);
            change = relative_change(&estimate, &next, &l1);
            estimate = next;
            if converged && panels >= MIN_TRAPEZOID_PANELS {
                return Ok(AverageReport {
                    value: estimate,
                    method: AverageMethod::Trapezoid { panels },
                });
            }
        }
    }
}

/// Averages with a freshly built averager for the default rule.
pub fn doppler_average<T, E, F>(f: F, v_doppler: f64) -> Result<T, DopplerError>
where
    T: Averageable,
    E: std::fmt::Display,
    F: Fn(f64) -> Result<T, E> + Sync,
{
    DopplerAverager::new(&QuadratureSpec::default()).average(f, v_doppler)
}

/// Doppler-averaged χ_e, χ_m, ξ_EH, ξ_HE at the configured probe detuning.
/// The β coefficients are re-solved at every velocity class.
pub fn hot_response(
    cfg: &ValidatedConfig,
    averager: &DopplerAverager,
) -> Result<OpticalResponse, EvalError> {
    Ok(averager.average(|kv| response_at(cfg, kv), cfg.medium().v_doppler)?)
}

/// As [`hot_response`], also naming the rule that produced the value.
pub fn hot_response_with_report(
    cfg: &ValidatedConfig,
    averager: &DopplerAverager,
) -> Result<AverageReport<OpticalResponse>, EvalError> {
    Ok(averager.average_with_report(|kv| response_at(cfg, kv), cfg.medium().v_doppler)?)
}

/// Hot response with a prescribed rule.
pub fn hot_response_fixed(
    cfg: &ValidatedConfig,
    averager: &DopplerAverager,
    method: AverageMethod,
) -> Result<OpticalResponse, EvalError> {
    Ok(averager.average_fixed(|kv| response_at(cfg, kv), cfg.medium().v_doppler, method)?)
}

fn eval<T, E, F>(f: &F, kv: f64) -> Result<T, DopplerError>
where
    T: Averageable,
    E: std::fmt::Display,
    F: Fn(f64) -> Result<T, E>,
{
    match f(kv) {
        Ok(v) if v.components().iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(v),
        Ok(_) => Err(DopplerError::PoleInSupport {
            kv,
            detail: "non-finite integrand".into(),
        }),
        Err(e) => Err(DopplerError::PoleInSupport {
            kv,
            detail: e.to_string(),
        }),
    }
}

/// Returns the average and the average of component magnitudes.
fn gauss_hermite_sum<T, E, F>(rule: &GaussHermite, f: &F, v_doppler: f64) -> Result<(T, T), DopplerError>
where
    T: Averageable,
    E: std::fmt::Display,
    F: Fn(f64) -> Result<T, E> + Sync,
{
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let terms: Vec<T> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&u, &w)| Ok(eval(f, u * v_doppler)?.scale(w * inv_sqrt_pi)))
        .collect::<Result<_, DopplerError>>()?;
    let mags: Vec<T> = terms.iter().map(|t| t.magnitude()).collect();
    Ok((pairwise_sum(&terms), pairwise_sum(&mags)))
}

/// Differences at or below this fraction of the largest component's L1 norm
/// are rounding noise. A component that cancels analytically (a chirality whose
/// numerator vanishes for every velocity class) never converges relatively.
const ROUNDING_FLOOR: f64 = 1.0e-14;

fn noise_floor<T: Averageable>(l1: &T) -> f64 {
    ROUNDING_FLOOR * l1.components().iter().map(|m| m.re).fold(0.0, f64::max)
}

/// Largest component-wise relative change, ignoring differences below the
/// rounding floor.
fn relative_change<T: Averageable>(a: &T, b: &T, l1: &T) -> f64 {
    let floor = noise_floor(l1);
    a.components()
        .iter()
        .zip(b.components())
        .filter(|(x, y)| (*x - y).norm() > floor)
        .map(|(x, y)| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn agrees<T: Averageable>(a: &T, b: &T, l1: &T, rel_tol: f64) -> bool {
    let floor = noise_floor(l1);
    let (a, b) = (a.components(), b.components());
    a.iter()
        .zip(&b)
        .all(|(x, y)| (x - y).norm() <= rel_tol * y.norm() + floor)
}
