//! Gaussian probe pulses through the medium.
//!
//! Conventions: E(ω) = (1/√2π) ∫ E(t) e^{−iωt} dt and
//! E(t) = (1/√2π) ∫ E(ω) e^{+iωt} dω. Traces hold envelopes relative to the
//! carrier ω₀, so a time trace is a(t) = E(t)e^{−iω₀t} and a frequency trace is
//! indexed by u = ω − ω₀. All pulse quantities are SI (s, rad/s, m).
//!
//! A probe offset u corresponds to the probe detuning Δ_p = u/γ.
//!
//! Input:  a_in(t) = exp(−t²/τ₀²) e^{iδt},  A_in(u) = τ₀/√2 · exp(−(u−δ)²τ₀²/4).
//!
//! First-order medium: H₁(u) = exp(−iL[n₀ω₀/c + n₀u/c + ½G_vd u²]), whose exact
//! output is the closed form in [`propagate_analytic`] and, in the frequency
//! domain, [`output_spectrum`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doppler::DopplerAverager;
use crate::optics::{group_index_at, group_index_slope, track_branch, OpticsError};
use crate::params::{ValidatedConfig, SPEED_OF_LIGHT};
use crate::response::{spectrum_with, Mode};

/// Relative spectral amplitude allowed at the edge of the frequency window.
pub const WINDOW_EDGE_TOL: f64 = 1.0e-8;
/// Fraction of trace energy allowed in the outer sixteenth of the window.
pub const ALIASING_TOL: f64 = 1.0e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("WindowTooNarrow: spectrum at window edge is {ratio:.3e} of its peak")]
    WindowTooNarrow { ratio: f64 },
    #[error("AliasingDetected: {fraction:.3e} of the output energy lies at the window edge")]
    AliasingDetected { fraction: f64 },
    #[error("FlatTrace: no unique intensity peak")]
    FlatTrace,
    #[error("traces are sampled with different steps or domains")]
    GridMismatch,
    #[error("invalid pulse specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSpec {
    /// Input 1/e half-width (s).
    pub tau_0: f64,
    /// Upshift of the pulse centre from the carrier (rad/s).
    pub delta: f64,
    /// Carrier frequency (rad/s).
    pub omega_0: f64,
    /// Minimum sample count; raised to keep at least 16 samples per τ₀.
    pub samples: usize,
    /// Minimum time window in units of τ₀.
    pub window_tau: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            tau_0: 5.50e-9,
            delta: 2.0e9,
            omega_0: 1.0e4 * 1.0e9,
            samples: 1 << 14,
            window_tau: 64.0,
        }
    }
}

impl PulseSpec {
    /// Carrier at ω₁₄ of the given medium.
    pub fn for_medium(cfg: &ValidatedConfig) -> Self {
        Self {
            omega_0: cfg.medium().omega_14 * cfg.medium().gamma_unit,
            ..Self::default()
        }
    }

    /// Spectral width parameter Δw = 2π/τ₀.
    pub fn delta_w(&self) -> f64 {
        2.0 * PI / self.tau_0
    }

    pub fn check(&self) -> Result<(), PulseError> {
        let mut bad = Vec::new();
        if !(self.tau_0 > 0.0 && self.tau_0.is_finite()) {
            bad.push(format!("tau_0 = {} must be > 0", self.tau_0));
        }
        if !self.delta.is_finite() {
            bad.push("delta must be finite".to_string());
        }
        if !(self.omega_0 > 0.0 && self.omega_0.is_finite()) {
            bad.push(format!("omega_0 = {} must be > 0", self.omega_0));
        }
        if self.samples < 64 {
            bad.push(format!("samples = {} must be >= 64", self.samples));
        }
        if !(self.window_tau > 0.0 && self.window_tau.is_finite()) {
            bad.push(format!("window_tau = {} must be > 0", self.window_tau));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(PulseError::InvalidSpec(bad.join("; ")))
        }
    }
}

/// Uniform time grid t_j = t0 + j·dt and its conjugate frequency grid
/// u_k = u0 + k·du with du = 2π/(n·dt), u0 = −(n/2)·du.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseGrid {
    pub n: usize,
    pub t0: f64,
    pub dt: f64,
}

impl PulseGrid {
    /// Window centred on `centre`, at least `window` wide, with n a power of
    /// two and at least 16 samples per τ₀.
    pub fn new(ps: &PulseSpec, centre: f64, window: f64) -> Self {
        let window = window.max(ps.window_tau * ps.tau_0);
        let mut n = ps.samples.next_power_of_two();
        while window / n as f64 > ps.tau_0 / 16.0 {
            n *= 2;
        }
        let dt = window / n as f64;
        Self {
            n,
            t0: centre - 0.5 * n as f64 * dt,
            dt,
        }
    }

    /// Covers both the input pulse at t = 0 and the first-order output.
    pub fn for_propagation(ps: &PulseSpec, n0: f64, g_vd: f64, length: f64) -> Self {
        Self::covering(ps, &[(n0, g_vd)], length)
    }

    /// Covers the input pulse and the first-order outputs for every (n₀, G_vd).
    pub fn covering(ps: &PulseSpec, media: &[(f64, f64)], length: f64) -> Self {
        let (mut lo, mut hi) = (-12.0 * ps.tau_0, 12.0 * ps.tau_0);
        for &(n0, g_vd) in media {
            let peak = first_order_peak_time(ps, n0, g_vd, length);
            let width = ps.tau_0.max(output_half_width(ps, g_vd, length));
            lo = lo.min(peak - 12.0 * width);
            hi = hi.max(peak + 12.0 * width);
        }
        Self::new(ps, 0.5 * (lo + hi), hi - lo)
    }

    pub fn du(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt)
    }

    pub fn u0(&self) -> f64 {
        -(self.n as f64 / 2.0) * self.du()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.t0 + j as f64 * self.dt).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        let (u0, du) = (self.u0(), self.du());
        (0..self.n).map(|k| u0 + k as f64 * du).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

/// Sampled complex envelope; sample j sits at origin + j·step.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrace {
    pub domain: Domain,
    pub origin: f64,
    pub step: f64,
    pub samples: Vec<C64>,
    pub n0: f64,
    pub g_vd: f64,
}

impl PulseTrace {
    pub fn axis(&self) -> Vec<f64> {
        (0..self.samples.len())
            .map(|j| self.origin + j as f64 * self.step)
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.step.abs()
    }

    /// |a|² scaled to a unit maximum.
    pub fn normalized_intensity(&self) -> Vec<f64> {
        let i: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        let m = i.iter().cloned().fold(0.0, f64::max);
        if m > 0.0 {
            i.iter().map(|x| x / m).collect()
        } else {
            i
        }
    }
}

/// Relative L2 distance between two sample vectors.
pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Relative L2 distance after scaling each vector to unit L2 norm and
/// removing the best common phase.
pub fn normalized_l2(a: &[C64], b: &[C64]) -> f64 {
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x * phase / na - y / nb).norm_sqr())
        .sum();
    num.sqrt()
}

/// a_in(t) on the time grid.
pub fn input_time(ps: &PulseSpec, grid: &PulseGrid) -> PulseTrace {
    let samples = grid
        .times()
        .iter()
        .map(|&t| C64::from_polar((-(t / ps.tau_0).powi(2)).exp(), ps.delta * t))
        .collect();
    PulseTrace {
        domain: Domain::Time,
        origin: grid.t0,
        step: grid.dt,
        samples,
        n0: 1.0,
        g_vd: 0.0,
    }
}

fn input_amplitude(ps: &PulseSpec, u: f64) -> f64 {
    ps.tau_0 / 2f64.sqrt() * (-((u - ps.delta) * ps.tau_0).powi(2) / 4.0).exp()
}

/// A_in(u) on the frequency grid; the window must reach down to 10⁻⁸ of the peak.
pub fn input_spectrum(ps: &PulseSpec, grid: &PulseGrid) -> Result<PulseTrace, PulseError> {
    ps.check()?;
    let freqs = grid.freqs();
    let peak = ps.tau_0 / 2f64.sqrt();
    let (lo, hi) = (freqs[0], freqs[grid.n - 1] + grid.du());
    if !(lo..=hi).contains(&ps.delta) {
        return Err(PulseError::WindowTooNarrow { ratio: 1.0 });
    }
    let edge = input_amplitude(ps, lo).max(input_amplitude(ps, hi));
    if edge > WINDOW_EDGE_TOL * peak {
        return Err(PulseError::WindowTooNarrow { ratio: edge / peak });
    }
    Ok(PulseTrace {
        domain: Domain::Frequency,
        origin: grid.u0(),
        step: grid.du(),
        samples: freqs.iter().map(|&u| C64::new(input_amplitude(ps, u), 0.0)).collect(),
        n0: 1.0,
        g_vd: 0.0,
    })
}

/// Discrete approximation of the forward transform of a time trace.
pub fn to_frequency(trace: &PulseTrace, grid: &PulseGrid) -> PulseTrace {
    assert_eq!(trace.domain, Domain::Time);
    let n = grid.n;
    let (u0, du, t0, dt) = (grid.u0(), grid.du(), trace.origin, trace.step);
    let mut buf: Vec<C64> = trace
        .samples
        .iter()
        .enumerate()
        .map(|(j, a)| a * C64::from_polar(1.0, -u0 * j as f64 * dt))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = dt / (2.0 * PI).sqrt();
    let samples = buf
        .iter()
        .enumerate()
        .map(|(k, z)| z * C64::from_polar(scale, -(u0 + k as f64 * du) * t0))
        .collect();
    PulseTrace {
        domain: Domain::Frequency,
        origin: u0,
        step: du,
        samples,
        n0: trace.n0,
        g_vd: trace.g_vd,
    }
}

/// Discrete approximation of the inverse transform of a frequency trace.
pub fn to_time(spectrum: &PulseTrace, grid: &PulseGrid) -> PulseTrace {
    assert_eq!(spectrum.domain, Domain::Frequency);
    let n = grid.n;
    let (u0, du, t0, dt) = (spectrum.origin, spectrum.step, grid.t0, grid.dt);
    let mut buf: Vec<C64> = spectrum
        .samples
        .iter()
        .enumerate()
        .map(|(k, a)| a * C64::from_polar(1.0, k as f64 * du * t0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = du / (2.0 * PI).sqrt();
    let samples = buf
        .iter()
        .enumerate()
        .map(|(j, z)| z * C64::from_polar(scale, u0 * (t0 + j as f64 * dt)))
        .collect();
    PulseTrace {
        domain: Domain::Time,
        origin: t0,
        step: dt,
        samples,
        n0: spectrum.n0,
        g_vd: spectrum.g_vd,
    }
}

/// Group index and group-velocity dispersion at the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionCoefficients {
    /// N_g at Δ_p = 0.
    pub n0: f64,
    /// ∂N_g/∂Δ_p at Δ_p = 0 (units of 1/γ).
    pub dng_ddelta: f64,
    /// G_vd = ∂N_g/(c ∂ω) (s²/m).
    pub g_vd: f64,
}

impl DispersionCoefficients {
    /// G_vd expressed as a multiple of 1/c with ω in units of γ, the form
    /// quoted in figure captions.
    pub fn g_vd_times_c(&self) -> f64 {
        self.dng_ddelta
    }

    /// First-order group index at offset u from the carrier.
    pub fn group_index_at_offset(&self, u: f64) -> f64 {
        self.n0 + SPEED_OF_LIGHT * self.g_vd * u
    }
}

pub fn dispersion_coefficients(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
) -> Result<DispersionCoefficients, PulseError> {
    let (p, slope) = group_index_slope(cfg, mode, averager, 0.0)?;
    Ok(DispersionCoefficients {
        n0: p.n_g,
        dng_ddelta: slope,
        g_vd: slope / (SPEED_OF_LIGHT * cfg.medium().gamma_unit),
    })
}

/// Peak arrival time of the first-order output: L(n₀ + cG_vdδ)/c.
pub fn first_order_peak_time(ps: &PulseSpec, n0: f64, g_vd: f64, length: f64) -> f64 {
    length * (n0 / SPEED_OF_LIGHT + g_vd * ps.delta)
}

/// 1/e half-width of the first-order output amplitude: |τ₀² + 2iG_vdL|/τ₀.
pub fn output_half_width(ps: &PulseSpec, g_vd: f64, length: f64) -> f64 {
    C64::new(ps.tau_0 * ps.tau_0, 2.0 * g_vd * length).norm() / ps.tau_0
}

/// Closed-form first-order output envelope:
/// a_out(t) = τ₀/√(τ₀² + 2iLG_vd) · exp[(δτ₀² + 2is)²/(4(τ₀² + 2iLG_vd)) − δ²τ₀²/4 − iω₀n₀L/c],
/// with s = t − n₀L/c.
pub fn propagate_analytic(ps: &PulseSpec, grid: &PulseGrid, n0: f64, g_vd: f64, length: f64) -> PulseTrace {
    let tau2 = ps.tau_0 * ps.tau_0;
    let d = C64::new(tau2, 2.0 * length * g_vd);
    let pref = ps.tau_0 / d.sqrt();
    let carrier_phase = -ps.omega_0 * n0 * length / SPEED_OF_LIGHT;
    let samples = grid
        .times()
        .iter()
        .map(|&t| {
            let s = t - n0 * length / SPEED_OF_LIGHT;
            let b = C64::new(ps.delta * tau2, 2.0 * s);
            let expo = b * b / (d * 4.0) - ps.delta * ps.delta * tau2 / 4.0;
            if expo.re < -745.0 {
                C64::new(0.0, 0.0)
            } else {
                pref * (expo + C64::new(0.0, carrier_phase)).exp()
            }
        })
        .collect();
    PulseTrace {
        domain: Domain::Time,
        origin: grid.t0,
        step: grid.dt,
        samples,
        n0,
        g_vd,
    }
}

/// Closed-form first-order output spectrum,
/// A_out(u) = (√2π/Δw) exp[−Q₁²/(4c(2iLcG_vd + 4cπ²/Δw²))]
///            × exp[¼(−4π²δ²/Δw² + Q₂ − 4iω₀Ln₀/c)],
/// Q₁ = 2iLucG_vd + 4cπ²(u − δ)/Δw² + 2iLn₀,
/// Q₂ = [4cπ²δ/Δw² − 2iLn₀]² / (c(2iLcG_vd + 4cπ²/Δw²)).
pub fn output_spectrum(ps: &PulseSpec, grid: &PulseGrid, n0: f64, g_vd: f64, length: f64) -> PulseTrace {
    let c = SPEED_OF_LIGHT;
    let dw = ps.delta_w();
    let k = 4.0 * PI * PI / (dw * dw);
    let den = C64::new(c * c * k, 2.0 * length * c * c * g_vd);
    let i = C64::new(0.0, 1.0);
    let q2 = {
        let t = C64::new(c * k * ps.delta, -2.0 * length * n0);
        t * t / den
    };
    let pref = 2f64.sqrt() * PI / dw;
    let tail = (C64::new(-k * ps.delta * ps.delta, 0.0) + q2 - i * (4.0 * ps.omega_0 * length * n0 / c)) * 0.25;
    let samples = grid
        .freqs()
        .iter()
        .map(|&u| {
            let q1 = i * (2.0 * length * u * c * g_vd) + c * k * (u - ps.delta) + i * (2.0 * length * n0);
            let expo = -q1 * q1 / (den * 4.0) + tail;
            if expo.re < -745.0 {
                C64::new(0.0, 0.0)
            } else {
                pref * expo.exp()
            }
        })
        .collect();
    PulseTrace {
        domain: Domain::Frequency,
        origin: grid.u0(),
        step: grid.du(),
        samples,
        n0,
        g_vd,
    }
}

/// H₁(u) = exp(−iL[n₀ω₀/c + n₀u/c + ½G_vd u²]).
pub fn first_order_transfer(ps: &PulseSpec, n0: f64, g_vd: f64, length: f64) -> impl Fn(f64) -> C64 + Copy {
    let omega_0 = ps.omega_0;
    move |u: f64| {
        let k = n0 * (omega_0 + u) / SPEED_OF_LIGHT + 0.5 * g_vd * u * u;
        C64::from_polar(1.0, -k * length)
    }
}

/// Vacuum transfer exp(−iωL/c).
pub fn vacuum_transfer(ps: &PulseSpec, length: f64) -> impl Fn(f64) -> C64 + Copy {
    first_order_transfer(ps, 1.0, 0.0, length)
}

/// E_out = inverse transform of A_in(u)·H(u), evaluated by FFT.
pub fn propagate_numeric(
    ps: &PulseSpec,
    grid: &PulseGrid,
    transfer: impl Fn(f64) -> C64,
) -> Result<PulseTrace, PulseError> {
    let input = input_spectrum(ps, grid)?;
    let freqs = grid.freqs();
    let out_spec = PulseTrace {
        samples: input
            .samples
            .iter()
            .zip(&freqs)
            .map(|(a, &u)| if a.re == 0.0 { *a } else { a * transfer(u) })
            .collect(),
        ..input
    };
    let out = to_time(&out_spec, grid);
    let fraction = edge_energy_fraction(&out.samples);
    if fraction > ALIASING_TOL {
        return Err(PulseError::AliasingDetected { fraction });
    }
    Ok(out)
}

fn edge_energy_fraction(samples: &[C64]) -> f64 {
    let n = samples.len();
    let band = (n / 32).max(1);
    let total: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = samples[..band]
        .iter()
        .chain(&samples[n - band..])
        .map(|z| z.norm_sqr())
        .sum();
    edge / total
}

/// Transfer samples from the full complex index n(Δ_p = u/γ).
///
/// The attenuation exp(−Im(n)ωL/c) is taken relative to its value at the
/// pulse centre u = δ; absolute values underflow for cell-length media.
/// Offsets where A_in is below 10⁻²⁰ of its peak get H = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTransfer {
    pub freqs: Vec<f64>,
    pub transfer: Vec<C64>,
    /// Im(n)·ω·L/c at the pulse centre, removed from every sample.
    pub reference_attenuation: f64,
}

impl ModelTransfer {
    pub fn lookup(&self, grid: &PulseGrid) -> impl Fn(f64) -> C64 + '_ {
        let (u0, du) = (grid.u0(), grid.du());
        move |u: f64| {
            let k = ((u - u0) / du).round() as usize;
            self.transfer.get(k).copied().unwrap_or(C64::new(0.0, 0.0))
        }
    }
}

pub fn model_transfer(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    ps: &PulseSpec,
    grid: &PulseGrid,
) -> Result<ModelTransfer, PulseError> {
    let freqs = grid.freqs();
    let gamma = cfg.medium().gamma_unit;
    let length = cfg.medium().length_l;
    let band = 2.0 * (20.0 * 10f64.ln()).sqrt() / ps.tau_0 * 1.5;
    let active: Vec<usize> = (0..freqs.len())
        .filter(|&k| (freqs[k] - ps.delta).abs() <= band)
        .collect();
    let detunings: Vec<f64> = active.iter().map(|&k| freqs[k] / gamma).collect();
    let spec = spectrum_with(cfg, &detunings, mode, averager)
        .map_err(|e| PulseError::InvalidSpec(e.to_string()))?;
    let n = track_branch(&spec)?;
    let centre = active
        .iter()
        .enumerate()
        .min_by(|a, b| (freqs[*a.1] - ps.delta).abs().total_cmp(&(freqs[*b.1] - ps.delta).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let att = |i: usize| n[i].im * (ps.omega_0 + freqs[active[i]]) * length / SPEED_OF_LIGHT;
    let reference_attenuation = if n.is_empty() { 0.0 } else { att(centre) };
    let mut transfer = vec![C64::new(0.0, 0.0); freqs.len()];
    for (i, &k) in active.iter().enumerate() {
        let phase = -n[i].re * (ps.omega_0 + freqs[k]) * length / SPEED_OF_LIGHT;
        transfer[k] = C64::from_polar((reference_attenuation - att(i)).min(700.0).exp(), phase);
    }
    Ok(ModelTransfer {
        freqs,
        transfer,
        reference_attenuation,
    })
}

/// Ratio of the third-order to the second-order dispersion phase over the
/// pulse bandwidth 2/τ₀, from group indices on a local stencil around Δ_p = 0.
pub fn third_order_ratio(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    ps: &PulseSpec,
) -> Result<f64, PulseError> {
    let s = 0.05;
    let ng = |d: f64| group_index_at(cfg, mode, averager, d).map(|p| p.n_g);
    let (m, z, p) = (ng(-s)?, ng(0.0)?, ng(s)?);
    let d1 = (p - m) / (2.0 * s);
    let d2 = (p - 2.0 * z + m) / (s * s);
    let bandwidth = 2.0 / (ps.tau_0 * cfg.medium().gamma_unit);
    Ok((d2 * bandwidth / (3.0 * d1)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseMetrics {
    /// Output peak position minus input peak position (s or rad/s).
    pub peak_shift: f64,
    /// RMS width of |a_out|² over RMS width of |a_in|².
    pub width_ratio: f64,
    /// 1 − peak normalized cross-correlation of the output intensity with the
    /// input intensity stretched by `width_ratio`.
    pub distortion: f64,
    /// 1 − peak normalized cross-correlation with the unstretched input.
    pub raw_distortion: f64,
}

/// Sub-sample peak position from a parabola through ln|a|² at the maximum.
pub fn peak_position(trace: &PulseTrace) -> Result<f64, PulseError> {
    let i: Vec<f64> = trace.samples.iter().map(|z| z.norm_sqr()).collect();
    let (k, &m) = i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(PulseError::FlatTrace)?;
    let lo = i.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(m > 0.0) || m - lo <= 1e-12 * m {
        return Err(PulseError::FlatTrace);
    }
    let ties = i
        .iter()
        .enumerate()
        .filter(|(j, &v)| v == m && (*j as isize - k as isize).abs() > 1)
        .count();
    if ties > 0 {
        return Err(PulseError::FlatTrace);
    }
    let mut x = k as f64;
    if k > 0 && k + 1 < i.len() && i[k - 1] > 0.0 && i[k + 1] > 0.0 {
        let (a, b, c) = (i[k - 1].ln(), m.ln(), i[k + 1].ln());
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            x += 0.5 * (a - c) / den;
        }
    }
    Ok(trace.origin + x * trace.step)
}

fn moments(trace: &PulseTrace) -> (f64, f64) {
    let axis = trace.axis();
    let w: Vec<f64> = trace.samples.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    let mean = axis.iter().zip(&w).map(|(x, v)| x * v).sum::<f64>() / total;
    let var = axis.iter().zip(&w).map(|(x, v)| (x - mean).powi(2) * v).sum::<f64>() / total;
    (mean, var.sqrt())
}

/// Linear interpolation of a sampled intensity, zero outside the trace.
fn sample_intensity(trace: &PulseTrace, intensity: &[f64], x: f64) -> f64 {
    let p = (x - trace.origin) / trace.step;
    if p < 0.0 || p > (intensity.len() - 1) as f64 {
        return 0.0;
    }
    let j = p.floor() as usize;
    if j + 1 >= intensity.len() {
        return intensity[intensity.len() - 1];
    }
    let f = p - j as f64;
    intensity[j] * (1.0 - f) + intensity[j + 1] * f
}

/// Best normalized correlation of the output intensity with the input
/// intensity mapped through x ↦ centre_in + (x − centre_out − lag)/scale.
fn best_correlation(
    input: &PulseTrace,
    output: &PulseTrace,
    centre_in: f64,
    centre_out: f64,
    scale: f64,
) -> f64 {
    let i_in: Vec<f64> = input.samples.iter().map(|z| z.norm_sqr()).collect();
    let i_out: Vec<f64> = output.samples.iter().map(|z| z.norm_sqr()).collect();
    let x_out = output.axis();
    let norm_out = i_out.iter().map(|v| v * v).sum::<f64>().sqrt();
    let corr = |lag: f64| -> f64 {
        let mut dot = 0.0;
        let mut nn = 0.0;
        for (x, vo) in x_out.iter().zip(&i_out) {
            let vi = sample_intensity(input, &i_in, centre_in + (x - centre_out - lag) / scale);
            dot += vo * vi;
            nn += vi * vi;
        }
        if nn == 0.0 {
            0.0
        } else {
            dot / (norm_out * nn.sqrt())
        }
    };
    let step = output.step;
    let (mut best_lag, mut best) = (0.0, corr(0.0));
    for j in -8..=8 {
        let lag = j as f64 * step;
        let c = corr(lag);
        if c > best {
            best = c;
            best_lag = lag;
        }
    }
    // Golden-section refinement around the best sampled lag.
    let (mut a, mut b) = (best_lag - step, best_lag + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let (c1, c2) = (b - g * (b - a), a + g * (b - a));
        if corr(c1) > corr(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    best.max(corr(0.5 * (a + b))).min(1.0)
}

pub fn pulse_metrics(input: &PulseTrace, output: &PulseTrace) -> Result<PulseMetrics, PulseError> {
    if input.domain != output.domain
        || (input.step - output.step).abs() > 1e-12 * input.step.abs()
        || input.samples.len() != output.samples.len()
    {
        return Err(PulseError::GridMismatch);
    }
    let peak_in = peak_position(input)?;
    let peak_out = peak_position(output)?;
    let (mean_in, rms_in) = moments(input);
    let (mean_out, rms_out) = moments(output);
    let width_ratio = rms_out / rms_in;
    let shaped = best_correlation(input, output, mean_in, mean_out, width_ratio);
    let raw = best_correlation(input, output, mean_in, mean_out, 1.0);
    Ok(PulseMetrics {
        peak_shift: peak_out - peak_in,
        width_ratio,
        distortion: 1.0 - shaped,
        raw_distortion: 1.0 - raw,
    })
}
