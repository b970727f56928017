//! Chiral optical response of a four-level double-lambda atomic medium.
//!
//! The pipeline runs from steady-state probe coherences ([`coherences`]) to
//! susceptibilities and chirality coefficients ([`response`]), optionally
//! averaged over a Maxwellian velocity distribution ([`doppler`]), then to
//! refractive and group index ([`optics`]) and Gaussian pulse propagation
//! ([`pulse`]). All frequencies are in units of the reference decay rate γ.
//! [`cli`] holds the figure presets, κ_e calibration and table output used by
//! the `chiral-eit` binary.

pub mod cli;
pub mod coherences;
pub mod doppler;
pub mod linalg;
pub mod optics;
pub mod params;
pub mod pulse;
pub mod response;

pub use num_complex::Complex64 as C64;
