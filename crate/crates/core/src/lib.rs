//! Periodic-NFT fiber transmission, end to end: exact finite-gap NLSE signal
//! synthesis from a designed nonlinear spectrum, split-step propagation through
//! an amplified multi-span link, and data recovery via the forward periodic NFT.
//!
//! Dimensionless NLSE convention used throughout:
//!
//! ```text
//! i psi_z + 1/2 psi_tt + |psi|^2 psi = 0
//! ```
//!
//! paired with the Zakharov-Shabat scattering problem
//! `v_t = [[-i lambda, q], [-conj(q), i lambda]] v`, so the main spectrum of a
//! constant potential `q = A` contains `lambda = iA`.

pub mod channel;
pub mod fft;
pub mod finite_gap;
pub mod pnft_forward;
pub mod riemann_theta;
pub mod rx_dsp;
pub mod signal_design;

pub use num_complex::Complex64;

/// Shorthand used across the crate.
pub type C64 = num_complex::Complex64;
