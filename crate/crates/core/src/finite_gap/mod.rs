//! Finite-gap (algebro-geometric) solutions of the focusing NLSE: from a main
//! spectrum in the upper half plane to the theta-ratio solution
//!
//! ```text
//! psi(z,t) = U exp(i(k0 z + Omega0 t)) theta((k z + Omega t + delta)/2pi | tau)
//!                                    / theta((k z + Omega t)/2pi | tau)
//! ```
//!
//! with every constant computed from loop integrals over the hyperelliptic
//! curve `p^2 = prod (lambda_k - lambda)` and pinned against the NLSE itself.

mod curve;
mod evaluate;
mod params;
mod quadrature;
mod residual;

pub use curve::{build_curve, Cut, HyperellipticCurve};
pub use evaluate::{evaluate_solution, evaluate_solution_grid, SolutionEvaluator};
pub use params::compute_params;
pub use quadrature::QuadratureConfig;
pub use residual::{nlse_residual, ResidualGrid};

use crate::riemann_theta::{PeriodMatrix, ThetaError};
use crate::C64;
use thiserror::Error;

pub const DEFAULT_SEPARATION_FLOOR: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FiniteGapError {
    #[error("invalid main spectrum: {detail}")]
    InvalidSpectrum { detail: String },
    #[error("branch cut layout failed: {detail}; increase the point separation")]
    CrossingCuts { detail: String },
    #[error("degenerate spectrum: {detail}")]
    DegenerateSpectrum { detail: String },
    #[error("loop-integral quadrature did not converge: achieved residual {residual:e}")]
    QuadratureNonConvergence { residual: f64 },
    #[error("frequencies tied within 1e-12; the constellation must avoid commensurate pairs")]
    FrequencyTie,
    #[error("quasi-periodization requires genus 2, got {got}")]
    NotGenusTwo { got: usize },
    #[error("no finite amplitude period: dominant frequency is zero")]
    NoFinitePeriod,
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

/// The g+1 upper-half-plane points defining a symbol's nonlinear spectrum
/// (complex conjugates implied).
#[derive(Debug, Clone, PartialEq)]
pub struct MainSpectrum {
    points: Vec<C64>,
    separation_floor: f64,
}

impl MainSpectrum {
    pub fn new(points: Vec<C64>) -> Result<Self, FiniteGapError> {
        Self::with_separation_floor(points, DEFAULT_SEPARATION_FLOOR)
    }

    pub fn with_separation_floor(points: Vec<C64>, floor: f64) -> Result<Self, FiniteGapError> {
        if points.is_empty() {
            return Err(FiniteGapError::InvalidSpectrum { detail: "empty spectrum".into() });
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.im > 0.0) {
                return Err(FiniteGapError::InvalidSpectrum {
                    detail: format!("point {i} = {p} is not in the open upper half plane"),
                });
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = (points[i] - points[j]).norm();
                if d < floor {
                    return Err(FiniteGapError::InvalidSpectrum {
                        detail: format!(
                            "points {} and {} are {d:.4} apart, below the separation floor {floor}",
                            points[i], points[j]
                        ),
                    });
                }
            }
        }
        Ok(Self { points, separation_floor: floor })
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn genus(&self) -> usize {
        self.points.len() - 1
    }

    pub fn separation_floor(&self) -> f64 {
        self.separation_floor
    }

    /// Spectrum mirrored about the imaginary axis (`lambda -> -conj(lambda)`).
    pub fn mirrored(&self) -> Self {
        let pts = self.points.iter().map(|p| C64::new(-p.re, p.im)).collect();
        Self { points: pts, separation_floor: self.separation_floor }
    }

    /// Horizontal (Galilean) shift of every point by a real offset.
    pub fn shifted(&self, sigma: f64) -> Self {
        let pts = self.points.iter().map(|p| p + sigma).collect();
        Self { points: pts, separation_floor: self.separation_floor }
    }
}

/// All constants of the theta-ratio solution for one spectrum.
///
/// `delta` is stored in the phase units of the solution formula (the theta
/// argument receives `delta / 2pi`); the denominator phase is identically
/// zero, which is the representation with the auxiliary spectrum eliminated.
#[derive(Debug, Clone)]
pub struct FiniteGapParams {
    pub amplitude: C64,
    pub omega0: f64,
    pub k0: f64,
    pub omega: Vec<f64>,
    pub kvec: Vec<f64>,
    pub delta: Vec<C64>,
    pub tau: PeriodMatrix,
    /// Which frequency index quasi-periodization zeroed, if any.
    pub zeroed: Option<usize>,
}

impl FiniteGapParams {
    pub fn genus(&self) -> usize {
        self.omega.len()
    }

    /// Index of the largest-magnitude frequency.
    pub fn dominant_frequency_index(&self) -> Option<usize> {
        (0..self.omega.len()).max_by(|&a, &b| {
            self.omega[a]
                .abs()
                .partial_cmp(&self.omega[b].abs())
                .unwrap()
        })
    }

    /// Amplitude period 2 pi / |Omega_dominant| of the (quasi-)periodic signal.
    pub fn amplitude_period(&self) -> Result<f64, FiniteGapError> {
        match self.dominant_frequency_index() {
            None => Ok(1.0), // plane wave: any window works
            Some(j) => {
                let w = self.omega[j].abs();
                if w < 1e-12 {
                    return Err(FiniteGapError::NoFinitePeriod);
                }
                Ok(2.0 * std::f64::consts::PI / w)
            }
        }
    }

    /// NLSE scaling symmetry `psi -> a psi(a^2 z, a t)`: frequencies scale by
    /// `a`, wavenumbers by `a^2`, the amplitude by `a`; tau and delta are
    /// untouched.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            amplitude: self.amplitude * a,
            omega0: self.omega0 * a,
            k0: self.k0 * a * a,
            omega: self.omega.iter().map(|w| w * a).collect(),
            kvec: self.kvec.iter().map(|k| k * a * a).collect(),
            delta: self.delta.clone(),
            tau: self.tau.clone(),
            zeroed: self.zeroed,
        }
    }
}

/// Sets the smaller of the two frequencies of a genus-2 solution exactly to
/// zero, yielding the finite-period approximation of the quasi-periodic
/// solution. Errors if the magnitudes tie within 1e-12.
pub fn quasiperiodize(params: &FiniteGapParams) -> Result<FiniteGapParams, FiniteGapError> {
    if params.genus() != 2 {
        return Err(FiniteGapError::NotGenusTwo { got: params.genus() });
    }
    let (a0, a1) = (params.omega[0].abs(), params.omega[1].abs());
    if (a0 - a1).abs() < 1e-12 {
        return Err(FiniteGapError::FrequencyTie);
    }
    let small = if a0 < a1 { 0 } else { 1 };
    let mut out = params.clone();
    out.omega[small] = 0.0;
    out.zeroed = Some(small);
    Ok(out)
}
