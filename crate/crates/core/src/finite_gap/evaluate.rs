//! Evaluation of the theta-ratio solution, with the lattice sums cached per
//! parameter set (the imaginary part of the theta arguments is constant in z
//! and t, so one ellipsoid serves a whole grid).

use super::{FiniteGapError, FiniteGapParams};
use crate::riemann_theta::ThetaSeries;
use crate::C64;

pub struct SolutionEvaluator<'a> {
    params: &'a FiniteGapParams,
    series_num: Option<ThetaSeries>,
    series_den: Option<ThetaSeries>,
    delta_hat: Vec<C64>,
    w_t: Vec<f64>,
    w_z: Vec<f64>,
}

impl<'a> SolutionEvaluator<'a> {
    pub fn new(params: &'a FiniteGapParams, tol: f64) -> Result<Self, FiniteGapError> {
        let g = params.genus();
        let two_pi = 2.0 * std::f64::consts::PI;
        let delta_hat: Vec<C64> = params.delta.iter().map(|d| d / two_pi).collect();
        let (series_num, series_den) = if g > 0 {
            let im_num: Vec<C64> = delta_hat.clone();
            let im_den = vec![C64::new(0.0, 0.0); g];
            (
                Some(ThetaSeries::new(&params.tau, &im_num, tol)?),
                Some(ThetaSeries::new(&params.tau, &im_den, tol)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            params,
            series_num,
            series_den,
            delta_hat,
            w_t: params.omega.iter().map(|w| w / two_pi).collect(),
            w_z: params.kvec.iter().map(|k| k / two_pi).collect(),
        })
    }

    fn u_den(&self, z: f64, t: f64) -> Vec<C64> {
        (0..self.params.genus())
            .map(|j| C64::new(self.w_t[j] * t + self.w_z[j] * z, 0.0))
            .collect()
    }

    /// psi(z, t).
    pub fn eval(&self, z: f64, t: f64) -> Result<C64, FiniteGapError> {
        let p = self.params;
        let carrier = C64::new(0.0, p.k0 * z + p.omega0 * t);
        if p.genus() == 0 {
            return Ok(p.amplitude * carrier.exp());
        }
        let u = self.u_den(z, t);
        let un: Vec<C64> = u.iter().zip(&self.delta_hat).map(|(a, d)| a + d).collect();
        let ln = self.series_num.as_ref().unwrap().eval_log(&un)?;
        let ld = self.series_den.as_ref().unwrap().eval_log(&u)?;
        Ok(p.amplitude * (carrier + ln - ld).exp())
    }

    /// One row of samples at fixed z.
    pub fn eval_row(&self, z: f64, ts: &[f64]) -> Result<Vec<C64>, FiniteGapError> {
        ts.iter().map(|&t| self.eval(z, t)).collect()
    }

    /// The NLSE combination `G = -(i F_z + F_tt / 2) / (|F|^2 F)` for the
    /// amplitude-free factor `F = psi / U`; a correct parameter set makes this
    /// a positive real constant equal to |U|^2. Returns `(|log F|_re, G)` so
    /// callers can drop near-zero samples.
    pub fn nlse_identity(&self, z: f64, t: f64) -> Result<(f64, C64), FiniteGapError> {
        let p = self.params;
        let g = p.genus();
        let i = C64::new(0.0, 1.0);
        if g == 0 {
            let gval = C64::new(p.k0 + 0.5 * p.omega0 * p.omega0, 0.0);
            return Ok((0.0, gval));
        }
        let u = self.u_den(z, t);
        let un: Vec<C64> = u.iter().zip(&self.delta_hat).map(|(a, d)| a + d).collect();
        let dirs: [&[f64]; 2] = [&self.w_t, &self.w_z];
        let (ln, dn) = self.series_num.as_ref().unwrap().eval_log_dirs(&un, &dirs)?;
        let (ld, dd) = self.series_den.as_ref().unwrap().eval_log_dirs(&u, &dirs)?;
        let (n_t, n_tt) = dn[0];
        let (n_z, _) = dn[1];
        let (d_t, d_tt) = dd[0];
        let (d_z, _) = dd[1];
        let f_z_over_f = i * p.k0 + n_z - d_z;
        let f_t_over_f = i * p.omega0 + n_t - d_t;
        let curvature = (n_tt - n_t * n_t) - (d_tt - d_t * d_t);
        let f_tt_over_f = f_t_over_f * f_t_over_f + curvature;
        let log_mag = (ln - ld).re;
        let f_sq = (2.0 * log_mag).exp();
        let gval = -(i * f_z_over_f + 0.5 * f_tt_over_f) / f_sq;
        Ok((log_mag, gval))
    }
}

/// psi(z, t) for a single point.
pub fn evaluate_solution(params: &FiniteGapParams, z: f64, t: f64) -> Result<C64, FiniteGapError> {
    SolutionEvaluator::new(params, 1e-12)?.eval(z, t)
}

/// psi(z, t) over a grid of times at fixed z, sharing the cached lattice.
pub fn evaluate_solution_grid(
    params: &FiniteGapParams,
    z: f64,
    ts: &[f64],
) -> Result<Vec<C64>, FiniteGapError> {
    SolutionEvaluator::new(params, 1e-12)?.eval_row(z, ts)
}
