//! Numerical evaluation of g-dimensional Riemann theta functions.
//!
//! Convention:
//!
//! ```text
//! theta(u | tau) = sum_{n in Z^g} exp(i pi n'tau n + 2 pi i n'u)
//! ```
//!
//! with `tau` symmetric and `Im tau` positive definite. The lattice sum is
//! truncated to an ellipsoid `||T (n - c)|| <= R` where `Im tau = T'T` and
//! `c = -(Im tau)^{-1} Im u` is the Gaussian center of the summand, so that
//! arguments with large imaginary part stay well conditioned. Evaluation is
//! carried in log space; ratios cancel the shared exponential growth before
//! anything is exponentiated.

use crate::C64;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error("theta argument has length {got}, period matrix has genus {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("period matrix is not symmetric: max |tau - tau'| = {asym:e}")]
    NotSymmetric { asym: f64 },
    #[error("Im tau is not positive definite: smallest eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("theta denominator within 1e-300 of zero after scaling: argument lies near the theta divisor")]
    NearDivisor,
    #[error("tolerance must lie in (0, 1), got {0}")]
    BadTolerance(f64),
}

/// Symmetric g x g period matrix with positive definite imaginary part.
#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    tau: DMatrix<C64>,
    /// Upper-triangular factor of Im tau = T' T.
    chol_t: DMatrix<f64>,
    im_inv: DMatrix<f64>,
}

impl PeriodMatrix {
    /// Validates symmetry (1e-10 entrywise) and positive definiteness of Im tau.
    pub fn new(tau: DMatrix<C64>) -> Result<Self, ThetaError> {
        assert_eq!(tau.nrows(), tau.ncols());
        let g = tau.nrows();
        if g == 0 {
            return Ok(Self { tau, chol_t: DMatrix::zeros(0, 0), im_inv: DMatrix::zeros(0, 0) });
        }
        let mut asym = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                asym = asym.max((tau[(i, j)] - tau[(j, i)]).norm());
            }
        }
        if asym > 1e-10 {
            return Err(ThetaError::NotSymmetric { asym });
        }
        let im = DMatrix::from_fn(g, g, |i, j| 0.5 * (tau[(i, j)].im + tau[(j, i)].im));
        let eig = im.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_eig > 0.0) {
            return Err(ThetaError::NotPositiveDefinite { eigenvalue: min_eig });
        }
        let chol = im
            .clone()
            .cholesky()
            .ok_or(ThetaError::NotPositiveDefinite { eigenvalue: min_eig })?;
        let chol_t = chol.l().transpose();
        let im_inv = chol.inverse();
        Ok(Self { tau, chol_t, im_inv })
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<C64> {
        &self.tau
    }

    fn center(&self, u: &[C64]) -> DVector<f64> {
        let y = DVector::from_iterator(u.len(), u.iter().map(|z| z.im));
        -(&self.im_inv * y)
    }
}

/// Truncation radius in the `||T n||` metric such that lattice points outside
/// contribute less than `tol` in aggregate.
///
/// Combines an ellipsoidal tail bound (cell-covering argument, solved by
/// bisection) with the simple margin `2 sqrt(ln(1/tol)/pi)`; the larger wins.
pub fn truncation_radius(tau: &PeriodMatrix, tol: f64) -> Result<f64, ThetaError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ThetaError::BadTolerance(tol));
    }
    let g = tau.genus();
    if g == 0 {
        return Ok(0.0);
    }
    let t = &tau.chol_t;
    // covering-cell half-diagonal and lattice determinant
    let sigma_max = t
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let rho_half = 0.5 * (g as f64).sqrt() * sigma_max;
    let det_t: f64 = (0..g).map(|i| t[(i, i)].abs()).product();
    let sphere_area = match g {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => {
            let gh = 0.5 * g as f64;
            2.0 * std::f64::consts::PI.powf(gh) / gamma_fn(gh)
        }
    };
    let tail = |r: f64| -> f64 {
        // (S_{g-1}/det T) * int_{r-rho/2}^inf exp(-pi (s - rho/2)^2) s^{g-1} ds
        let a = (r - rho_half).max(0.0);
        let mut acc = 0.0;
        let steps = 400;
        let span = 8.0;
        let h = span / steps as f64;
        for k in 0..steps {
            let s = a + (k as f64 + 0.5) * h;
            acc += (-std::f64::consts::PI * (s - rho_half).max(0.0).powi(2)).exp()
                * s.powi(g as i32 - 1)
                * h;
        }
        sphere_area / det_t * acc
    };
    let mut lo = rho_half;
    let mut hi = rho_half + 2.0;
    while tail(hi) > tol && hi < 1e3 {
        hi += 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let margin = 2.0 * ((1.0 / tol).ln() / std::f64::consts::PI).sqrt();
    Ok(hi.max(margin))
}

fn gamma_fn(x: f64) -> f64 {
    // Stirling with correction terms; only used for g > 3 sphere areas
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let g = 7.0;
        const COEF: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        let mut a = COEF[0];
        let t = x + g + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Integer lattice points with `||T (n - c)|| <= r`, enumerated recursively
/// from the last coordinate (T upper triangular).
fn enumerate_ellipsoid(t: &DMatrix<f64>, c: &DVector<f64>, r: f64) -> Vec<Vec<i64>> {
    let g = t.nrows();
    let mut out = Vec::new();
    let mut n = vec![0i64; g];
    // partial[i] = sum_{j>i} T[i][j] (n_j - c_j), filled as we descend
    fn recurse(
        t: &DMatrix<f64>,
        c: &DVector<f64>,
        r2: f64,
        i: usize,
        used: f64,
        n: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        let g = t.nrows();
        let mut shift = 0.0;
        for j in (i + 1)..g {
            shift += t[(i, j)] * (n[j] as f64 - c[j]);
        }
        let tii = t[(i, i)];
        let budget = (r2 - used).max(0.0).sqrt();
        // |tii (n_i - c_i) + shift| <= budget
        let lo = ((-budget - shift) / tii + c[i]).floor() as i64;
        let hi = ((budget - shift) / tii + c[i]).ceil() as i64;
        for ni in lo..=hi {
            let s = tii * (ni as f64 - c[i]) + shift;
            let used2 = used + s * s;
            if used2 > r2 {
                continue;
            }
            n[i] = ni;
            if i == 0 {
                out.push(n.clone());
            } else {
                recurse(t, c, r2, i - 1, used2, n, out);
            }
        }
    }
    if g == 0 {
        out.push(Vec::new());
        return out;
    }
    recurse(t, c, r * r, g - 1, 0.0, &mut n, &mut out);
    out
}

/// Precomputed truncated theta series for one period matrix and one imaginary
/// part of the argument. Evaluation at arguments sharing that imaginary part
/// is exact to the series tolerance; the quadratic form is cached per point.
pub struct ThetaSeries {
    g: usize,
    /// flattened lattice points, row-major
    points: Vec<f64>,
    /// i pi n'tau n per point
    quad: Vec<C64>,
    n_points: usize,
}

impl ThetaSeries {
    pub fn new(tau: &PeriodMatrix, im_u: &[C64], tol: f64) -> Result<Self, ThetaError> {
        let g = tau.genus();
        if im_u.len() != g {
            return Err(ThetaError::DimensionMismatch { expected: g, got: im_u.len() });
        }
        let r = truncation_radius(tau, tol)?;
        let c = tau.center(im_u);
        let pts = enumerate_ellipsoid(&tau.chol_t, &c, r);
        let n_points = pts.len();
        let mut points = Vec::with_capacity(n_points * g);
        let mut quad = Vec::with_capacity(n_points);
        for n in &pts {
            let mut q = C64::new(0.0, 0.0);
            for i in 0..g {
                for j in 0..g {
                    q += tau.tau[(i, j)] * (n[i] * n[j]) as f64;
                }
            }
            quad.push(C64::new(0.0, std::f64::consts::PI) * q);
            points.extend(n.iter().map(|&v| v as f64));
        }
        Ok(Self { g, points, quad, n_points })
    }

    /// log theta(u | tau), principal branch of the scaled sum.
    pub fn eval_log(&self, u: &[C64]) -> Result<C64, ThetaError> {
        self.eval_log_dirs(u, &[]).map(|(l, _)| l)
    }

    /// log theta plus, for each real direction `w`, the pair
    /// `(D1, D2) = (theta_w / theta, theta_ww / theta)` where `theta_w` is the
    /// derivative along `u -> u + s w`.
    pub fn eval_log_dirs(&self, u: &[C64], dirs: &[&[f64]]) -> Result<(C64, Vec<(C64, C64)>), ThetaError> {
        if u.len() != self.g {
            return Err(ThetaError::DimensionMismatch { expected: self.g, got: u.len() });
        }
        let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
        // first pass: max real part for scaling
        let mut max_re = f64::NEG_INFINITY;
        let mut exponents = Vec::with_capacity(self.n_points);
        for (k, q) in self.quad.iter().enumerate() {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..self.g {
                dot += u[i] * self.points[k * self.g + i];
            }
            let e = q + two_pi_i * dot;
            max_re = max_re.max(e.re);
            exponents.push(e);
        }
        if self.n_points == 0 || !max_re.is_finite() {
            return Err(ThetaError::NearDivisor);
        }
        let mut s0 = C64::new(0.0, 0.0);
        let mut s1 = vec![C64::new(0.0, 0.0); dirs.len()];
        let mut s2 = vec![C64::new(0.0, 0.0); dirs.len()];
        for (k, e) in exponents.iter().enumerate() {
            let term = (e - max_re).exp();
            s0 += term;
            for (d, w) in dirs.iter().enumerate() {
                let mut nw = 0.0;
                for i in 0..self.g {
                    nw += self.points[k * self.g + i] * w[i];
                }
                let fac = two_pi_i * nw;
                s1[d] += fac * term;
                s2[d] += fac * fac * term;
            }
        }
        if !(s0.norm() > 1e-300) {
            return Err(ThetaError::NearDivisor);
        }
        let log = C64::new(max_re, 0.0) + s0.ln();
        let out = dirs
            .iter()
            .enumerate()
            .map(|(d, _)| (s1[d] / s0, s2[d] / s0))
            .collect();
        Ok((log, out))
    }
}

/// theta(u | tau) to absolute error `tol * (1 + |theta|)`.
///
/// Intended for tests and moderate arguments; solution evaluation goes through
/// [`log_theta_ratio`] which never exponentiates a large prefactor.
pub fn theta(u: &[C64], tau: &PeriodMatrix, tol: f64) -> Result<C64, ThetaError> {
    Ok(log_theta(u, tau, tol)?.exp())
}

/// log theta(u | tau) with the ellipsoid centered on the argument's Gaussian peak.
pub fn log_theta(u: &[C64], tau: &PeriodMatrix, tol: f64) -> Result<C64, ThetaError> {
    if tau.genus() == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ThetaError::BadTolerance(tol));
    }
    let series = ThetaSeries::new(tau, u, tol)?;
    series.eval_log(u)
}

/// log of theta(u_num | tau) / theta(u_den | tau) with shared growth cancelled
/// before exponentiation.
pub fn log_theta_ratio(u_num: &[C64], u_den: &[C64], tau: &PeriodMatrix, tol: f64) -> Result<C64, ThetaError> {
    let num = log_theta(u_num, tau, tol)?;
    let den = match log_theta(u_den, tau, tol) {
        Err(ThetaError::NearDivisor) => return Err(ThetaError::NearDivisor),
        other => other?,
    };
    Ok(num - den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn pm(entries: DMatrix<C64>) -> PeriodMatrix {
        PeriodMatrix::new(entries).unwrap()
    }

    fn tau_i() -> PeriodMatrix {
        pm(dmatrix![C64::new(0.0, 1.0)])
    }

    /// Wide-box brute force, no ellipsoid, no scaling.
    fn brute_theta(u: &[C64], tau: &DMatrix<C64>, half_width: i64) -> C64 {
        let g = u.len();
        let mut total = C64::new(0.0, 0.0);
        let mut idx = vec![-half_width; g];
        loop {
            let mut e = C64::new(0.0, 0.0);
            for i in 0..g {
                for j in 0..g {
                    e += tau[(i, j)] * (idx[i] * idx[j]) as f64;
                }
            }
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..g {
                dot += u[i] * idx[i] as f64;
            }
            total += (C64::new(0.0, std::f64::consts::PI) * e
                + C64::new(0.0, 2.0 * std::f64::consts::PI) * dot)
                .exp();
            // odometer
            let mut i = 0;
            loop {
                if i == g {
                    return total;
                }
                idx[i] += 1;
                if idx[i] <= half_width {
                    break;
                }
                idx[i] = -half_width;
                i += 1;
            }
        }
    }

    #[test]
    fn theta_null_value_matches_brute_force() {
        let t = tau_i();
        let v = theta(&[C64::new(0.0, 0.0)], &t, 1e-14).unwrap();
        let b = brute_theta(&[C64::new(0.0, 0.0)], t.tau(), 50);
        assert!((v - b).norm() < 1e-12, "{v} vs {b}");
        assert!((v.re - 1.08643481121).abs() < 1e-10);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn radius_covers_required_points_and_is_monotone() {
        let t = tau_i();
        let r_tight = truncation_radius(&t, 1e-15).unwrap();
        assert!(r_tight >= 6.0, "r = {r_tight}");
        let r_loose = truncation_radius(&t, 0.5).unwrap();
        assert!(r_loose < r_tight);
    }

    #[test]
    fn radius_product_structure() {
        let t1 = tau_i();
        let t2 = pm(dmatrix![C64::new(0.0, 1.0), C64::new(0.0, 0.0);
                             C64::new(0.0, 0.0), C64::new(0.0, 1.0)]);
        let r1 = truncation_radius(&t1, 1e-12).unwrap();
        let r2 = truncation_radius(&t2, 1e-12).unwrap();
        assert!((r1 - r2).abs() < 1e-12, "{r1} vs {r2}");
        // verify against brute force that the radius is in fact sufficient
        let u = [C64::new(0.3, 0.1), C64::new(-0.2, 0.05)];
        let v = theta(&u, &t2, 1e-12).unwrap();
        let b = brute_theta(&u, t2.tau(), 30);
        assert!((v - b).norm() < 1e-10);
    }

    #[test]
    fn rejects_bad_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 1.0), C64::new(0.3, 0.2),
            C64::new(0.1, 0.2), C64::new(0.0, 1.0),
        ]);
        assert!(matches!(PeriodMatrix::new(asym), Err(ThetaError::NotSymmetric { .. })));
        let neg = dmatrix![C64::new(0.0, -1.0)];
        assert!(matches!(PeriodMatrix::new(neg), Err(ThetaError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = tau_i();
        let err = theta(&[C64::new(0.0, 0.0); 2], &t, 1e-10).unwrap_err();
        assert!(matches!(err, ThetaError::DimensionMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn one_periodicity_and_evenness() {
        let tau = pm(dmatrix![C64::new(0.1, 0.9), C64::new(0.2, 0.3);
                              C64::new(0.2, 0.3), C64::new(-0.3, 1.1)]);
        let u = [C64::new(0.17, 0.21), C64::new(-0.4, 0.11)];
        let base = theta(&u, &tau, 1e-12).unwrap();
        for j in 0..2 {
            let mut shifted = u;
            shifted[j] += 1.0;
            let v = theta(&shifted, &tau, 1e-12).unwrap();
            assert!((v - base).norm() <= 2e-12 * (1.0 + base.norm()));
        }
        let neg: Vec<C64> = u.iter().map(|z| -z).collect();
        let v = theta(&neg, &tau, 1e-12).unwrap();
        assert!((v - base).norm() < 1e-12 * (1.0 + base.norm()));
    }

    #[test]
    fn quasi_periodicity() {
        let tau = pm(dmatrix![C64::new(0.1, 0.9), C64::new(0.2, 0.3);
                              C64::new(0.2, 0.3), C64::new(-0.3, 1.1)]);
        let u = [C64::new(0.17, 0.21), C64::new(-0.4, 0.11)];
        let base = theta(&u, &tau, 1e-12).unwrap();
        for j in 0..2 {
            let mut shifted = u.to_vec();
            for i in 0..2 {
                shifted[i] += tau.tau()[(i, j)];
            }
            let v = theta(&shifted, &tau, 1e-12).unwrap();
            let factor = (-C64::new(0.0, std::f64::consts::PI) * tau.tau()[(j, j)]
                - C64::new(0.0, 2.0 * std::f64::consts::PI) * u[j])
                .exp();
            let expect = factor * base;
            assert!(
                (v - expect).norm() < 1e-10 * (1.0 + expect.norm()),
                "j={j}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn log_ratio_identities() {
        let tau = pm(dmatrix![C64::new(0.5, 1.4), C64::new(0.2, 0.6);
                              C64::new(0.2, 0.6), C64::new(0.0, 0.7)]);
        let u = [C64::new(0.3, 0.4), C64::new(0.1, -0.2)];
        // identical arguments -> 0
        let z = log_theta_ratio(&u, &u, &tau, 1e-12).unwrap();
        assert!(z.norm() < 1e-12);
        // exp(log ratio) == theta(num)/theta(den) at moderate arguments
        let v = [C64::new(-0.2, 0.1), C64::new(0.4, 0.3)];
        let lr = log_theta_ratio(&u, &v, &tau, 1e-12).unwrap();
        let direct = theta(&u, &tau, 1e-12).unwrap() / theta(&v, &tau, 1e-12).unwrap();
        assert!((lr.exp() - direct).norm() < 1e-9 * direct.norm());
        // quasi-periodic shift of both arguments changes the log ratio by
        // -2 pi i (u_num,j - u_den,j) modulo 2 pi i
        for j in 0..2 {
            let shift: Vec<C64> = (0..2).map(|i| tau.tau()[(i, j)]).collect();
            let un: Vec<C64> = u.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let vd: Vec<C64> = v.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let lr2 = log_theta_ratio(&un, &vd, &tau, 1e-12).unwrap();
            let expect = lr - C64::new(0.0, 2.0 * std::f64::consts::PI) * (u[j] - v[j]);
            let diff = (lr2 - expect) / C64::new(0.0, 2.0 * std::f64::consts::PI);
            let frac = (diff.re - diff.re.round()).abs() + diff.im.abs();
            assert!(frac < 1e-9, "j={j}: lr2={lr2} expect={expect}");
        }
    }

    #[test]
    fn large_imaginary_argument_is_overflow_safe() {
        let tau = pm(dmatrix![C64::new(0.0, 0.8)]);
        // Im u large enough that exp(pi y^2 / Im tau) would overflow f64
        let u_num = [C64::new(0.3, 26.0)];
        let u_den = [C64::new(0.3, 0.0)];
        let lr = log_theta_ratio(&u_num, &u_den, &tau, 1e-12).unwrap();
        assert!(lr.re.is_finite() && lr.re > 100.0);
    }

    #[test]
    fn brute_force_equivalence_g3() {
        // random-ish well conditioned tau, Im >= 0.5 I
        let tau = pm(DMatrix::from_row_slice(3, 3, &[
            C64::new(0.11, 0.91), C64::new(-0.21, 0.13), C64::new(0.05, 0.07),
            C64::new(-0.21, 0.13), C64::new(0.32, 1.22), C64::new(0.14, -0.09),
            C64::new(0.05, 0.07), C64::new(0.14, -0.09), C64::new(-0.4, 0.83),
        ]));
        let u = [C64::new(0.21, 0.05), C64::new(-0.13, 0.11), C64::new(0.4, -0.07)];
        let v = theta(&u, &tau, 1e-12).unwrap();
        let b = brute_theta(&u, tau.tau(), 12);
        assert!((v - b).norm() < 1e-10 * (1.0 + b.norm()), "{v} vs {b}");
    }
}
