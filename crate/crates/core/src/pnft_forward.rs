//! Forward periodic NFT: monodromy of the Zakharov-Shabat system over one
//! period, Floquet discriminant, and main-spectrum extraction.
//!
//! The per-sample transfer matrix is exact for a piecewise-constant potential:
//! with `k = sqrt(lambda^2 + |q|^2)`,
//!
//! ```text
//! M_n = cos(k dt) I + sin(k dt)/k [[-i lambda, q], [-conj(q), i lambda]]
//! ```
//!
//! and `Delta(lambda) = tr(M)/2`; the main spectrum solves `Delta = +-1`.
//! Newton refinement uses the exact derivative `d Delta / d lambda`,
//! propagated through the matrix product term by term.

use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnftError {
    #[error("empty sample vector")]
    EmptyInput,
}

/// 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: C64::new(1.0, 0.0),
        b: C64::new(0.0, 0.0),
        c: C64::new(0.0, 0.0),
        d: C64::new(1.0, 0.0),
    };

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn half_trace(&self) -> C64 {
        0.5 * (self.a + self.d)
    }
}

/// One-period transfer matrix at the given spectral point.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub m: Mat2,
    pub lambda: C64,
}

/// Sample transfer matrix and its lambda-derivative.
fn step_matrices(q: C64, dt: f64, lambda: C64) -> (Mat2, Mat2) {
    let k2 = lambda * lambda + q.norm_sqr();
    let k = k2.sqrt();
    let kd = k * dt;
    let (c, s, ds_dl) = if kd.norm() > 1e-4 {
        let c = kd.cos();
        let s = kd.sin() / k;
        // ds/dlambda = lambda (dt c - s)/k^2
        (c, s, lambda * (dt * c - s) / k2)
    } else {
        let w = k2;
        let dt2 = dt * dt;
        let c = C64::new(1.0, 0.0) - w * (dt2 / 2.0) + w * w * (dt2 * dt2 / 24.0);
        let s = dt * (C64::new(1.0, 0.0) - w * (dt2 / 6.0) + w * w * (dt2 * dt2 / 120.0));
        let ds = lambda * dt * dt2 * (C64::new(-1.0 / 3.0, 0.0) + w * (dt2 / 30.0));
        (c, s, ds)
    };
    let dc_dl = -dt * lambda * s;
    let i = C64::new(0.0, 1.0);
    let m = Mat2 {
        a: c - i * lambda * s,
        b: q * s,
        c: -q.conj() * s,
        d: c + i * lambda * s,
    };
    let dm = Mat2 {
        a: dc_dl - i * s - i * lambda * ds_dl,
        b: q * ds_dl,
        c: -q.conj() * ds_dl,
        d: dc_dl + i * s + i * lambda * ds_dl,
    };
    (m, dm)
}

/// Ordered product of the per-sample transfer matrices over one period.
pub fn monodromy(period_samples: &[C64], dt: f64, lambda: C64) -> Result<Monodromy, PnftError> {
    if period_samples.is_empty() {
        return Err(PnftError::EmptyInput);
    }
    let mut m = Mat2::IDENTITY;
    for &q in period_samples {
        let (step, _) = step_matrices(q, dt, lambda);
        m = step.mul(&m);
    }
    Ok(Monodromy { m, lambda })
}

/// Floquet discriminant Delta(lambda) = tr(M)/2.
pub fn floquet_discriminant(period_samples: &[C64], dt: f64, lambda: C64) -> Result<C64, PnftError> {
    Ok(monodromy(period_samples, dt, lambda)?.m.half_trace())
}

/// Delta and its exact lambda-derivative.
pub fn floquet_discriminant_with_derivative(
    period_samples: &[C64],
    dt: f64,
    lambda: C64,
) -> Result<(C64, C64), PnftError> {
    if period_samples.is_empty() {
        return Err(PnftError::EmptyInput);
    }
    let mut m = Mat2::IDENTITY;
    let mut dm = Mat2 { a: C64::new(0.0, 0.0), b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: C64::new(0.0, 0.0) };
    for &q in period_samples {
        let (step, dstep) = step_matrices(q, dt, lambda);
        dm = dstep.mul(&m).add(&step.mul(&dm));
        m = step.mul(&m);
    }
    Ok((m.half_trace(), dm.half_trace()))
}

/// Main-spectrum estimate: upper-half-plane roots of Delta^2 = 1 with their
/// discriminant residuals.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub points: Vec<C64>,
    pub residuals: Vec<f64>,
    /// Set when a reduction asked for more points than were found.
    pub shortfall: bool,
}

impl SpectrumEstimate {
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&i, &j| {
            self.points[j]
                .im
                .partial_cmp(&self.points[i].im)
                .unwrap()
                .then(self.points[i].re.partial_cmp(&self.points[j].re).unwrap())
        });
        self.points = idx.iter().map(|&i| self.points[i]).collect();
        self.residuals = idx.iter().map(|&i| self.residuals[i]).collect();
    }
}

pub const BAND_EDGE_IM: f64 = 1e-3;
const DEDUP_RADIUS: f64 = 1e-6;

/// Search box in the closed upper half plane.
#[derive(Debug, Clone, Copy)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Grid-seeded Newton search for the main spectrum: `|Delta -+ 1|` is
/// evaluated on the grid, local minima of `|Delta^2 - 1|` seed Newton runs
/// toward both discriminant levels, and converged upper-half-plane roots are
/// kept and deduplicated.
pub fn find_main_spectrum(
    period_samples: &[C64],
    dt: f64,
    search: &SearchBox,
    grid: (usize, usize),
    tol: f64,
) -> Result<SpectrumEstimate, PnftError> {
    if period_samples.is_empty() {
        return Err(PnftError::EmptyInput);
    }
    let (nx, ny) = grid;
    let mut vals = vec![0.0f64; nx * ny];
    let xs: Vec<f64> = (0..nx)
        .map(|i| search.re_min + (search.re_max - search.re_min) * i as f64 / (nx - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..ny)
        .map(|j| {
            search.im_min.max(BAND_EDGE_IM)
                + (search.im_max - search.im_min.max(BAND_EDGE_IM)) * j as f64 / (ny - 1) as f64
        })
        .collect();
    for j in 0..ny {
        for i in 0..nx {
            let d = floquet_discriminant(period_samples, dt, C64::new(xs[i], ys[j]))?;
            vals[j * nx + i] = (d * d - 1.0).norm();
        }
    }
    let mut seeds = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = vals[j * nx + i];
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = j as i64 + dj;
                    let ii = i as i64 + di;
                    if jj < 0 || jj >= ny as i64 || ii < 0 || ii >= nx as i64 {
                        continue;
                    }
                    if vals[jj as usize * nx + ii as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(C64::new(xs[i], ys[j]));
            }
        }
    }
    let mut est = newton_refine(period_samples, dt, &seeds, tol)?;
    est.points.retain(|p| {
        p.re >= search.re_min - 0.5 && p.re <= search.re_max + 0.5 && p.im <= search.im_max + 0.5
    });
    est.residuals.truncate(est.points.len());
    est.sort();
    Ok(est)
}

/// Newton refinement from explicit seeds (the fast receiver path: seeds come
/// from the constellation's designed spectra).
pub fn find_main_spectrum_seeded(
    period_samples: &[C64],
    dt: f64,
    seeds: &[C64],
    tol: f64,
) -> Result<SpectrumEstimate, PnftError> {
    let mut est = newton_refine(period_samples, dt, seeds, tol)?;
    est.sort();
    Ok(est)
}

fn newton_refine(
    period_samples: &[C64],
    dt: f64,
    seeds: &[C64],
    tol: f64,
) -> Result<SpectrumEstimate, PnftError> {
    let mut points: Vec<C64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for &seed in seeds {
        for target in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)] {
            let mut lambda = seed;
            // best residual wins: tangential (double) roots stall the Newton
            // step around sqrt(eps) while the residual keeps improving
            let mut best = (f64::INFINITY, lambda);
            for _ in 0..60 {
                let (d, dd) = floquet_discriminant_with_derivative(period_samples, dt, lambda)?;
                let f = d - target;
                if f.norm() < best.0 {
                    best = (f.norm(), lambda);
                }
                if f.norm() < 1e-2 * tol || dd.norm() < 1e-300 {
                    break;
                }
                let step = f / dd;
                lambda -= step;
                if lambda.norm() > 1e6 {
                    break;
                }
            }
            let (resid, lambda) = best;
            if resid >= tol {
                continue;
            }
            if lambda.im <= BAND_EDGE_IM {
                continue; // real-axis (band-edge) roots carry no data
            }
            if points.iter().all(|p| (p - lambda).norm() > DEDUP_RADIUS) {
                points.push(lambda);
                residuals.push(resid);
            }
        }
    }
    Ok(SpectrumEstimate { points, residuals, shortfall: false })
}

/// Keeps the `n` points of largest imaginary part (stable order: descending
/// Im, ties by real part); flags a shortfall when fewer exist.
pub fn reduce_spectrum(est: &SpectrumEstimate, n: usize) -> SpectrumEstimate {
    let mut out = est.clone();
    out.sort();
    if out.points.len() > n {
        out.points.truncate(n);
        out.residuals.truncate(n);
    } else if out.points.len() < n {
        out.shortfall = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn constant_potential(a: f64, n: usize) -> Vec<C64> {
        vec![C64::new(a, 0.0); n]
    }

    #[test]
    fn free_evolution_half_trace() {
        // q = 0: Delta = cos(lambda T)
        let q = constant_potential(0.0, 64);
        let t = 3.0;
        let dt = t / 64.0;
        for lam in [C64::new(0.7, 0.0), C64::new(0.2, 0.4), C64::new(-1.1, 0.2)] {
            let d = floquet_discriminant(&q, dt, lam).unwrap();
            let want = (lam * t).cos();
            assert!((d - want).norm() < 1e-10, "{d} vs {want}");
        }
    }

    #[test]
    fn constant_potential_analytic_discriminant() {
        let a = 1.0;
        let n = 512;
        let t = TWO_PI;
        let q = constant_potential(a, n);
        let dt = t / n as f64;
        for lam in [C64::new(0.3, 0.2), C64::new(-0.5, 0.8), C64::new(0.0, 1.0)] {
            let d = floquet_discriminant(&q, dt, lam).unwrap();
            let k = (lam * lam + a * a).sqrt();
            let want = (k * t).cos();
            assert!((d - want).norm() < 1e-10, "{lam}: {d} vs {want}");
        }
        // lambda = iA: k = 0, Delta = 1 exactly
        let d = floquet_discriminant(&q, dt, C64::new(0.0, a)).unwrap();
        assert!((d - 1.0).norm() < 1e-10);
    }

    #[test]
    fn determinant_is_unimodular() {
        let q: Vec<C64> = (0..128)
            .map(|i| {
                let x = i as f64 * 0.1;
                C64::new(x.sin() * 0.8, (1.7 * x).cos() * 0.3)
            })
            .collect();
        let m = monodromy(&q, 0.05, C64::new(0.3, 0.7)).unwrap();
        assert!((m.m.det() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let q: Vec<C64> = (0..200)
            .map(|i| C64::new((i as f64 * 0.07).sin(), 0.2))
            .collect();
        let dt = 0.03;
        let lam = C64::new(0.4, 0.6);
        let h = 1e-6;
        let (_, dd) = floquet_discriminant_with_derivative(&q, dt, lam).unwrap();
        let dp = floquet_discriminant(&q, dt, lam + h).unwrap();
        let dm = floquet_discriminant(&q, dt, lam - h).unwrap();
        let fd = (dp - dm) / (2.0 * h);
        assert!((dd - fd).norm() < 1e-7 * (1.0 + fd.norm()), "{dd} vs {fd}");
    }

    #[test]
    fn constant_potential_root_structure() {
        // pi/T > A: single root at iA. A = 0.5, T = 2 pi: pi/T = 0.5 = A —
        // use A slightly below. Then A in (pi/T, 2pi/T): two roots.
        let n = 1024;
        let t = TWO_PI;
        let dt = t / n as f64;
        for a in [0.4f64, 1.0, 2.0] {
            let q = constant_potential(a, n);
            let search = SearchBox { re_min: -1.0, re_max: 1.0, im_min: 0.0, im_max: a + 0.5 };
            let est = find_main_spectrum(&q, dt, &search, (30, 30), 1e-9).unwrap();
            // analytic: lambda = i sqrt(A^2 - (n pi/T)^2) for n = 0, 1, ...
            let mut expected = Vec::new();
            let mut m = 0;
            loop {
                let v = a * a - (m as f64 * std::f64::consts::PI / t).powi(2);
                if v <= BAND_EDGE_IM * BAND_EDGE_IM {
                    break;
                }
                expected.push(v.sqrt());
                m += 1;
            }
            assert_eq!(
                est.points.len(),
                expected.len(),
                "A={a}: got {:?}, expected Im {:?}",
                est.points,
                expected
            );
            for (p, want_im) in est.points.iter().zip(&expected) {
                assert!(p.re.abs() < 1e-6, "A={a}: {p}");
                assert!((p.im - want_im).abs() < 1e-6, "A={a}: {p} vs i{want_im}");
            }
        }
    }

    #[test]
    fn reduction_keeps_largest_imaginary() {
        let est = SpectrumEstimate {
            points: vec![
                C64::new(0.1, 0.2),
                C64::new(-0.3, 0.9),
                C64::new(0.4, 0.5),
                C64::new(0.0, 0.7),
                C64::new(0.2, 0.05),
            ],
            residuals: vec![1e-12; 5],
            shortfall: false,
        };
        let top = reduce_spectrum(&est, 3);
        assert_eq!(top.points.len(), 3);
        assert!(!top.shortfall);
        assert_eq!(top.points[0], C64::new(-0.3, 0.9));
        assert_eq!(top.points[1], C64::new(0.0, 0.7));
        assert_eq!(top.points[2], C64::new(0.4, 0.5));
        let same = reduce_spectrum(&top, 3);
        assert_eq!(same.points, top.points);
        let short = reduce_spectrum(&top, 4);
        assert!(short.shortfall);
        assert_eq!(short.points.len(), 3);
    }

    #[test]
    fn spectrum_invariant_under_rotation_and_phase() {
        let n = 256;
        let t = TWO_PI;
        let dt = t / n as f64;
        let q: Vec<C64> = (0..n)
            .map(|i| {
                let x = TWO_PI * i as f64 / n as f64;
                C64::new(1.0 + 0.3 * x.cos(), 0.2 * (2.0 * x).sin())
            })
            .collect();
        let search = SearchBox { re_min: -1.5, re_max: 1.5, im_min: 0.0, im_max: 1.8 };
        let base = find_main_spectrum(&q, dt, &search, (40, 30), 1e-9).unwrap();
        assert!(!base.points.is_empty());
        // cyclic rotation
        let mut rot = q.clone();
        rot.rotate_left(37);
        let r = find_main_spectrum(&rot, dt, &search, (40, 30), 1e-9).unwrap();
        assert_eq!(r.points.len(), base.points.len());
        for (a, b) in base.points.iter().zip(&r.points) {
            assert!((a - b).norm() < 1e-6);
        }
        // global phase
        let ph = C64::new(0.0, 1.234).exp();
        let shifted: Vec<C64> = q.iter().map(|v| v * ph).collect();
        let s = find_main_spectrum(&shifted, dt, &search, (40, 30), 1e-9).unwrap();
        assert_eq!(s.points.len(), base.points.len());
        for (a, b) in base.points.iter().zip(&s.points) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn conjugate_symmetry_of_discriminant() {
        // The focusing reduction gives Delta(conj lambda) = conj(Delta(lambda))
        // for any potential (spectrum symmetric about the real axis), which is
        // why tracking upper-half-plane points suffices. The imaginary-axis
        // mirror Delta(-conj lambda) = conj(Delta) requires a mirror-symmetric
        // potential and fails for generic q, so the search never assumes it.
        let q: Vec<C64> = (0..128)
            .map(|i| {
                let x = TWO_PI * i as f64 / 128.0;
                C64::new(0.8 * x.sin() + 0.1, 0.4 * (3.0 * x).cos())
            })
            .collect();
        let dt = TWO_PI / 128.0;
        let mut mirror_holds = true;
        for lam in [C64::new(0.3, 0.4), C64::new(-0.7, 0.1), C64::new(0.05, 0.9)] {
            let d1 = floquet_discriminant(&q, dt, lam).unwrap();
            let d2 = floquet_discriminant(&q, dt, lam.conj()).unwrap();
            assert!((d2 - d1.conj()).norm() < 1e-10, "{d1} {d2}");
            let dm = floquet_discriminant(&q, dt, C64::new(-lam.re, lam.im)).unwrap();
            if (dm - d1.conj()).norm() > 1e-6 {
                mirror_holds = false;
            }
        }
        assert!(!mirror_holds, "mirror symmetry should fail for an asymmetric potential");
    }
}
