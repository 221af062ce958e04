//! Hyperelliptic curve geometry: branch cuts, sheet-1 evaluation of p(lambda),
//! and the polyline cycle layout used by the period quadrature.

use super::{FiniteGapError, MainSpectrum};
use crate::C64;

/// One branch cut: the vertical segment joining `m + i h` to `m - i h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    /// Real midpoint (the cut crosses the real axis here).
    pub midpoint: f64,
    /// Half-height, equals Im of the upper branch point.
    pub half_height: f64,
}

/// The curve `p^2 = prod_k (lambda - lambda_k)(lambda - conj(lambda_k))` with
/// vertical cuts and a fixed cycle layout.
///
/// Sheet 1 is anchored by `p(lambda) ~ -lambda^{g+1}` as `lambda -> +inf`;
/// crossing any cut exchanges sheets (p flips sign). `a_j` encircles cut `j`
/// counterclockwise; the elementary b-loops thread adjacent pairs of cuts and
/// are recombined into a canonical basis by the period solver.
#[derive(Debug, Clone)]
pub struct HyperellipticCurve {
    pub spectrum: MainSpectrum,
    pub cuts: Vec<Cut>,
}

impl HyperellipticCurve {
    pub fn genus(&self) -> usize {
        self.cuts.len() - 1
    }

    /// p on sheet 1, analytic off the cuts.
    ///
    /// Each conjugate pair contributes `r_k = (l - m_k) sqrt(1 + h_k^2/(l - m_k)^2)`
    /// whose principal-branch cut is exactly the segment; the product carries
    /// the sheet anchor sign.
    pub fn p_sheet1(&self, lambda: C64) -> C64 {
        let mut out = C64::new(-1.0, 0.0);
        for cut in &self.cuts {
            out *= r_factor(cut, lambda);
        }
        out
    }

    /// Product of all r_k except cut `skip`; used on-cut where r_skip is
    /// replaced by its analytic boundary value.
    pub fn p_except(&self, skip: usize, lambda: C64) -> C64 {
        let mut out = C64::new(1.0, 0.0);
        for (k, cut) in self.cuts.iter().enumerate() {
            if k != skip {
                out *= r_factor(cut, lambda);
            }
        }
        out
    }

    /// Crossings of the straight segment `za -> zb` with the cuts, sorted by
    /// position along the segment. Vertical segments cannot cross vertical cuts.
    pub fn cut_crossings(&self, za: C64, zb: C64) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        if za.re == zb.re {
            return out;
        }
        for (k, cut) in self.cuts.iter().enumerate() {
            let t = (cut.midpoint - za.re) / (zb.re - za.re);
            if t > 0.0 && t < 1.0 {
                let y = za.im + t * (zb.im - za.im);
                if y.abs() < cut.half_height {
                    out.push((t, k));
                }
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// Elementary b-loop threading cuts `j` and `j+1` exactly once each:
    /// corridor above the axis, through the right wall, over its top branch
    /// point, back along the corridor on the other sheet, through the left
    /// wall and over its top to close.
    pub fn b_loop(&self, j: usize) -> Vec<C64> {
        let g = self.genus();
        assert!(j + 1 <= g);
        let m: Vec<f64> = self.cuts.iter().map(|c| c.midpoint).collect();
        let h: Vec<f64> = self.cuts.iter().map(|c| c.half_height).collect();
        let gap = m[j + 1] - m[j];
        let gap_l = if j >= 1 { m[j] - m[j - 1] } else { gap };
        let gap_r = if j + 2 <= g { m[j + 2] - m[j + 1] } else { gap };
        let dxl = 0.45 * gap.min(gap_l);
        let dxr = 0.45 * gap.min(gap_r);
        let y = 0.20 * h[j].min(h[j + 1]);
        let y2 = 0.35 * h[j].min(h[j + 1]);
        let top_r = 1.5 * h[j + 1];
        let top_l = 1.5 * h[j];
        let a = C64::new(m[j] + dxl, y);
        vec![
            a,
            C64::new(m[j + 1] - dxr, y),
            C64::new(m[j + 1] + dxr, y), // crosses wall j+1
            C64::new(m[j + 1] + dxr, top_r),
            C64::new(m[j + 1] - dxr, top_r),
            C64::new(m[j + 1] - dxr, y2),
            C64::new(m[j] - dxl, y2), // crosses wall j
            C64::new(m[j] - dxl, top_l),
            C64::new(m[j] + dxl, top_l),
            a,
        ]
    }

    /// Finite part of the regularized path from infinity on sheet 2 to
    /// infinity on sheet 1, crossing the rightmost cut once. Returns
    /// `(vertices, x_anchor, inbound_height, outbound_height)`; the caller
    /// attaches the two horizontal tails at the given heights.
    pub fn infinity_path(&self) -> (Vec<C64>, f64, f64, f64) {
        let g = self.genus();
        let last = *self.cuts.last().unwrap();
        let gap_l = if g >= 1 {
            last.midpoint - self.cuts[g - 1].midpoint
        } else {
            2.0 * last.half_height.max(1.0)
        };
        let dx = (0.3 * last.half_height.max(1.0)).min(0.45 * gap_l);
        let y = 0.2 * last.half_height;
        let top = 1.6 * self.cuts.iter().map(|c| c.half_height).fold(0.0, f64::max);
        let extent = self
            .spectrum
            .points()
            .iter()
            .map(|p| p.norm())
            .fold(1.0, f64::max);
        let x0 = last.midpoint + dx + 3.0 * extent;
        let verts = vec![
            C64::new(x0, y),
            C64::new(last.midpoint + dx, y),
            C64::new(last.midpoint - dx, y), // crosses the last wall: sheet -1 -> +1
            C64::new(last.midpoint - dx, top),
            C64::new(last.midpoint + dx, top),
            C64::new(x0, top),
        ];
        (verts, x0, y, top)
    }

    /// Combinatorial check of the cycle layout: elementary loop `j` must cross
    /// cut `j` and cut `j+1` exactly once and no others, which is what makes
    /// the recombined basis symplectically canonical.
    pub fn check_cycle_layout(&self) -> Result<(), FiniteGapError> {
        for j in 0..self.genus() {
            let verts = self.b_loop(j);
            let mut counts = vec![0usize; self.cuts.len()];
            for w in verts.windows(2) {
                for (_, k) in self.cut_crossings(w[0], w[1]) {
                    counts[k] += 1;
                }
            }
            for (k, &c) in counts.iter().enumerate() {
                let want = if k == j || k == j + 1 { 1 } else { 0 };
                if c != want {
                    return Err(FiniteGapError::CrossingCuts {
                        detail: format!("b-loop {j} crosses cut {k} {c} times (expected {want})"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn r_factor(cut: &Cut, lambda: C64) -> C64 {
    let dm = lambda - cut.midpoint;
    let ratio = cut.half_height * cut.half_height / (dm * dm);
    dm * (C64::new(1.0, 0.0) + ratio).sqrt()
}

/// Boundary value of p on the right side of cut `j` at parameter `s` in
/// (-1, 1) along the cut (`lambda = m_j + i h_j s`): `-h_j sqrt(1-s^2) p_except`.
pub fn p_right_side(curve: &HyperellipticCurve, j: usize, s: f64) -> C64 {
    let cut = curve.cuts[j];
    let lambda = C64::new(cut.midpoint, cut.half_height * s);
    -cut.half_height * (1.0 - s * s).sqrt() * curve.p_except(j, lambda)
}

/// Builds the curve from a validated spectrum: one vertical cut per point,
/// sorted by real part (ties by imaginary part).
pub fn build_curve(spectrum: &MainSpectrum) -> Result<HyperellipticCurve, FiniteGapError> {
    let mut pts = spectrum.points().to_vec();
    pts.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let cuts: Vec<Cut> = pts
        .iter()
        .map(|p| Cut { midpoint: p.re, half_height: p.im })
        .collect();
    for w in cuts.windows(2) {
        if w[1].midpoint - w[0].midpoint < 1e-9 {
            return Err(FiniteGapError::CrossingCuts {
                detail: format!(
                    "cuts at Re = {:.6} and {:.6} coincide; separate the spectrum points horizontally",
                    w[0].midpoint, w[1].midpoint
                ),
            });
        }
    }
    let sorted_spectrum = MainSpectrum::with_separation_floor(pts, spectrum.separation_floor())?;
    let curve = HyperellipticCurve { spectrum: sorted_spectrum, cuts };
    curve.check_cycle_layout()?;
    Ok(curve)
}
