//! Receiver pipeline: Schmidl-Cox frame synchronization, deterministic CFO
//! removal, symbol slicing with CP removal, normalization to dimensionless
//! units with band-limited oversampling, spectral-domain decision and the
//! BER/EVM metrics.

use crate::channel::Waveform;
use crate::fft;
use crate::pnft_forward::SpectrumEstimate;
use crate::signal_design::{min_perm_distance, SymbolTable};
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RxError {
    #[error("no preamble found: timing metric peak {peak:.3} below 0.5")]
    NoPreamble { peak: f64 },
    #[error("frame holds {got} complete symbols, expected at least {want}")]
    FrameTooShort { got: usize, want: usize },
    #[error("bit sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Per-distance decision summary.
#[derive(Debug, Clone)]
pub struct DecisionReport {
    pub tx_bits: Vec<u8>,
    pub rx_bits: Vec<u8>,
    pub per_symbol: Vec<SymbolDecision>,
    pub ber: f64,
    pub evm: f64,
    pub distance_km: f64,
}

#[derive(Debug, Clone)]
pub struct SymbolDecision {
    pub received_points: Vec<C64>,
    pub label: u8,
    pub distance: f64,
    pub reliable: bool,
}

/// Schmidl-Cox timing and CFO estimation from a preamble of two identical
/// halves of `half_len` samples. Returns the frame offset (start of the
/// preamble) and the CFO estimate in Hz.
pub fn schmidl_cox_sync(w: &Waveform, half_len: usize) -> Result<(usize, f64), RxError> {
    let n = w.samples.len();
    let l = half_len;
    if n < 2 * l + 1 {
        return Err(RxError::NoPreamble { peak: 0.0 });
    }
    let s = &w.samples;
    let mut best_metric = vec![0.0f64; n - 2 * l + 1];
    // sliding sums
    let mut p = C64::new(0.0, 0.0);
    let mut r = 0.0f64;
    for m in 0..l {
        p += s[m].conj() * s[m + l];
        r += s[m + l].norm_sqr();
    }
    best_metric[0] = if r > 0.0 { p.norm_sqr() / (r * r) } else { 0.0 };
    for d in 1..best_metric.len() {
        p += s[d - 1 + l].conj() * s[d - 1 + 2 * l] - s[d - 1].conj() * s[d - 1 + l];
        r += s[d - 1 + 2 * l].norm_sqr() - s[d - 1 + l].norm_sqr();
        best_metric[d] = if r > 1e-300 { p.norm_sqr() / (r * r) } else { 0.0 };
    }
    let (d_max, &peak) = best_metric
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if peak < 0.5 {
        return Err(RxError::NoPreamble { peak });
    }
    // plateau midpoint: contiguous region around the peak above 90% of it
    let thresh = 0.9 * peak;
    let mut lo = d_max;
    while lo > 0 && best_metric[lo - 1] >= thresh {
        lo -= 1;
    }
    let mut hi = d_max;
    while hi + 1 < best_metric.len() && best_metric[hi + 1] >= thresh {
        hi += 1;
    }
    let offset = (lo + hi) / 2;
    let mut p_at = C64::new(0.0, 0.0);
    for m in 0..l {
        p_at += s[offset + m].conj() * s[offset + m + l];
    }
    let half_duration = l as f64 / w.sample_rate;
    let cfo = p_at.arg() / (2.0 * std::f64::consts::PI * half_duration);
    Ok((offset, cfo))
}

/// Multiplies by `exp(-2 pi i f t)`.
pub fn cfo_compensate(w: &Waveform, cfo_hz: f64) -> Waveform {
    let mut out = w.clone();
    for (i, v) in out.samples.iter_mut().enumerate() {
        let t = i as f64 / w.sample_rate;
        *v *= C64::new(0.0, -2.0 * std::f64::consts::PI * cfo_hz * t).exp();
    }
    out
}

/// Slices a synchronized frame into dimensionless oversampled periods:
/// per symbol the CP is dropped, the body is scaled to dimensionless
/// amplitude and band-limited-resampled to `oversample_to` points.
///
/// `frame_offset` points at the first payload sample (after the preamble).
pub fn slice_and_normalize(
    w: &Waveform,
    table: &SymbolTable,
    frame_offset: usize,
    n_symbols: usize,
    oversample_to: usize,
) -> Result<Vec<Vec<C64>>, RxError> {
    let spb = table.samples_per_symbol();
    let cp = table.cp_len();
    let body = table.body_len();
    let available = (w.samples.len().saturating_sub(frame_offset)) / spb;
    if available < n_symbols {
        return Err(RxError::FrameTooShort { got: available, want: n_symbols });
    }
    let scale = 1.0 / table.units.p0_w.sqrt();
    let mut out = Vec::with_capacity(n_symbols);
    for k in 0..n_symbols {
        let start = frame_offset + k * spb + cp;
        let raw: Vec<C64> = w.samples[start..start + body]
            .iter()
            .map(|v| v * scale)
            .collect();
        out.push(if oversample_to == body {
            raw
        } else {
            fft::resample_periodic(&raw, oversample_to)
        });
    }
    Ok(out)
}

/// Minimal permutation-matched distance decision over the constellation.
///
/// A shortfall (fewer received points than stored) is padded with the
/// centroid of the table's spectra plus a fixed penalty of ten times the
/// constellation minimum distance, and flagged unreliable.
pub fn decide(recv: &SpectrumEstimate, table: &SymbolTable) -> SymbolDecision {
    let n_pts = table.symbols[0].spectrum.points().len();
    let mut pts = recv.points.clone();
    pts.truncate(n_pts);
    let mut penalty = 0.0;
    let reliable = pts.len() == n_pts && !pts.is_empty();
    if pts.len() < n_pts {
        let mut centroid = C64::new(0.0, 0.0);
        let mut count = 0.0;
        for s in &table.symbols {
            for p in s.spectrum.points() {
                centroid += p;
                count += 1.0;
            }
        }
        centroid /= count;
        penalty = 10.0 * table.min_distance * (n_pts - pts.len()) as f64;
        while pts.len() < n_pts {
            pts.push(centroid);
        }
    }
    let mut best_label = table.symbols[0].bits;
    let mut best_dist = f64::INFINITY;
    for s in &table.symbols {
        let d = min_perm_distance(s.spectrum.points(), &pts) + penalty;
        if d < best_dist {
            best_dist = d;
            best_label = s.bits;
        }
    }
    SymbolDecision { received_points: pts, label: best_label, distance: best_dist, reliable }
}

/// RMS spectral-point error normalized by the RMS constellation magnitude,
/// permutation-matched per symbol.
pub fn evm(pairs: &[(Vec<C64>, Vec<C64>)]) -> f64 {
    let mut err = 0.0;
    let mut refmag = 0.0;
    let mut n = 0usize;
    for (tx, rx) in pairs {
        let m = tx.len().min(rx.len());
        if m == 0 {
            continue;
        }
        // best assignment of rx onto tx
        let mut idx: Vec<usize> = (0..m).collect();
        let mut best = f64::INFINITY;
        let mut best_perm = idx.clone();
        permute_small(&mut idx, 0, &mut |perm| {
            let d: f64 = (0..m).map(|i| (tx[i] - rx[perm[i]]).norm_sqr()).sum();
            if d < best {
                best = d;
                best_perm = perm.to_vec();
            }
        });
        for i in 0..m {
            err += (tx[i] - rx[best_perm[i]]).norm_sqr();
            refmag += tx[i].norm_sqr();
            n += 1;
        }
    }
    let _ = n;
    if refmag == 0.0 {
        0.0
    } else {
        (err / refmag).sqrt()
    }
}

fn permute_small(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute_small(idx, k + 1, f);
        idx.swap(k, i);
    }
}

/// Hamming distance over length.
pub fn ber(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64, RxError> {
    if tx_bits.len() != rx_bits.len() {
        return Err(RxError::LengthMismatch(tx_bits.len(), rx_bits.len()));
    }
    if tx_bits.is_empty() {
        return Ok(0.0);
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}
