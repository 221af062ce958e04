//! Thin FFT helpers over rustfft shared by the channel, receiver and oracles.

use crate::C64;
use rustfft::FftPlanner;

/// In-place forward DFT, unnormalized: `X_k = sum_n x_n e^{-2 pi i k n / N}`.
pub fn fft(data: &mut [C64]) {
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_forward(data.len());
    plan.process(data);
}

/// In-place inverse DFT normalized by 1/N, so `ifft(fft(x)) == x`.
pub fn ifft(data: &mut [C64]) {
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_inverse(data.len());
    plan.process(data);
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// FFT-ordered frequencies in Hz for `n` samples at `sample_rate`.
pub fn frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| {
            if k <= (n - 1) / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}

/// Band-limited resampling of one period of a periodic signal to `m` samples
/// (spectral zero-padding / truncation).
pub fn resample_periodic(x: &[C64], m: usize) -> Vec<C64> {
    let n = x.len();
    if m == n {
        return x.to_vec();
    }
    let mut spec = x.to_vec();
    fft(&mut spec);
    let mut out = vec![C64::new(0.0, 0.0); m];
    let keep = n.min(m);
    let half = keep / 2;
    // positive frequencies 0..=half-ish, negative tail; split a shared Nyquist bin
    for k in 0..=half.min(m - 1).min(n - 1) {
        out[k] = spec[k];
    }
    for k in 1..=half {
        if k < n && k < m {
            out[m - k] = spec[n - k];
        }
    }
    if keep % 2 == 0 && half > 0 && half < n && half < m {
        // Nyquist bin of the smaller grid is shared between +/-; halve it
        let v = if m > n { spec[half] * 0.5 } else { spec[half] + spec[n - half] };
        if m > n {
            out[half] = v;
            out[m - half] = v;
        } else {
            out[half] = v;
        }
    }
    ifft(&mut out);
    let scale = m as f64 / n as f64;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Periodogram |X_k|^2 / N with FFT bin ordering.
pub fn periodogram(x: &[C64]) -> Vec<f64> {
    let mut spec = x.to_vec();
    fft(&mut spec);
    let n = x.len() as f64;
    spec.iter().map(|v| v.norm_sqr() / n).collect()
}
