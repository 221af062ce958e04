//! Constellation design and transmit-side signal construction: oracle-checked
//! genus-2 symbol synthesis, physical unit scaling, lookup-table sampling, and
//! frame assembly with cyclic prefix, minima joining, phase matching and a
//! synchronization preamble.

use crate::channel::{LinkConfig, Units, Waveform};
use crate::fft;
use crate::finite_gap::{
    build_curve, compute_params, evaluate_solution_grid, nlse_residual, quasiperiodize,
    FiniteGapError, FiniteGapParams, MainSpectrum, ResidualGrid,
};
use crate::pnft_forward::{find_main_spectrum_seeded, reduce_spectrum};
use crate::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("no sign change of the reduced frequency in the tilt bracket [{lo}, {hi}] (f = {flo:.5}, {fhi:.5})")]
    NoRootBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("carrier frequency did not vanish after the Galilean shift: Omega0 = {omega0:e}")]
    ShiftFailed { omega0: f64 },
    #[error("design oracle '{metric}' failed: {value:.6} (limit {limit})")]
    Oracle { metric: &'static str, value: f64, limit: f64 },
    #[error("bit sequence length {0} is not a multiple of 2")]
    OddBitCount(usize),
    #[error("frame of {got} symbols exceeds the configured maximum {max}")]
    TooManySymbols { got: usize, max: usize },
    #[error("unknown bit label {0}")]
    UnknownLabel(u8),
    #[error(transparent)]
    FiniteGap(#[from] FiniteGapError),
}

/// Physical <-> dimensionless unit map shared by every symbol of a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitMap {
    /// Time scale in seconds.
    pub t0_s: f64,
    /// Length scale in meters, `T0^2 / |beta2|`.
    pub l0_m: f64,
    /// Power scale in watts, `1 / (gamma_eff L0)`.
    pub p0_w: f64,
}

impl UnitMap {
    /// From the time scale and fiber constants (SI: s^2/m and 1/(W m)).
    pub fn new(t0_s: f64, beta2_s2_per_m: f64, gamma_eff_per_w_m: f64) -> Self {
        let l0_m = t0_s * t0_s / beta2_s2_per_m.abs();
        let p0_w = 1.0 / (gamma_eff_per_w_m * l0_m);
        Self { t0_s, l0_m, p0_w }
    }

    pub fn amplitude_to_physical(&self, a: C64) -> C64 {
        a * self.p0_w.sqrt()
    }

    pub fn amplitude_to_dimensionless(&self, a: C64) -> C64 {
        a / self.p0_w.sqrt()
    }
}

/// One spectral template level: side cuts at `+-side_offset + i side_height`
/// (tilted during the root search) and a center cut at
/// `center_offset + i center_height`.
#[derive(Debug, Clone, Copy)]
pub struct LevelTemplate {
    pub side_offset: f64,
    pub side_height: f64,
    pub center_height: f64,
}

/// Free design parameters; the defaults were fixed by the oracle-constrained
/// search (residual, round trip, power and bandwidth targets all pass).
#[derive(Debug, Clone)]
pub struct ConstellationTemplate {
    pub levels: [LevelTemplate; 2],
    /// Real offset of the center cut; the asymmetry that separates a symbol
    /// from its mirror.
    pub center_offset: f64,
    /// Additional group-velocity trim applied to every spectrum (the
    /// experiment adjusted this manually at the transmitter).
    pub spectral_shift: f64,
    pub samples_per_symbol: usize,
    pub cp_len: usize,
    pub symbol_period_s: f64,
    pub sample_rate_hz: f64,
    pub launch_power_dbm: f64,
    pub min_distance_floor: f64,
    pub max_frame_symbols: usize,
    pub preamble_seed: u64,
}

impl Default for ConstellationTemplate {
    fn default() -> Self {
        Self {
            levels: [
                LevelTemplate { side_offset: 0.30, side_height: 0.80, center_height: 1.00 },
                LevelTemplate { side_offset: 0.52, side_height: 0.88, center_height: 1.12 },
            ],
            center_offset: 0.03,
            spectral_shift: 0.0,
            samples_per_symbol: 64,
            cp_len: 16,
            symbol_period_s: 1e-9,
            sample_rate_hz: 64e9,
            launch_power_dbm: 2.5,
            min_distance_floor: 0.015,
            max_frame_symbols: 1000,
            preamble_seed: 0x5C_5C_5C_5C,
        }
    }
}

/// One constellation symbol: designed spectrum, solution constants, the
/// sampled lookup table (physical units, natural power), and assembly data.
#[derive(Debug, Clone)]
pub struct SymbolDefinition {
    pub bits: u8,
    pub spectrum: MainSpectrum,
    pub params: FiniteGapParams,
    /// One amplitude period, physical amplitude at the natural design power.
    pub body_samples: Vec<C64>,
    pub cp_len: usize,
    /// Static phase baked into the stored table; frame assembly adds a
    /// per-instance continuity phase on top.
    pub phase_offset: f64,
    /// Sample index of the amplitude minimum; assembly rotates the body so it
    /// begins here.
    pub join_index: usize,
}

/// The four-symbol constellation with its shared unit map.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    pub symbols: Vec<SymbolDefinition>,
    pub symbol_period_s: f64,
    pub sample_rate_hz: f64,
    pub launch_power_dbm: f64,
    pub units: UnitMap,
    pub min_distance: f64,
    pub max_frame_symbols: usize,
    pub preamble_seed: u64,
}

impl SymbolTable {
    pub fn samples_per_symbol(&self) -> usize {
        (self.symbol_period_s * self.sample_rate_hz).round() as usize
    }

    pub fn body_len(&self) -> usize {
        self.samples_per_symbol() - self.symbols[0].cp_len
    }

    pub fn cp_len(&self) -> usize {
        self.symbols[0].cp_len
    }

    pub fn symbol(&self, label: u8) -> Result<&SymbolDefinition, DesignError> {
        self.symbols
            .iter()
            .find(|s| s.bits == label)
            .ok_or(DesignError::UnknownLabel(label))
    }

    pub fn launch_power_w(&self) -> f64 {
        1e-3 * 10f64.powf(self.launch_power_dbm / 10.0)
    }

    /// Dimensionless body period (time units of the shared map).
    pub fn dimensionless_period(&self) -> f64 {
        self.body_len() as f64 / self.sample_rate_hz / self.units.t0_s
    }

    /// Schmidl-Cox preamble: one symbol period, two identical pseudo-random
    /// constant-envelope halves at launch power.
    pub fn preamble(&self) -> Vec<C64> {
        let n = self.samples_per_symbol();
        let half = n / 2;
        let amp = self.launch_power_w().sqrt();
        let mut rng = ChaCha12Rng::seed_from_u64(self.preamble_seed);
        let mut h = Vec::with_capacity(half);
        for _ in 0..half {
            let phi: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            h.push(C64::new(0.0, phi).exp() * amp);
        }
        let mut out = h.clone();
        out.extend_from_slice(&h);
        out
    }

    /// Minimum permutation-matched squared distance between two spectra.
    pub fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
        min_perm_distance(a, b)
    }
}

pub fn min_perm_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, &mut |perm| {
        let d: f64 = (0..n).map(|i| (a[i] - b[perm[i]]).norm_sqr()).sum();
        if d < best {
            best = d;
        }
    });
    best
}

fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, f);
        idx.swap(k, i);
    }
}

fn level_spectrum(level: &LevelTemplate, center_offset: f64, tilt: f64) -> Result<MainSpectrum, FiniteGapError> {
    MainSpectrum::new(vec![
        C64::new(-level.side_offset, level.side_height - tilt),
        C64::new(center_offset, level.center_height),
        C64::new(level.side_offset, level.side_height + tilt),
    ])
}

fn reduced_small_frequency(spectrum: &MainSpectrum) -> Result<(f64, FiniteGapParams), FiniteGapError> {
    let curve = build_curve(spectrum)?;
    let params = compute_params(&curve)?;
    Ok((params.omega[0], params))
}

/// Designs one level: root-finds the side-height tilt that makes the reduced
/// small frequency vanish (the solution becomes exactly periodic), then
/// applies the Galilean shift that zeroes the carrier frequency.
fn design_level(
    level: &LevelTemplate,
    center_offset: f64,
    extra_shift: f64,
) -> Result<(MainSpectrum, FiniteGapParams), DesignError> {
    let f = |tilt: f64| -> Result<(f64, FiniteGapParams), DesignError> {
        let s = level_spectrum(level, center_offset, tilt)?;
        Ok(reduced_small_frequency(&s)?)
    };
    let mut lo = 0.0;
    let mut hi = 0.90 * level.side_height;
    let (mut flo, _) = f(lo)?;
    let (mut fhi, _) = f(hi)?;
    if flo * fhi > 0.0 {
        // try the other tilt direction before giving up
        let (fneg, _) = f(-hi)?;
        if flo * fneg <= 0.0 {
            hi = -hi;
            fhi = fneg;
        } else {
            return Err(DesignError::NoRootBracket { lo, hi, flo, fhi });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (fm, _) = f(mid)?;
        if flo * fm <= 0.0 {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo).abs() < 1e-13 {
            break;
        }
    }
    let _ = fhi;
    let tilt = 0.5 * (lo + hi);
    let spectrum = level_spectrum(level, center_offset, tilt)?;
    let (_, params) = reduced_small_frequency(&spectrum)?;
    // Omega0 is exactly affine in the spectral shift; one step lands on zero
    let mut best: Option<(f64, MainSpectrum, FiniteGapParams)> = None;
    for sigma in [params.omega0 / 2.0, -params.omega0 / 2.0] {
        let shifted = spectrum.shifted(sigma + extra_shift);
        let (_, p) = reduced_small_frequency(&shifted)?;
        if best.as_ref().map_or(true, |(b, _, _)| p.omega0.abs() < *b) {
            best = Some((p.omega0.abs(), shifted, p));
        }
        if best.as_ref().unwrap().0 < 1e-8 {
            break;
        }
    }
    let (resid, spectrum, params) = best.unwrap();
    if resid > 1e-8 {
        return Err(DesignError::ShiftFailed { omega0: resid });
    }
    Ok((spectrum, params))
}

/// Mirror of a parameter set about the imaginary spectral axis: the mirrored
/// symbol is the complex conjugate signal at z = 0.
pub fn mirror_params(params: &FiniteGapParams) -> FiniteGapParams {
    let g = params.genus();
    let tau_m = nalgebra::DMatrix::from_fn(g, g, |i, j| {
        let t = params.tau.tau()[(i, j)];
        C64::new(-t.re, t.im)
    });
    FiniteGapParams {
        amplitude: params.amplitude.conj(),
        omega0: -params.omega0,
        k0: params.k0,
        omega: params.omega.clone(),
        kvec: params.kvec.iter().map(|k| -k).collect(),
        delta: params.delta.iter().map(|d| d.conj()).collect(),
        tau: crate::riemann_theta::PeriodMatrix::new(tau_m).expect("mirrored tau stays valid"),
        zeroed: params.zeroed,
    }
}

/// Applies the NLSE scaling symmetry so the amplitude period equals the body
/// duration (`symbol_period - cp duration`), fixing the canonical gauge
/// `T_dimensionless = 2 pi`; records the resulting T0 in the unit map.
pub fn scale_to_physical(
    params: &FiniteGapParams,
    units: &mut UnitMap,
    symbol_period_s: f64,
    cp_duration_s: f64,
    beta2_s2_per_m: f64,
    gamma_eff_per_w_m: f64,
) -> Result<FiniteGapParams, DesignError> {
    let t_cur = params.amplitude_period()?;
    let a = t_cur / (2.0 * std::f64::consts::PI);
    let scaled = params.scaled(a);
    let t_body = symbol_period_s - cp_duration_s;
    *units = UnitMap::new(t_body / (2.0 * std::f64::consts::PI), beta2_s2_per_m, gamma_eff_per_w_m);
    Ok(scaled)
}

/// Uniform samples of one amplitude period of psi(0, t), dimensionless.
pub fn sample_symbol(params: &FiniteGapParams, body_len: usize) -> Result<Vec<C64>, DesignError> {
    let period = params.amplitude_period()?;
    let ts: Vec<f64> = (0..body_len).map(|i| i as f64 * period / body_len as f64).collect();
    Ok(evaluate_solution_grid(params, 0.0, &ts)?)
}

/// Builds the four-symbol constellation and validates every oracle the design
/// depends on: NLSE residual, forward-PNFT round trip, spectral distances,
/// distinct peak amplitudes, and the frame power/bandwidth targets.
pub fn design_constellation(
    template: &ConstellationTemplate,
    link: &LinkConfig,
) -> Result<SymbolTable, DesignError> {
    let body_len = template.samples_per_symbol - template.cp_len;
    let cp_duration = template.cp_len as f64 / template.sample_rate_hz;
    let beta2_si = link.beta2_s2_per_km / 1e3;
    let gamma_eff_si = link.gamma_eff() / 1e3;

    // two base levels, the second rescaled onto the first level's frequency
    // so one unit map serves the whole table
    let (spec_a, params_a) = design_level(&template.levels[0], template.center_offset, template.spectral_shift)?;
    let (spec_b_raw, params_b_raw) =
        design_level(&template.levels[1], template.center_offset, template.spectral_shift)?;
    let om_a = params_a.omega[1];
    let om_b = params_b_raw.omega[1];
    let scale_b = om_a / om_b;
    if !(scale_b > 0.0) {
        return Err(DesignError::Oracle { metric: "level frequency match", value: scale_b, limit: 0.0 });
    }
    let params_b = params_b_raw.scaled(scale_b);
    let spec_b = MainSpectrum::with_separation_floor(
        spec_b_raw.points().iter().map(|p| p * scale_b).collect(),
        spec_b_raw.separation_floor(),
    )?;

    let mut units = UnitMap::new(1.0, beta2_si, gamma_eff_si);
    let mut build = |spectrum: MainSpectrum, params: FiniteGapParams, bits: u8| -> Result<SymbolDefinition, DesignError> {
        let q = quasiperiodize(&params)?;
        let scaled = scale_to_physical(&q, &mut units, template.symbol_period_s, cp_duration, beta2_si, gamma_eff_si)?;
        // spectrum scales with the same gauge factor as the frequencies
        let gauge = scaled.omega[1] / q.omega[1];
        let spectrum = MainSpectrum::with_separation_floor(
            spectrum.points().iter().map(|p| p * gauge).collect(),
            (spectrum.separation_floor() * gauge).min(0.05),
        )?;
        let body_dimless = sample_symbol(&scaled, body_len)?;
        let p0_sqrt = units.p0_w.sqrt();
        let body: Vec<C64> = body_dimless.iter().map(|v| v * p0_sqrt).collect();
        let join_index = body
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        Ok(SymbolDefinition {
            bits,
            spectrum,
            params: scaled,
            body_samples: body,
            cp_len: template.cp_len,
            phase_offset: 0.0,
            join_index,
        })
    };

    let sym_a = build(spec_a.clone(), params_a.clone(), 0b00)?;
    let sym_a_m = build(spec_a.mirrored(), mirror_params(&params_a), 0b01)?;
    let sym_b = build(spec_b.clone(), params_b.clone(), 0b10)?;
    let sym_b_m = build(spec_b.mirrored(), mirror_params(&params_b), 0b11)?;
    let symbols = vec![sym_a, sym_a_m, sym_b, sym_b_m];

    // pairwise spectral distances
    let mut min_distance = f64::INFINITY;
    for i in 0..symbols.len() {
        for j in (i + 1)..symbols.len() {
            let d = min_perm_distance(symbols[i].spectrum.points(), symbols[j].spectrum.points());
            min_distance = min_distance.min(d);
        }
    }
    if min_distance < template.min_distance_floor {
        return Err(DesignError::Oracle {
            metric: "minimum inter-symbol distance",
            value: min_distance,
            limit: template.min_distance_floor,
        });
    }

    let table = SymbolTable {
        symbols,
        symbol_period_s: template.symbol_period_s,
        sample_rate_hz: template.sample_rate_hz,
        launch_power_dbm: template.launch_power_dbm,
        units,
        min_distance,
        max_frame_symbols: template.max_frame_symbols,
        preamble_seed: template.preamble_seed,
    };
    validate_table(&table)?;
    Ok(table)
}

fn validate_table(table: &SymbolTable) -> Result<(), DesignError> {
    // NLSE residual of every stored (quasi-periodized, scaled) symbol
    for s in &table.symbols {
        let r = nlse_residual(&s.params, &ResidualGrid::default())?;
        if r > 1e-6 {
            return Err(DesignError::Oracle { metric: "nlse residual", value: r, limit: 1e-6 });
        }
    }
    // forward-PNFT round trip on the oversampled body
    let t_hat = table.dimensionless_period();
    for s in &table.symbols {
        let body_dimless: Vec<C64> = s
            .body_samples
            .iter()
            .map(|v| v / table.units.p0_w.sqrt())
            .collect();
        let over = fft::resample_periodic(&body_dimless, 1024);
        let dt = t_hat / 1024.0;
        let est = find_main_spectrum_seeded(&over, dt, s.spectrum.points(), 1e-9)
            .map_err(|_| DesignError::Oracle { metric: "round trip", value: f64::NAN, limit: 1e-2 })?;
        let est = reduce_spectrum(&est, s.spectrum.points().len());
        if est.points.len() < s.spectrum.points().len() {
            return Err(DesignError::Oracle { metric: "round trip points", value: est.points.len() as f64, limit: 3.0 });
        }
        let err = max_matched_error(s.spectrum.points(), &est.points);
        if err > 1e-2 {
            return Err(DesignError::Oracle { metric: "round trip error", value: err, limit: 1e-2 });
        }
    }
    // two distinct peak amplitudes
    let peak = |s: &SymbolDefinition| {
        s.body_samples.iter().map(|v| v.norm()).fold(0.0f64, f64::max)
    };
    let p_a = peak(&table.symbols[0]);
    let p_b = peak(&table.symbols[2]);
    if (p_a - p_b).abs() / p_a.max(p_b) < 0.03 {
        return Err(DesignError::Oracle {
            metric: "distinct peak amplitudes",
            value: (p_a - p_b).abs() / p_a.max(p_b),
            limit: 0.03,
        });
    }
    // natural power close to the launch target so the final normalization is
    // a small correction that does not break the unit map
    let bits = random_bits(512, 0xD5);
    let frame = assemble_frame(table, &bits, true)?;
    let natural_dbm = {
        // reconstruct the pre-normalization power from the stored bodies
        let mut acc = 0.0;
        let mut n = 0usize;
        for s in &table.symbols {
            acc += s.body_samples.iter().map(|v| v.norm_sqr()).sum::<f64>();
            n += s.body_samples.len();
        }
        10.0 * (acc / n as f64 / 1e-3).log10()
    };
    if (natural_dbm - table.launch_power_dbm).abs() > 1.0 {
        return Err(DesignError::Oracle {
            metric: "natural launch power (dBm)",
            value: natural_dbm,
            limit: table.launch_power_dbm,
        });
    }
    let (_, bw) = power_and_bandwidth(&frame);
    if !(3.825e9..=5.175e9).contains(&bw) {
        return Err(DesignError::Oracle { metric: "99% bandwidth (Hz)", value: bw, limit: 4.5e9 });
    }
    Ok(())
}

pub fn max_matched_error(reference: &[C64], estimate: &[C64]) -> f64 {
    let n = reference.len().min(estimate.len());
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let est = &estimate[..n];
    permute(&mut idx, 0, &mut |perm| {
        let d = (0..n)
            .map(|i| (reference[i] - est[perm[i]]).norm())
            .fold(0.0f64, f64::max);
        if d < best {
            best = d;
        }
    });
    best
}

pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.gen::<u32>() & 1) as u8).collect()
}

/// Chains symbols into a continuous frame: per symbol the body is rotated to
/// start at its amplitude minimum, the cyclic prefix is prepended, and a
/// per-instance phase factor keeps the boundary phase continuous to within one
/// sample's phase slope. The optional preamble is one symbol period. The
/// output is scaled to the configured launch power.
pub fn assemble_frame(table: &SymbolTable, bits: &[u8], preamble: bool) -> Result<Waveform, DesignError> {
    if bits.len() % 2 != 0 {
        return Err(DesignError::OddBitCount(bits.len()));
    }
    let n_symbols = bits.len() / 2;
    if n_symbols > table.max_frame_symbols {
        return Err(DesignError::TooManySymbols { got: n_symbols, max: table.max_frame_symbols });
    }
    let mut out: Vec<C64> = Vec::with_capacity((n_symbols + 1) * table.samples_per_symbol());
    if preamble {
        out.extend(table.preamble());
    }
    for pair in bits.chunks(2) {
        let label = (pair[0] << 1) | pair[1];
        let sym = table.symbol(label)?;
        let n = sym.body_samples.len();
        let static_phase = C64::new(0.0, sym.phase_offset).exp();
        let mut block: Vec<C64> = Vec::with_capacity(n + sym.cp_len);
        for i in 0..(n + sym.cp_len) {
            // cp_len trailing samples first (the cyclic prefix), then the body
            let k = (sym.join_index + n - sym.cp_len + i) % n;
            block.push(sym.body_samples[k] * static_phase);
        }
        let phi = match out.len() {
            0 | 1 => 0.0,
            len => {
                let last = out[len - 1];
                let prev = out[len - 2];
                let slope = (last * prev.conj()).arg();
                let target = last.arg() + slope;
                let first = block[0];
                wrap_angle(target - first.arg())
            }
        };
        let rot = C64::new(0.0, phi).exp();
        out.extend(block.iter().map(|v| v * rot));
    }
    let mut w = Waveform::new(out, table.sample_rate_hz, Units::Physical);
    let p = w.mean_power();
    if p > 0.0 {
        let scale = (table.launch_power_w() / p).sqrt();
        for v in w.samples.iter_mut() {
            *v *= scale;
        }
    }
    w.center_power_ref = Some(table.launch_power_dbm);
    Ok(w)
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    } else if x < -std::f64::consts::PI {
        x += 2.0 * std::f64::consts::PI;
    }
    x
}

/// Largest boundary phase discontinuity of a frame laid out in
/// `samples_per_symbol` blocks after `offset` samples of preamble.
pub fn max_boundary_phase_jump(samples: &[C64], block: usize, offset: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut pos = offset + block;
    while pos < samples.len() {
        let last = samples[pos - 1];
        let prev = samples[pos - 2];
        let next = samples[pos];
        let slope = (last * prev.conj()).arg();
        let jump = wrap_angle((next * last.conj()).arg() - slope);
        worst = worst.max(jump.abs());
        pos += block;
    }
    worst
}

/// Average power in dBm and the smallest symmetric-about-centroid interval
/// containing 99% of the periodogram energy.
pub fn power_and_bandwidth(w: &Waveform) -> (f64, f64) {
    let power_dbm = 10.0 * (w.mean_power() / 1e-3).log10();
    let p = fft::periodogram(&w.samples);
    let freqs = fft::frequencies(w.samples.len(), w.sample_rate);
    let total: f64 = p.iter().sum();
    let centroid: f64 = p.iter().zip(&freqs).map(|(v, f)| v * f).sum::<f64>() / total;
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| {
        (freqs[i] - centroid)
            .abs()
            .partial_cmp(&(freqs[j] - centroid).abs())
            .unwrap()
    });
    let mut acc = 0.0;
    let mut half_width = 0.0;
    for &i in &order {
        acc += p[i];
        half_width = (freqs[i] - centroid).abs().max(half_width);
        if acc >= 0.99 * total {
            break;
        }
    }
    (power_dbm, 2.0 * half_width)
}
