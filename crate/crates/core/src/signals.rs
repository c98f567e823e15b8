//! Signal preprocessing: record alignment, sensor-frame rotation, decimation,
//! output-correlation estimation, and correlation spectra.
//!
//! The correlation stage treats output auto/cross-correlations against a
//! reference channel as impulse-response-like free decays, which is what the
//! downstream identifiers consume.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw multichannel record on its own (possibly non-uniform) time base.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub name: String,
    /// Sample instants in seconds; duplicates allowed on input and dropped
    /// (first occurrence kept) before any use.
    pub timestamps: Vec<f64>,
    /// One row per channel, each with `timestamps.len()` samples.
    pub samples: Vec<Vec<f64>>,
    pub channel_labels: Vec<String>,
}

/// Uniformly sampled multichannel time series.
#[derive(Debug, Clone)]
pub struct TimeSeriesSet {
    /// Sample step in seconds.
    pub dt: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
    /// One row per channel.
    pub data: Vec<Vec<f64>>,
    pub channel_labels: Vec<String>,
}

impl TimeSeriesSet {
    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.dt
    }
}

/// Yaw-pitch-roll angles in radians.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RotationAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl RotationAngles {
    /// Aerospace yaw-pitch-roll direction cosine matrix (rows map local
    /// x,y,z onto the common frame).
    pub fn dcm(&self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        [
            [cy * cp, sy * cp, -sp],
            [cy * sp * sr - sy * cr, sy * sp * sr + cy * cr, cp * sr],
            [cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr],
        ]
    }
}

/// How finite-window correlation sums are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationNorm {
    /// Divide every lag by the record length N (the 1/T estimator). On fully
    /// decayed deterministic records this leaves the decay rates of the data
    /// untouched, so it is the default.
    #[default]
    Biased,
    /// Divide lag l by N - l. Unbiased for stationary records but tilts the
    /// apparent decay of transient ones by exp(+l/N).
    Unbiased,
}

/// Correlation decays R_{y_i y_ref}(l) for non-negative lags.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    pub dt: f64,
    pub reference_channel: usize,
    /// One row per channel, `lags` columns (l = 0..lags-1).
    pub data: Vec<Vec<f64>>,
}

impl CorrelationSet {
    pub fn channels(&self) -> usize {
        self.data.len()
    }

    /// Count of stored non-negative lags.
    pub fn lags(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }
}

/// Complex frequency-domain samples on a shared grid.
#[derive(Debug, Clone)]
pub struct SpectrumSet {
    /// Strictly increasing, non-negative frequencies in Hz.
    pub freqs: Vec<f64>,
    /// One row per channel.
    pub data: Vec<Vec<Complex64>>,
}

impl SpectrumSet {
    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Laplace-variable samples s_k = i 2 pi f_k.
    pub fn s_values(&self) -> Vec<Complex64> {
        self.freqs
            .iter()
            .map(|f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))
            .collect()
    }
}

/// Snap tolerance when an interpolation target lands on a source stamp.
const TIME_SNAP: f64 = 1e-9;

/// Resample every channel of every record onto one uniform grid covering the
/// intersection of the record spans, by linear interpolation. Duplicate
/// timestamps are dropped (first occurrence kept) before interpolating.
pub fn ingest_and_align(records: &[RawRecord], target_rate: f64) -> Result<TimeSeriesSet> {
    if !(target_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("no records supplied".into()));
    }
    let mut deduped: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::with_capacity(records.len());
    for rec in records {
        if rec.timestamps.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "record {} has fewer than two samples",
                rec.name
            )));
        }
        for (c, ch) in rec.samples.iter().enumerate() {
            if ch.len() != rec.timestamps.len() {
                return Err(Error::InvalidInput(format!(
                    "record {} channel {c}: {} samples for {} timestamps",
                    rec.name,
                    ch.len(),
                    rec.timestamps.len()
                )));
            }
        }
        let mut ts = Vec::with_capacity(rec.timestamps.len());
        let mut cols: Vec<usize> = Vec::with_capacity(rec.timestamps.len());
        for (i, &t) in rec.timestamps.iter().enumerate() {
            if ts.last().is_some_and(|&last| t == last) {
                continue; // duplicate stamp: keep first occurrence
            }
            ts.push(t);
            cols.push(i);
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotonicTimestamps(rec.name.clone()));
        }
        let chans: Vec<Vec<f64>> = rec
            .samples
            .iter()
            .map(|ch| cols.iter().map(|&i| ch[i]).collect())
            .collect();
        deduped.push((ts, chans));
    }

    let t_start = deduped
        .iter()
        .map(|(ts, _)| ts[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let t_end = deduped
        .iter()
        .map(|(ts, _)| *ts.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    if t_end - t_start <= 0.0 {
        return Err(Error::NoOverlap);
    }
    let dt = 1.0 / target_rate;
    let n = ((t_end - t_start) / dt + TIME_SNAP).floor() as usize + 1;

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (rec, (ts, chans)) in records.iter().zip(&deduped) {
        for (ch, label) in chans.iter().zip(&rec.channel_labels) {
            let mut out = Vec::with_capacity(n);
            let mut j = 0usize;
            for k in 0..n {
                let t = t_start + k as f64 * dt;
                while j + 2 < ts.len() && ts[j + 1] <= t {
                    j += 1;
                }
                out.push(interp_segment(ts, ch, j, t));
            }
            data.push(out);
            labels.push(label.clone());
        }
    }
    Ok(TimeSeriesSet {
        dt,
        t0: t_start,
        data,
        channel_labels: labels,
    })
}

fn interp_segment(ts: &[f64], values: &[f64], j: usize, t: f64) -> f64 {
    let (t0, t1) = (ts[j], ts[j + 1]);
    if (t - t0).abs() <= TIME_SNAP {
        return values[j];
    }
    if (t - t1).abs() <= TIME_SNAP {
        return values[j + 1];
    }
    let u = (t - t0) / (t1 - t0);
    values[j] + u * (values[j + 1] - values[j])
}

/// Rotate sensor triads into the common frame with the yaw-pitch-roll DCM.
/// Channels not named by any triad pass through untouched.
pub fn apply_rotation(
    ts: &TimeSeriesSet,
    triads: &[([usize; 3], RotationAngles)],
) -> Result<TimeSeriesSet> {
    let nch = ts.channels();
    let mut seen = vec![false; nch];
    for (idx, angles) in triads {
        for &i in idx {
            if i >= nch {
                return Err(Error::ChannelOutOfRange {
                    index: i,
                    channels: nch,
                });
            }
            if seen[i] {
                return Err(Error::OverlappingTriads(i));
            }
            seen[i] = true;
        }
        if idx[0] == idx[1] || idx[0] == idx[2] || idx[1] == idx[2] {
            return Err(Error::InvalidConfig(format!(
                "triad indexes a channel twice: {idx:?}"
            )));
        }
        if !(angles.yaw.is_finite() && angles.pitch.is_finite() && angles.roll.is_finite()) {
            return Err(Error::InvalidConfig("non-finite rotation angle".into()));
        }
    }
    let mut out = ts.clone();
    for ([i, j, k], angles) in triads {
        let r = angles.dcm();
        for t in 0..ts.samples() {
            let v = [ts.data[*i][t], ts.data[*j][t], ts.data[*k][t]];
            out.data[*i][t] = r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2];
            out.data[*j][t] = r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2];
            out.data[*k][t] = r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2];
        }
    }
    Ok(out)
}

/// Low-pass (zero-phase windowed-sinc, cutoff 0.8x the new Nyquist) and keep
/// every `factor`-th sample.
pub fn decimate(ts: &TimeSeriesSet, factor: usize) -> Result<TimeSeriesSet> {
    if factor == 0 {
        return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(ts.clone());
    }
    let n = ts.samples();
    if factor * 4 >= n {
        return Err(Error::DecimationFactor { factor, samples: n });
    }
    let taps = anti_alias_taps(factor);
    let mid = taps.len() / 2;
    let n_out = (n - 1) / factor + 1;
    let mut data = Vec::with_capacity(ts.channels());
    for ch in &ts.data {
        let mut out = Vec::with_capacity(n_out);
        for p in 0..n_out {
            let center = p * factor;
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let idx = center as isize + j as isize - mid as isize;
                acc += h * ch[reflect(idx, n)];
            }
            out.push(acc);
        }
        data.push(out);
    }
    Ok(TimeSeriesSet {
        dt: ts.dt * factor as f64,
        t0: ts.t0,
        data,
        channel_labels: ts.channel_labels.clone(),
    })
}

/// Symmetric (hence zero-phase when centered) Blackman windowed-sinc
/// low-pass, cutoff 0.8 * (0.5/factor) cycles per input sample.
fn anti_alias_taps(factor: usize) -> Vec<f64> {
    let fc = 0.4 / factor as f64;
    let mut m = 55 * factor;
    if m % 2 == 1 {
        m += 1;
    }
    let len = m + 1;
    let mid = (m / 2) as isize;
    let mut taps = Vec::with_capacity(len);
    for j in 0..len {
        let k = j as isize - mid;
        let sinc = if k == 0 {
            2.0 * fc
        } else {
            let x = std::f64::consts::PI * k as f64;
            (2.0 * fc * x).sin() / x
        };
        let phase = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let w = 0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos();
        taps.push(sinc * w);
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

fn reflect(mut idx: isize, n: usize) -> usize {
    let last = (n - 1) as isize;
    while idx < 0 || idx > last {
        if idx < 0 {
            idx = -idx;
        }
        if idx > last {
            idx = 2 * last - idx;
        }
    }
    idx as usize
}

/// Output correlations against a reference channel with the default
/// estimator (mean removal on, [`CorrelationNorm::Biased`]).
pub fn next_correlations(
    ts: &TimeSeriesSet,
    reference: usize,
    max_lag: usize,
) -> Result<CorrelationSet> {
    next_correlations_with(ts, reference, max_lag, CorrelationNorm::default(), true)
}

/// Output correlations with explicit estimator choices.
///
/// For each channel i and lag l in [0, max_lag]:
/// R(l) = norm(l) * sum_t y_ref(t) y_i(t + l), computed over the finite
/// record via FFT (identical, up to rounding, to the direct double loop).
pub fn next_correlations_with(
    ts: &TimeSeriesSet,
    reference: usize,
    max_lag: usize,
    norm: CorrelationNorm,
    detrend: bool,
) -> Result<CorrelationSet> {
    let n = ts.samples();
    let nch = ts.channels();
    if reference >= nch {
        return Err(Error::ChannelOutOfRange {
            index: reference,
            channels: nch,
        });
    }
    if max_lag < 2 || max_lag >= n {
        return Err(Error::InvalidConfig(format!(
            "max_lag must satisfy 2 <= max_lag < samples ({n}), got {max_lag}"
        )));
    }
    let mean = |ch: &Vec<f64>| ch.iter().sum::<f64>() / n as f64;
    let centered: Vec<Vec<f64>> = if detrend {
        ts.data
            .iter()
            .map(|ch| {
                let m = mean(ch);
                ch.iter().map(|x| x - m).collect()
            })
            .collect()
    } else {
        ts.data.clone()
    };

    let nfft = (n + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);

    let spectrum = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(nfft)
            .collect();
        fwd.process(&mut buf);
        buf
    };
    let ref_spec = spectrum(&centered[reference]);

    let mut data = Vec::with_capacity(nch);
    for ch in &centered {
        let ch_spec = spectrum(ch);
        let mut cross: Vec<Complex64> = ref_spec
            .iter()
            .zip(&ch_spec)
            .map(|(a, b)| a.conj() * b)
            .collect();
        inv.process(&mut cross);
        let row: Vec<f64> = (0..=max_lag)
            .map(|l| {
                let raw = cross[l].re / nfft as f64;
                match norm {
                    CorrelationNorm::Biased => raw / n as f64,
                    CorrelationNorm::Unbiased => raw / (n - l) as f64,
                }
            })
            .collect();
        data.push(row);
    }
    Ok(CorrelationSet {
        dt: ts.dt,
        reference_channel: reference,
        data,
    })
}

/// One-sided FFT of the positive-lag correlation decays, restricted to a
/// frequency band. The grid spacing is 1/(max_lag * dt) where
/// max_lag = lags - 1, and s_k = i 2 pi f_k.
pub fn correlations_to_spectra(corr: &CorrelationSet, band: (f64, f64)) -> Result<SpectrumSet> {
    let lags = corr.lags();
    if lags < 3 {
        return Err(Error::InvalidInput("need at least 3 correlation lags".into()));
    }
    let (f_min, f_max) = band;
    let nyquist = 0.5 / corr.dt;
    if !(f_min >= 0.0 && f_max > f_min) {
        return Err(Error::InvalidConfig(format!("invalid band [{f_min}, {f_max}]")));
    }
    if f_max > nyquist * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "band upper edge {f_max} Hz above Nyquist {nyquist} Hz"
        )));
    }
    let nfft = lags - 1;
    let df = 1.0 / (nfft as f64 * corr.dt);
    let k_lo = (f_min / df - 1e-9).ceil().max(0.0) as usize;
    let k_hi = ((f_max / df + 1e-9).floor() as usize).min(nfft / 2);
    if k_lo > k_hi {
        return Err(Error::EmptyBand);
    }

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let mut data = Vec::with_capacity(corr.channels());
    for row in &corr.data {
        let mut buf: Vec<Complex64> = row[..nfft]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fwd.process(&mut buf);
        data.push(
            (k_lo..=k_hi)
                .map(|k| buf[k] * corr.dt)
                .collect::<Vec<Complex64>>(),
        );
    }
    let freqs = (k_lo..=k_hi).map(|k| k as f64 * df).collect();
    Ok(SpectrumSet { freqs, data })
}
