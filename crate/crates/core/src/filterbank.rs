//! Biomimetic filter bank: causal damped-sinusoid kernels
//! `h(t) = c e^{Im(ω) t} sin(Re(ω) t)` for `t ≥ 0` and the channel outputs
//! `a_n = s * h[ω_n]`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRUNC_TOL: f64 = 1e-6;

/// Upper limit on stored kernel samples.
pub const MAX_KERNEL_SAMPLES: usize = 50_000_000;

/// Products `signal length × kernel length` above which [`ConvolutionMethod::Auto`]
/// switches to the FFT path.
const DIRECT_WORK_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Fixed amplitude `c_n`.
    Amplitude(f64),
    /// `c_n` chosen so that the stored samples have unit Euclidean norm.
    UnitL2,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::Amplitude(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub omega: Complex64,
    pub c_n: f64,
    pub sample_rate: f64,
    /// `h(k / sample_rate)` for `k = 0..len`.
    pub samples: Vec<f64>,
    /// Time at which the envelope `e^{Im(ω) t}` reaches `trunc_tol`.
    pub truncation_time: f64,
    pub trunc_tol: f64,
}

impl Kernel {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same kernel and amplitude sampled over exactly `len` samples.
    pub fn with_length(&self, len: usize) -> Kernel {
        let dt = 1.0 / self.sample_rate;
        Kernel {
            samples: (0..len)
                .map(|k| self.c_n * unit_kernel(self.omega, k as f64 * dt))
                .collect(),
            ..self.clone()
        }
    }
}

/// `e^{Im(ω) t} sin(Re(ω) t)`.
fn unit_kernel(omega: Complex64, t: f64) -> f64 {
    (omega.im * t).exp() * (omega.re * t).sin()
}

fn check_omega(omega: Complex64) -> Result<()> {
    if !(omega.re.is_finite() && omega.im.is_finite()) {
        return Err(Error::invalid("omega must be finite"));
    }
    if omega.im >= 0.0 {
        return Err(Error::invalid(format!(
            "Im(omega) = {} must be < 0 for a decaying kernel",
            omega.im
        )));
    }
    Ok(())
}

/// Samples the kernel of `omega` at `sample_rate`, keeping every sample
/// with `t ≤ ln(1/trunc_tol) / |Im ω|`.
pub fn make_kernel(omega: Complex64, sample_rate: f64, trunc_tol: f64, normalization: Normalization) -> Result<Kernel> {
    check_omega(omega)?;
    if omega.re <= 0.0 {
        return Err(Error::invalid(format!("Re(omega) = {} must be > 0", omega.re)));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    let nyquist_min = 2.0 * omega.re / (2.0 * PI);
    if sample_rate <= nyquist_min {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate} Hz is below the Nyquist rate {nyquist_min} Hz for Re(omega)/2pi"
        )));
    }
    if !(trunc_tol > 0.0 && trunc_tol < 1.0) {
        return Err(Error::invalid(format!("trunc_tol must be in (0, 1), got {trunc_tol}")));
    }
    let truncation_time = (1.0 / trunc_tol).ln() / omega.im.abs();
    let count = (truncation_time * sample_rate).floor() + 1.0;
    if count > MAX_KERNEL_SAMPLES as f64 {
        return Err(Error::invalid(format!(
            "kernel for omega = {omega} needs {count:.3e} samples (limit {MAX_KERNEL_SAMPLES}); raise trunc_tol or lower the sample rate"
        )));
    }
    let dt = 1.0 / sample_rate;
    let unit: Vec<f64> = (0..count as usize).map(|k| unit_kernel(omega, k as f64 * dt)).collect();
    let c_n = match normalization {
        Normalization::Amplitude(c) => {
            if !c.is_finite() {
                return Err(Error::invalid("kernel amplitude must be finite"));
            }
            c
        }
        Normalization::UnitL2 => {
            let norm = unit.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::invalid("kernel has zero norm at this sample rate"));
            }
            1.0 / norm
        }
    };
    Ok(Kernel {
        omega,
        c_n,
        sample_rate,
        samples: unit.into_iter().map(|x| c_n * x).collect(),
        truncation_time,
        trunc_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!("sample rate must be > 0, got {sample_rate}")));
        }
        if let Some(k) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("signal sample {k} is not finite")));
        }
        Ok(Signal { samples, sample_rate })
    }

    /// Discrete unit impulse: `fs` at `t = 0` (unit area), zeros after.
    pub fn impulse(len: usize, sample_rate: f64) -> Result<Self> {
        let mut samples = vec![0.0; len.max(1)];
        samples[0] = sample_rate;
        Signal::new(samples, sample_rate)
    }

    /// `sin(2π f t)` sampled at `sample_rate`.
    pub fn tone(frequency_hz: f64, len: usize, sample_rate: f64) -> Result<Self> {
        let samples = (0..len)
            .map(|k| (2.0 * PI * frequency_hz * k as f64 / sample_rate).sin())
            .collect();
        Signal::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Rectangle-rule `∫|s| dt`.
    pub fn l1_norm(&self) -> f64 {
        self.samples.iter().map(|x| x.abs()).sum::<f64>() / self.sample_rate
    }

    /// The signal delayed by `k` samples (zeros prepended).
    pub fn delayed(&self, k: usize) -> Signal {
        let mut samples = vec![0.0; k];
        samples.extend_from_slice(&self.samples);
        Signal {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Time-domain sums; the reference path.
    Direct,
    /// Zero-padded FFT convolution.
    Fft,
    /// Direct for short inputs, FFT otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformOutput {
    pub sample_rate: f64,
    /// One output `a_n[s]` per kernel, each of length
    /// `signal length + kernel length - 1`.
    pub channels: Vec<Vec<f64>>,
}

pub fn apply_transform(signal: &Signal, kernels: &[Kernel]) -> Result<TransformOutput> {
    apply_transform_with(signal, kernels, ConvolutionMethod::Auto)
}

/// Causal discrete convolution of `signal` with every kernel, scaled by
/// `1 / sample_rate`.
pub fn apply_transform_with(signal: &Signal, kernels: &[Kernel], method: ConvolutionMethod) -> Result<TransformOutput> {
    for (n, k) in kernels.iter().enumerate() {
        if k.sample_rate != signal.sample_rate {
            return Err(Error::invalid(format!(
                "kernel {} sample rate {} Hz differs from signal sample rate {} Hz",
                n + 1,
                k.sample_rate,
                signal.sample_rate
            )));
        }
        if k.is_empty() {
            return Err(Error::invalid(format!("kernel {} is empty", n + 1)));
        }
    }
    if signal.is_empty() {
        return Err(Error::invalid("signal is empty"));
    }
    let dt = 1.0 / signal.sample_rate;
    let channels = kernels
        .par_iter()
        .map(|k| {
            let use_fft = match method {
                ConvolutionMethod::Direct => false,
                ConvolutionMethod::Fft => true,
                ConvolutionMethod::Auto => signal.len().saturating_mul(k.len()) > DIRECT_WORK_LIMIT,
            };
            let mut out = if use_fft {
                convolve_fft(&signal.samples, &k.samples)
            } else {
                convolve_direct(&signal.samples, &k.samples)
            };
            out.iter_mut().for_each(|y| *y *= dt);
            out
        })
        .collect();
    Ok(TransformOutput {
        sample_rate: signal.sample_rate,
        channels,
    })
}

fn convolve_direct(s: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.len() + h.len() - 1];
    for (j, &x) in s.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (y, &hk) in out[j..j + h.len()].iter_mut().zip(h) {
            *y += x * hk;
        }
    }
    out
}

fn convolve_fft(s: &[f64], h: &[f64]) -> Vec<f64> {
    let len = s.len() + h.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let pad = |x: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        buf
    };
    let mut a = pad(s);
    let mut b = pad(h);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);
    let mut out: Vec<f64> = a[..len].iter().map(|z| z.re / size as f64).collect();
    // the output is exactly zero before the first nonzero input sample
    let first = s.iter().position(|&x| x != 0.0).unwrap_or(s.len());
    out[..first.min(len)].iter_mut().for_each(|y| *y = 0.0);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub freqs_hz: Vec<f64>,
    /// One-sided DFT magnitude with unit Euclidean norm.
    pub magnitude: Vec<f64>,
    pub peak_hz: f64,
    /// Width of the band around the peak where `magnitude² ≥ peak² / 2`.
    pub half_power_bandwidth_hz: f64,
    pub bin_width_hz: f64,
}

/// One-sided magnitude spectrum of the zero-padded kernel.
pub fn frequency_response(kernel: &Kernel) -> Result<FrequencyResponse> {
    if kernel.is_empty() {
        return Err(Error::invalid("kernel is empty"));
    }
    let size = (4 * kernel.len()).max(16384).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &h) in buf.iter_mut().zip(&kernel.samples) {
        b.re = h;
    }
    FftPlanner::<f64>::new().plan_fft_forward(size).process(&mut buf);
    let bins = size / 2 + 1;
    let mut magnitude: Vec<f64> = buf[..bins].iter().map(|z| z.norm()).collect();
    let norm = magnitude.iter().map(|m| m * m).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::invalid("kernel has zero spectrum"));
    }
    magnitude.iter_mut().for_each(|m| *m /= norm);
    let bin_width_hz = kernel.sample_rate / size as f64;
    let freqs_hz: Vec<f64> = (0..bins).map(|k| k as f64 * bin_width_hz).collect();
    let peak = (0..bins)
        .max_by(|&a, &b| magnitude[a].total_cmp(&magnitude[b]))
        .unwrap_or(0);
    let half = magnitude[peak] * magnitude[peak] / 2.0;
    let power = |k: usize| magnitude[k] * magnitude[k];
    // linear interpolation of the power at the half-power crossings
    let mut lo = peak;
    while lo > 0 && power(lo - 1) >= half {
        lo -= 1;
    }
    let left = if lo == 0 {
        0.0
    } else {
        let (p0, p1) = (power(lo - 1), power(lo));
        freqs_hz[lo - 1] + (half - p0) / (p1 - p0) * bin_width_hz
    };
    let mut hi = peak;
    while hi + 1 < bins && power(hi + 1) >= half {
        hi += 1;
    }
    let right = if hi + 1 == bins {
        freqs_hz[hi]
    } else {
        let (p0, p1) = (power(hi), power(hi + 1));
        freqs_hz[hi] + (p0 - half) / (p0 - p1) * bin_width_hz
    };
    Ok(FrequencyResponse {
        peak_hz: freqs_hz[peak],
        half_power_bandwidth_hz: right - left,
        freqs_hz,
        magnitude,
        bin_width_hz,
    })
}

/// `(√2 / (c e)) |ω_old - ω_new| ‖s‖₁`, valid when both imaginary parts
/// are at most `-c`.
pub fn stability_bound(omega_old: Complex64, omega_new: Complex64, c: f64, s_l1: f64) -> Result<f64> {
    check_decay_floor(omega_old, omega_new, c)?;
    if !(s_l1.is_finite() && s_l1 >= 0.0) {
        return Err(Error::invalid(format!("signal L1 norm must be >= 0, got {s_l1}")));
    }
    Ok(2f64.sqrt() / (c * E) * (omega_old - omega_new).norm() * s_l1)
}

fn check_decay_floor(omega_old: Complex64, omega_new: Complex64, c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("decay floor c must be > 0, got {c}")));
    }
    for (name, w) in [("omega_old", omega_old), ("omega_new", omega_new)] {
        check_omega(w)?;
        if w.im > -c {
            return Err(Error::invalid(format!(
                "{name} has Im = {} above the decay floor -{c}",
                w.im
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDifference {
    /// `max_k |h_old(t_k) - h_new(t_k)|` with unit amplitude.
    pub sampled_sup: f64,
    /// `(|ΔIm ω| + |ΔRe ω|) / (c e)`.
    pub analytic_bound: f64,
    pub within_bound: bool,
}

/// Sup-norm difference of two unit-amplitude kernels on the grid
/// `k / sample_rate`, out to where both envelopes fall below `1e-16`.
pub fn kernel_sup_difference(
    omega_old: Complex64,
    omega_new: Complex64,
    c: f64,
    sample_rate: f64,
) -> Result<KernelDifference> {
    check_decay_floor(omega_old, omega_new, c)?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    let horizon = 1e16f64.ln() / c;
    let count = (horizon * sample_rate).ceil() + 1.0;
    if count > MAX_KERNEL_SAMPLES as f64 {
        return Err(Error::invalid("grid too long; lower the sample rate"));
    }
    let dt = 1.0 / sample_rate;
    let sampled_sup = (0..count as usize)
        .map(|k| {
            let t = k as f64 * dt;
            (unit_kernel(omega_old, t) - unit_kernel(omega_new, t)).abs()
        })
        .fold(0.0, f64::max);
    let delta = omega_old - omega_new;
    let analytic_bound = (delta.im.abs() + delta.re.abs()) / (c * E);
    Ok(KernelDifference {
        sampled_sup,
        analytic_bound,
        within_bound: sampled_sup <= analytic_bound,
    })
}

/// Maximizer and maximum of `t e^{-ct}` over `t > 0`, located by
/// golden-section search on `[0, 20/c]`.
pub fn envelope_peak(c: f64) -> Result<(f64, f64)> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("c must be > 0, got {c}")));
    }
    let f = |t: f64| t * (-c * t).exp();
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 20.0 / c);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
        if b - a < 1e-14 / c {
            break;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)))
}

/// Half-power band `[Re ω/2π - |Im ω|/2π, Re ω/2π + |Im ω|/2π]` in Hz.
pub fn half_power_band(omega: Complex64) -> (f64, f64) {
    let center = omega.re / (2.0 * PI);
    let half = omega.im.abs() / (2.0 * PI);
    (center - half, center + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandGap {
    /// Channels (1-based, in the input order) whose bands bracket the gap.
    pub below: usize,
    pub above: usize,
    pub start_hz: f64,
    pub end_hz: f64,
}

/// Gaps in the union of half-power bands, scanning in order of increasing
/// `Re ω`.
pub fn band_gaps(omegas: &[Complex64]) -> Vec<BandGap> {
    let mut order: Vec<usize> = (0..omegas.len()).collect();
    order.sort_by(|&a, &b| omegas[a].re.total_cmp(&omegas[b].re));
    let mut gaps = Vec::new();
    let mut reach: Option<(f64, usize)> = None;
    for &i in &order {
        let (lo, hi) = half_power_band(omegas[i]);
        match reach {
            Some((edge, owner)) if lo > edge => {
                gaps.push(BandGap {
                    below: owner + 1,
                    above: i + 1,
                    start_hz: edge,
                    end_hz: lo,
                });
                reach = Some((hi, i));
            }
            Some((edge, _)) if hi <= edge => {}
            _ => reach = Some((hi, i)),
        }
    }
    gaps
}
