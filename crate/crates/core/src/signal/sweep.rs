//! Exponential sine sweep excitation and inverse-filter deconvolution.

use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;
use std::f64::consts::PI;

use super::{AudioBuffer, ImpulseResponse};
use crate::error::{Error, Result};

/// Parameters of an exponential sine sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub f_start: f64,
    pub f_end: f64,
    pub duration: f64,
    pub sample_rate: u32,
    /// Raised-cosine taper length at each end, seconds.
    pub fade: f64,
}

impl SweepSpec {
    pub fn new(f_start: f64, f_end: f64, duration: f64, sample_rate: u32) -> Self {
        SweepSpec { f_start, f_end, duration, sample_rate, fade: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate as f64 / 2.0;
        let fail = |msg: &str| Err(Error::InvalidSpec(msg.to_string()));
        if self.sample_rate == 0 {
            return fail("sample rate must be positive");
        }
        if !(self.f_start > 0.0 && self.f_start < self.f_end && self.f_end <= nyquist) {
            return fail("need 0 < f_start < f_end <= sample_rate / 2");
        }
        if !(self.duration > 0.0) {
            return fail("duration must be positive");
        }
        if !(self.fade >= 0.0 && 2.0 * self.fade < self.duration) {
            return fail("need fade >= 0 and 2 * fade < duration");
        }
        Ok(())
    }

    /// Sweep rate constant `L = duration / ln(f_end / f_start)`.
    fn rate_constant(&self) -> f64 {
        self.duration / (self.f_end / self.f_start).ln()
    }

    /// Instantaneous frequency at time `t` seconds.
    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.f_start * (t / self.rate_constant()).exp()
    }
}

/// Generates the sweep and its inverse filter.
///
/// The inverse filter is the time-reversed sweep with a -6 dB/octave
/// envelope, scaled so the combined response has unit gain at the
/// geometric mean of the sweep range.
pub fn generate_ess(spec: &SweepSpec) -> Result<(AudioBuffer, AudioBuffer)> {
    spec.validate()?;
    let fs = spec.sample_rate as f64;
    let n = (spec.duration * fs).round() as usize;
    let l = spec.rate_constant();
    let fade_len = (spec.fade * fs).round() as usize;

    let sweep: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let phase = 2.0 * PI * spec.f_start * l * ((t / l).exp() - 1.0);
            phase.sin() * taper(i, n, fade_len)
        })
        .collect();

    let mut inverse: Vec<f64> = (0..n)
        .map(|i| sweep[n - 1 - i] * (-(i as f64) / (fs * l)).exp())
        .collect();

    let f_ref = (spec.f_start * spec.f_end).sqrt();
    let gain = (dtft(&sweep, f_ref, fs) * dtft(&inverse, f_ref, fs)).norm();
    for v in &mut inverse {
        *v /= gain;
    }

    Ok((AudioBuffer::new(sweep, spec.sample_rate), AudioBuffer::new(inverse, spec.sample_rate)))
}

fn taper(i: usize, n: usize, fade_len: usize) -> f64 {
    if fade_len == 0 {
        return 1.0;
    }
    let from_edge = i.min(n - 1 - i);
    if from_edge >= fade_len {
        1.0
    } else {
        0.5 * (1.0 - (PI * from_edge as f64 / fade_len as f64).cos())
    }
}

fn dtft(x: &[f64], freq: f64, fs: f64) -> Complex64 {
    let w = -2.0 * PI * freq / fs;
    x.iter()
        .enumerate()
        .map(|(i, &v)| Complex64::from_polar(v, w * i as f64))
        .sum()
}

/// Linear convolution via zero-padded real FFTs.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let spectrum = |x: &[f64]| {
        let mut padded = vec![0.0; n];
        padded[..x.len()].copy_from_slice(x);
        let mut out = forward.make_output_vec();
        forward.process(&mut padded, &mut out).expect("fft length matches plan");
        out
    };
    let fa = spectrum(a);
    let fb = spectrum(b);
    let mut product: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let mut out = inverse.make_output_vec();
    inverse.process(&mut product, &mut out).expect("fft length matches plan");
    out.truncate(out_len);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// First sample whose magnitude exceeds `peak - threshold_db`.
pub fn detect_onset(samples: &[f64], threshold_db: f64) -> Result<usize> {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::NoOnsetDetected);
    }
    let threshold = peak * 10f64.powf(-threshold_db / 20.0);
    samples
        .iter()
        .position(|v| v.abs() > threshold || v.abs() == peak)
        .ok_or(Error::NoOnsetDetected)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvolutionOptions {
    /// Samples kept ahead of the onset, seconds.
    pub pre_roll: f64,
    /// Onset threshold below the absolute peak, dB.
    pub onset_threshold_db: f64,
}

impl Default for DeconvolutionOptions {
    fn default() -> Self {
        DeconvolutionOptions { pre_roll: 0.005, onset_threshold_db: 20.0 }
    }
}

/// Deconvolves a sweep recording with default options.
pub fn deconvolve(recording: &AudioBuffer, inverse_filter: &AudioBuffer) -> Result<ImpulseResponse> {
    deconvolve_with(recording, inverse_filter, &DeconvolutionOptions::default())
}

/// Convolves the recording with the inverse filter and trims the result to
/// start `pre_roll` before the detected onset. Distortion products that
/// land ahead of the onset are discarded with the pre-roll trim.
pub fn deconvolve_with(
    recording: &AudioBuffer,
    inverse_filter: &AudioBuffer,
    options: &DeconvolutionOptions,
) -> Result<ImpulseResponse> {
    if recording.sample_rate != inverse_filter.sample_rate {
        return Err(Error::SampleRateMismatch {
            left: recording.sample_rate,
            right: inverse_filter.sample_rate,
        });
    }
    recording.validate()?;
    inverse_filter.validate()?;
    if recording.len() < inverse_filter.len() {
        return Err(Error::InvalidInput("recording shorter than inverse filter".into()));
    }

    let full = fft_convolve(&recording.samples, &inverse_filter.samples);
    let onset = detect_onset(&full, options.onset_threshold_db)?;
    let pre_roll = (options.pre_roll * recording.sample_rate as f64).round() as usize;
    let start = onset.saturating_sub(pre_roll);
    // The response to a sweep recorded for `recording.len()` samples ends at
    // that index of the full convolution; later samples carry no response.
    let end = (recording.len().max(onset + 1) + pre_roll).min(full.len());

    Ok(ImpulseResponse {
        buffer: recording.with_samples(full[start..end].to_vec()),
        onset_index: onset - start,
        source_position: String::new(),
        receiver_position: String::new(),
        distance: None,
    })
}
