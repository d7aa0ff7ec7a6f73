//! Fractional-octave band-pass filter bank.
//!
//! Each band is a 6th-order Butterworth band-pass (3rd-order prototype)
//! split into three biquads, designed by bilinear transform with
//! pre-warped band edges. Band edges follow the base-10 system:
//! `f_m = 1000 * 10^(3x / 10b)`, edges at `f_m * 10^(±3 / 20b)`.

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::AudioBuffer;
use crate::error::{Error, Result};

const PROTOTYPE_ORDER: usize = 3;

/// Bands at or below this center are filtered time-reversed.
const REVERSED_FILTER_MAX_CENTER: f64 = 250.0;

pub const OCTAVE_NOMINAL: [f64; 10] =
    [31.5, 63.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0];

pub const THIRD_OCTAVE_NOMINAL: [f64; 30] = [
    25.0, 31.5, 40.0, 50.0, 63.0, 80.0, 100.0, 125.0, 160.0, 200.0, 250.0, 315.0, 400.0, 500.0,
    630.0, 800.0, 1000.0, 1250.0, 1600.0, 2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0,
    10000.0, 12500.0, 16000.0, 20000.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandFraction {
    Octave,
    Third,
}

impl BandFraction {
    fn bands_per_octave(self) -> f64 {
        match self {
            BandFraction::Octave => 1.0,
            BandFraction::Third => 3.0,
        }
    }
}

/// A set of nominal band centers and their fractional-octave width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub center_frequencies: Vec<f64>,
    pub fraction: BandFraction,
}

impl BandDefinition {
    pub fn new(center_frequencies: Vec<f64>, fraction: BandFraction) -> Result<Self> {
        if center_frequencies.is_empty() {
            return Err(Error::EmptyInput);
        }
        if center_frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidInput("band centers must be positive".into()));
        }
        if center_frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("band centers must be strictly increasing".into()));
        }
        Ok(BandDefinition { center_frequencies, fraction })
    }

    /// Octave bands with nominal centers from `lo` to `hi` inclusive.
    pub fn octaves(lo: f64, hi: f64) -> Self {
        Self::from_table(&OCTAVE_NOMINAL, lo, hi, BandFraction::Octave)
    }

    /// Third-octave bands with nominal centers from `lo` to `hi` inclusive.
    pub fn third_octaves(lo: f64, hi: f64) -> Self {
        Self::from_table(&THIRD_OCTAVE_NOMINAL, lo, hi, BandFraction::Third)
    }

    /// 63 Hz to 8 kHz octaves, used for decay parameters.
    pub fn room_octaves() -> Self {
        Self::octaves(63.0, 8000.0)
    }

    /// The seven STI octaves, 125 Hz to 8 kHz.
    pub fn sti_octaves() -> Self {
        Self::octaves(125.0, 8000.0)
    }

    fn from_table(table: &[f64], lo: f64, hi: f64, fraction: BandFraction) -> Self {
        let center_frequencies = table.iter().copied().filter(|f| *f >= lo && *f <= hi).collect();
        BandDefinition { center_frequencies, fraction }
    }

    pub fn len(&self) -> usize {
        self.center_frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_frequencies.is_empty()
    }

    /// Exact (base-10) midband frequency for a nominal center. Centers that
    /// are not close to a standard band are used as given.
    pub fn exact_center(&self, nominal: f64) -> f64 {
        let b = self.fraction.bands_per_octave();
        let x = (10.0 * b / 3.0 * (nominal / 1000.0).log10()).round();
        let exact = 1000.0 * 10f64.powf(3.0 * x / (10.0 * b));
        if (exact / nominal - 1.0).abs() < 0.06 {
            exact
        } else {
            nominal
        }
    }

    /// Lower and upper band edges in Hz for the band at `index`.
    pub fn edges(&self, index: usize) -> (f64, f64) {
        let fm = self.exact_center(self.center_frequencies[index]);
        let half = 10f64.powf(3.0 / (20.0 * self.fraction.bands_per_octave()));
        (fm / half, fm * half)
    }
}

/// Second-order IIR section, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    fn run(&self, samples: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for x in samples.iter_mut() {
            let y = self.b0 * *x + s1;
            s1 = self.b1 * *x - self.a1 * y + s2;
            s2 = self.b2 * *x - self.a2 * y;
            *x = y;
        }
    }
}

/// One band of the filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFilter {
    pub center: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub sections: Vec<Biquad>,
    pub time_reversed: bool,
}

impl BandFilter {
    pub fn design(bands: &BandDefinition, index: usize, sample_rate: u32) -> Result<Self> {
        let center = bands.center_frequencies[index];
        let (lower_edge, upper_edge) = bands.edges(index);
        let nyquist = sample_rate as f64 / 2.0;
        if upper_edge >= nyquist {
            return Err(Error::BandAboveNyquist { center, upper: upper_edge, nyquist });
        }
        let sections = butterworth_bandpass(PROTOTYPE_ORDER, lower_edge, upper_edge, sample_rate as f64);
        Ok(BandFilter {
            center,
            lower_edge,
            upper_edge,
            sections,
            time_reversed: center <= REVERSED_FILTER_MAX_CENTER,
        })
    }

    /// Magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, sample_rate: u32) -> f64 {
        let omega = 2.0 * PI * freq / sample_rate as f64;
        self.sections.iter().map(|s| s.response(omega)).product::<Complex64>().norm()
    }

    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = samples.to_vec();
        if self.time_reversed {
            out.reverse();
        }
        for section in &self.sections {
            section.run(&mut out);
        }
        if self.time_reversed {
            out.reverse();
        }
        out
    }
}

/// Splits `buffer` into one band-limited buffer per band of `bands`.
pub fn octave_filterbank(buffer: &AudioBuffer, bands: &BandDefinition) -> Result<Vec<AudioBuffer>> {
    let filters = (0..bands.len())
        .map(|i| BandFilter::design(bands, i, buffer.sample_rate))
        .collect::<Result<Vec<_>>>()?;
    Ok(filters.iter().map(|f| buffer.with_samples(f.apply(&buffer.samples))).collect())
}

fn butterworth_bandpass(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> Vec<Biquad> {
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (w_lo, w_hi) = (warp(f_lo), warp(f_hi));
    let w0 = (w_lo * w_hi).sqrt();
    let bw = w_hi - w_lo;
    let n = order as f64;

    let mut analog_poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
        let root = (p * p - w0 * w0).sqrt();
        analog_poles.push(p + root);
        analog_poles.push(p - root);
    }

    // unity at the exact digital mid-band frequency, not the warped one
    let center_omega = 2.0 * PI * (f_lo * f_hi).sqrt() / fs;
    analog_poles
        .into_iter()
        .filter(|p| p.im > 0.0)
        .map(|s| {
            let z = (2.0 * fs + s) / (2.0 * fs - s);
            let mut section = Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1: -2.0 * z.re, a2: z.norm_sqr() };
            let gain = 1.0 / section.response(center_omega).norm();
            section.b0 *= gain;
            section.b2 *= gain;
            section
        })
        .collect()
}
