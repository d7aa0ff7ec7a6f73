//! Front end: audio buffers, excitation sweeps, deconvolution and
//! octave-band filtering.

mod filterbank;
mod sweep;
mod wav;

pub use filterbank::{octave_filterbank, BandDefinition, BandFraction, Biquad, BandFilter};
pub use sweep::{
    deconvolve, deconvolve_with, detect_onset, fft_convolve, generate_ess, DeconvolutionOptions,
    SweepSpec,
};
pub use wav::{load_audio, load_audio_channel, write_wav_f32, write_wav_i16};

use crate::error::{Error, Result};

/// Mono sample sequence normalized to full scale (1.0 = 0 dBFS peak).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// dB SPL indicated by a signal at 0 dBFS RMS (a full-scale sine).
    pub calibration_offset: Option<f64>,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioBuffer { samples, sample_rate, calibration_offset: None }
    }

    pub fn with_calibration(mut self, offset_db: f64) -> Self {
        self.calibration_offset = Some(offset_db);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Checks the invariants every analysis operation relies on.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(())
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer { samples, sample_rate: self.sample_rate, calibration_offset: self.calibration_offset }
    }
}

/// A measured or synthesized room response between one source and one
/// receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub buffer: AudioBuffer,
    /// Index of the detected direct-sound arrival.
    pub onset_index: usize,
    pub source_position: String,
    pub receiver_position: String,
    /// Source-receiver distance in meters.
    pub distance: Option<f64>,
}

impl ImpulseResponse {
    /// Wraps a buffer, locating the onset with the default threshold.
    pub fn from_buffer(buffer: AudioBuffer) -> Result<Self> {
        buffer.validate()?;
        let onset_index = detect_onset(&buffer.samples, DeconvolutionOptions::default().onset_threshold_db)?;
        Ok(ImpulseResponse {
            buffer,
            onset_index,
            source_position: String::new(),
            receiver_position: String::new(),
            distance: None,
        })
    }

    pub fn with_positions(mut self, source: impl Into<String>, receiver: impl Into<String>) -> Self {
        self.source_position = source.into();
        self.receiver_position = receiver.into();
        self
    }

    pub fn with_distance(mut self, meters: f64) -> Self {
        self.distance = Some(meters);
        self
    }
}
