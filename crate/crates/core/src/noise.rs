//! Ambient-noise band levels and A-weighted totals from calibrated
//! recordings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{octave_filterbank, AudioBuffer, BandDefinition};

/// Default Leq integration window, seconds.
pub const DEFAULT_INTEGRATION_TIME: f64 = 15.0;

/// Per-band levels in dB SPL re 20 µPa. Silent bands are `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpectrum {
    pub band_centers: Vec<f64>,
    #[serde(with = "crate::sentinel::vec")]
    pub levels: Vec<f64>,
    pub integration_time: f64,
    #[serde(default)]
    pub label: String,
}

impl BandSpectrum {
    pub fn new(band_centers: Vec<f64>, levels: Vec<f64>, integration_time: f64, label: impl Into<String>) -> Result<Self> {
        if band_centers.len() != levels.len() {
            return Err(Error::InvalidInput("one level per band center required".into()));
        }
        if band_centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("band centers must be strictly increasing".into()));
        }
        if levels.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::InvalidInput("band levels must be finite or -inf".into()));
        }
        if !(integration_time > 0.0) {
            return Err(Error::InvalidInput("integration time must be positive".into()));
        }
        Ok(BandSpectrum { band_centers, levels, integration_time, label: label.into() })
    }

    /// Adds `delta` dB to every band.
    pub fn shifted(&self, delta: f64) -> BandSpectrum {
        BandSpectrum { levels: self.levels.iter().map(|l| l + delta).collect(), ..self.clone() }
    }
}

/// Equivalent continuous level per band over the first `duration` seconds.
///
/// Levels are relative to a full-scale sine (0 dBFS RMS), shifted by the
/// recording's calibration offset.
pub fn band_leq(recording: &AudioBuffer, bands: &BandDefinition, duration: f64) -> Result<BandSpectrum> {
    let offset = recording.calibration_offset.ok_or(Error::MissingCalibration)?;
    recording.validate()?;
    if !(duration > 0.0) {
        return Err(Error::InvalidInput("integration time must be positive".into()));
    }
    let n = (duration * recording.sample_rate as f64).round() as usize;
    if n > recording.len() {
        return Err(Error::RecordingTooShort { available: recording.duration(), requested: duration });
    }
    let window = recording.with_samples(recording.samples[..n].to_vec());
    let levels = octave_filterbank(&window, bands)?
        .iter()
        .map(|band| {
            let mean_square = band.samples.iter().map(|v| v * v).sum::<f64>() / n as f64;
            10.0 * (2.0 * mean_square).log10() + offset
        })
        .collect();
    Ok(BandSpectrum {
        band_centers: bands.center_frequencies.clone(),
        levels,
        integration_time: duration,
        label: String::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AWeight {
    pub center: f64,
    pub weight_db: f64,
}

/// A-weighting corrections per nominal band center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AWeighting {
    pub table: Vec<AWeight>,
}

/// IEC 61672-1 A-weighting at third-octave nominal centers, 10 Hz to 20 kHz.
const IEC_61672_A: [(f64, f64); 34] = [
    (10.0, -70.4), (12.5, -63.4), (16.0, -56.7), (20.0, -50.5), (25.0, -44.7), (31.5, -39.4),
    (40.0, -34.6), (50.0, -30.2), (63.0, -26.2), (80.0, -22.5), (100.0, -19.1), (125.0, -16.1),
    (160.0, -13.4), (200.0, -10.9), (250.0, -8.6), (315.0, -6.6), (400.0, -4.8), (500.0, -3.2),
    (630.0, -1.9), (800.0, -0.8), (1000.0, 0.0), (1250.0, 0.6), (1600.0, 1.0), (2000.0, 1.2),
    (2500.0, 1.3), (3150.0, 1.2), (4000.0, 1.0), (5000.0, 0.5), (6300.0, -0.1), (8000.0, -1.1),
    (10000.0, -2.5), (12500.0, -4.3), (16000.0, -6.6), (20000.0, -9.3),
];

impl Default for AWeighting {
    fn default() -> Self {
        AWeighting { table: IEC_61672_A.iter().map(|&(center, weight_db)| AWeight { center, weight_db }).collect() }
    }
}

impl AWeighting {
    pub fn weight(&self, center: f64) -> Result<f64> {
        self.table
            .iter()
            .find(|w| (w.center / center - 1.0).abs() < 0.01)
            .map(|w| w.weight_db)
            .ok_or(Error::UnknownBand(center))
    }

    /// Energetic sum of the A-weighted band levels. An empty spectrum gives
    /// `-inf`.
    pub fn total(&self, spectrum: &BandSpectrum) -> Result<f64> {
        let mut energy = 0.0;
        for (&center, &level) in spectrum.band_centers.iter().zip(&spectrum.levels) {
            energy += 10f64.powf((level + self.weight(center)?) / 10.0);
        }
        Ok(10.0 * energy.log10())
    }
}

/// A-weighted single-number level, dB(A), with the standard table.
pub fn a_weighted_level(spectrum: &BandSpectrum) -> Result<f64> {
    AWeighting::default().total(spectrum)
}
