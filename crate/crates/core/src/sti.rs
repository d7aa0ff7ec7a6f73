//! Speech Transmission Index by the indirect (impulse response) method.
//!
//! The modulation transfer function is taken from the squared band IR,
//! reduced by the band signal-to-noise ratio, mapped to effective SNR and
//! transmission indices, and combined with gender-specific weights.
//! Level-dependent auditory masking and the absolute reception threshold
//! are not modeled; results are labeled [`STI_MODEL`].

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::decay::truncation_point;
use crate::error::{Error, Result};
use crate::noise::BandSpectrum;
use crate::signal::{octave_filterbank, AudioBuffer, BandDefinition, ImpulseResponse};

pub const STI_MODEL: &str = "simplified-IEC";

pub const STI_OCTAVES: [f64; 7] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];
pub const MODULATION_FREQUENCIES: [f64; 14] =
    [0.63, 0.80, 1.00, 1.25, 1.60, 2.00, 2.50, 3.15, 4.00, 5.00, 6.30, 8.00, 10.00, 12.50];

/// Effective SNR is clipped to ±15 dB.
const SNR_LIMIT: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationGrid {
    pub octave_bands: [f64; 7],
    pub modulation_frequencies: [f64; 14],
}

impl Default for ModulationGrid {
    fn default() -> Self {
        ModulationGrid { octave_bands: STI_OCTAVES, modulation_frequencies: MODULATION_FREQUENCIES }
    }
}

impl ModulationGrid {
    pub fn band_definition(&self) -> BandDefinition {
        BandDefinition::new(self.octave_bands.to_vec(), crate::signal::BandFraction::Octave)
            .expect("STI octaves are increasing")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

/// Octave-band weighting (alpha) and adjacent-band redundancy (beta) factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenderWeights {
    pub gender: Gender,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl GenderWeights {
    /// Validates dimensions, signs and `sum(alpha) - sum(beta) = 1`.
    pub fn new(gender: Gender, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != 7 || beta.len() != 6 {
            return Err(Error::WeightDimensionMismatch { alpha: alpha.len(), beta: beta.len() });
        }
        if alpha.iter().chain(&beta).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("STI weights must be finite and non-negative".into()));
        }
        let net = alpha.iter().sum::<f64>() - beta.iter().sum::<f64>();
        if (net - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("sum(alpha) - sum(beta) is {net}, must be 1")));
        }
        Ok(GenderWeights { gender, alpha, beta })
    }

    /// IEC 60268-16 male weights.
    pub fn male() -> Self {
        Self::new(
            Gender::Male,
            vec![0.085, 0.127, 0.230, 0.233, 0.309, 0.224, 0.173],
            vec![0.085, 0.078, 0.065, 0.011, 0.047, 0.095],
        )
        .expect("standard male weights are normalized")
    }

    /// IEC 60268-16 female weights; the 125 Hz band carries no weight.
    pub fn female() -> Self {
        Self::new(
            Gender::Female,
            vec![0.0, 0.117, 0.223, 0.216, 0.328, 0.250, 0.194],
            vec![0.0, 0.099, 0.066, 0.062, 0.025, 0.076],
        )
        .expect("standard female weights are normalized")
    }
}

/// Speech spectrum at 1 m in front of the talker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechReference {
    pub band_levels_at_1m: Vec<f64>,
    pub vocal_effort_label: String,
}

impl Default for SpeechReference {
    /// ISO 3382-3 normal vocal effort.
    fn default() -> Self {
        SpeechReference {
            band_levels_at_1m: vec![49.9, 54.3, 58.0, 52.0, 44.8, 38.8, 33.5],
            vocal_effort_label: "normal".into(),
        }
    }
}

impl SpeechReference {
    pub fn new(band_levels_at_1m: Vec<f64>, vocal_effort_label: impl Into<String>) -> Result<Self> {
        if band_levels_at_1m.len() != 7 {
            return Err(Error::BandSetMismatch);
        }
        if band_levels_at_1m.iter().any(|l| !l.is_finite()) {
            return Err(Error::Config("speech levels must be finite".into()));
        }
        Ok(SpeechReference { band_levels_at_1m, vocal_effort_label: vocal_effort_label.into() })
    }
}

/// Everything the STI chain needs besides the IR and the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct StiModel {
    pub grid: ModulationGrid,
    pub male: GenderWeights,
    pub female: GenderWeights,
    pub reference: SpeechReference,
}

impl Default for StiModel {
    fn default() -> Self {
        StiModel {
            grid: ModulationGrid::default(),
            male: GenderWeights::male(),
            female: GenderWeights::female(),
            reference: SpeechReference::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeechFile {
    #[serde(default = "normal_effort")]
    vocal_effort: String,
    levels_db: Vec<f64>,
}

fn normal_effort() -> String {
    "normal".into()
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct StiConfigFile {
    male: Option<WeightsFile>,
    female: Option<WeightsFile>,
    speech_reference: Option<SpeechFile>,
}

impl StiModel {
    /// Reads overrides from TOML; omitted tables keep the defaults.
    ///
    /// ```toml
    /// [male]
    /// alpha = [0.085, 0.127, 0.230, 0.233, 0.309, 0.224, 0.173]
    /// beta = [0.085, 0.078, 0.065, 0.011, 0.047, 0.095]
    ///
    /// [speech_reference]
    /// vocal_effort = "normal"
    /// levels_db = [49.9, 54.3, 58.0, 52.0, 44.8, 38.8, 33.5]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: StiConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut model = StiModel::default();
        if let Some(w) = file.male {
            model.male = GenderWeights::new(Gender::Male, w.alpha, w.beta)?;
        }
        if let Some(w) = file.female {
            model.female = GenderWeights::new(Gender::Female, w.alpha, w.beta)?;
        }
        if let Some(s) = file.speech_reference {
            model.reference = SpeechReference::new(s.levels_db, s.vocal_effort)?;
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StiRating {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

impl fmt::Display for StiRating {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let label = match self {
            StiRating::Bad => "bad",
            StiRating::Poor => "poor",
            StiRating::Fair => "fair",
            StiRating::Good => "good",
            StiRating::Excellent => "excellent",
        };
        f.write_str(label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiResult {
    /// 7 bands × 14 modulation frequencies, after noise correction.
    pub mtf: Vec<Vec<f64>>,
    pub mti: Vec<f64>,
    pub sti_male: f64,
    pub sti_female: f64,
    pub rating_male: StiRating,
    pub rating_female: StiRating,
    pub noise_included: bool,
    pub distance: Option<f64>,
    /// Speech-to-noise ratio per band when noise was applied.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::sentinel::vec_option")]
    pub band_snr: Option<Vec<f64>>,
    pub model: String,
}

impl StiResult {
    pub fn sti(&self, gender: Gender) -> f64 {
        match gender {
            Gender::Male => self.sti_male,
            Gender::Female => self.sti_female,
        }
    }

    /// The lower of the two weightings.
    pub fn sti_min(&self) -> f64 {
        self.sti_male.min(self.sti_female)
    }
}

/// Noise-free modulation reduction factors of one band-limited IR,
/// `|Σ h² e^(-i2πft)| / Σ h²`, summed from the onset to the decay
/// truncation point.
pub fn mtf_from_ir(ir_band: &AudioBuffer, onset: usize, grid: &ModulationGrid) -> Result<Vec<f64>> {
    let h = &ir_band.samples;
    if h.is_empty() {
        return Err(Error::EmptyInput);
    }
    if onset >= h.len() {
        return Err(Error::InvalidInput(format!("onset {onset} beyond buffer of {}", h.len())));
    }
    let end = truncation_point(h, onset, ir_band.sample_rate);
    let energy: Vec<f64> = h[onset..end].iter().map(|v| v * v).collect();
    let total: f64 = energy.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("no energy after onset".into()));
    }
    let fs = ir_band.sample_rate as f64;
    Ok(grid
        .modulation_frequencies
        .iter()
        .map(|&fm| (modulation_sum(&energy, fm, fs).norm() / total).clamp(0.0, 1.0))
        .collect())
}

/// `Σ e[n] exp(-i2π fm n / fs)` with a rotating phasor, re-seeded every
/// block to bound drift.
fn modulation_sum(energy: &[f64], fm: f64, fs: f64) -> Complex64 {
    const BLOCK: usize = 4096;
    let w = -2.0 * PI * fm / fs;
    let step = Complex64::from_polar(1.0, w);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, chunk) in energy.chunks(BLOCK).enumerate() {
        let mut phasor = Complex64::from_polar(1.0, w * (b * BLOCK) as f64);
        for &e in chunk {
            acc += phasor * e;
            phasor *= step;
        }
    }
    acc
}

/// `m / (1 + 10^(-snr/10))`.
pub fn apply_noise_correction(m: f64, snr_band: f64) -> f64 {
    m / (1.0 + 10f64.powf(-snr_band / 10.0))
}

/// `10 log10(m / (1 - m))` clipped to ±15 dB.
pub fn effective_snr(m: f64) -> f64 {
    if m <= 0.0 {
        return -SNR_LIMIT;
    }
    if m >= 1.0 {
        return SNR_LIMIT;
    }
    (10.0 * (m / (1.0 - m)).log10()).clamp(-SNR_LIMIT, SNR_LIMIT)
}

pub fn transmission_index(snr_eff: f64) -> f64 {
    ((snr_eff + SNR_LIMIT) / (2.0 * SNR_LIMIT)).clamp(0.0, 1.0)
}

/// `Σ α_k MTI_k - Σ β_k sqrt(MTI_k MTI_{k+1})`, clipped to [0, 1].
pub fn aggregate_sti(mti: &[f64], weights: &GenderWeights) -> Result<f64> {
    if mti.len() != weights.alpha.len() || weights.beta.len() + 1 != mti.len() {
        return Err(Error::WeightDimensionMismatch { alpha: mti.len(), beta: weights.beta.len() });
    }
    let weighted: f64 = mti.iter().zip(&weights.alpha).map(|(m, a)| a * m).sum();
    let redundancy: f64 = mti.windows(2).zip(&weights.beta).map(|(pair, b)| b * (pair[0] * pair[1]).sqrt()).sum();
    Ok((weighted - redundancy).clamp(0.0, 1.0))
}

/// Rating bins: lower edges inclusive.
pub fn rate_sti(sti: f64) -> Result<StiRating> {
    if !(0.0..=1.0).contains(&sti) {
        return Err(Error::OutOfRange(sti));
    }
    Ok(match sti {
        s if s < 0.30 => StiRating::Bad,
        s if s < 0.45 => StiRating::Poor,
        s if s < 0.60 => StiRating::Fair,
        s if s < 0.75 => StiRating::Good,
        _ => StiRating::Excellent,
    })
}

/// Speech spectrum at `distance` meters, free-field `-20 log10(d)`.
pub fn speech_spectrum_at(reference: &SpeechReference, distance: f64) -> Result<BandSpectrum> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::InvalidDistance(distance));
    }
    let attenuation = 20.0 * distance.log10();
    Ok(BandSpectrum {
        band_centers: STI_OCTAVES.to_vec(),
        levels: reference.band_levels_at_1m.iter().map(|l| l - attenuation).collect(),
        integration_time: 1.0,
        label: format!("speech ({}) at {distance} m", reference.vocal_effort_label),
    })
}

/// Noise-free MTF matrix (7 × 14) from a broadband IR.
pub fn noise_free_mtf(ir: &ImpulseResponse, grid: &ModulationGrid) -> Result<Vec<Vec<f64>>> {
    let bands = grid.band_definition();
    let (_, upper) = bands.edges(bands.len() - 1);
    let rate = ir.buffer.sample_rate;
    if upper >= rate as f64 / 2.0 {
        return Err(Error::SampleRateTooLow { rate, required: (2.0 * upper).ceil() as u32 + 1 });
    }
    ir.buffer.validate()?;
    octave_filterbank(&ir.buffer, &bands)?
        .iter()
        .map(|band| mtf_from_ir(band, ir.onset_index, grid))
        .collect()
}

/// Completes the STI chain from a noise-free MTF.
pub fn sti_from_mtf(
    noise_free: &[Vec<f64>],
    noise: Option<&BandSpectrum>,
    distance: Option<f64>,
    model: &StiModel,
) -> Result<StiResult> {
    if noise_free.len() != 7 || noise_free.iter().any(|row| row.len() != model.grid.modulation_frequencies.len()) {
        return Err(Error::BandSetMismatch);
    }
    let band_snr = match noise {
        None => None,
        Some(spectrum) => {
            if spectrum.band_centers.as_slice() != model.grid.octave_bands.as_slice() {
                return Err(Error::BandSetMismatch);
            }
            let d = distance.ok_or(Error::InvalidDistance(0.0))?;
            let speech = speech_spectrum_at(&model.reference, d)?;
            Some(speech.levels.iter().zip(&spectrum.levels).map(|(s, n)| s - n).collect::<Vec<f64>>())
        }
    };

    let mtf: Vec<Vec<f64>> = noise_free
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .map(|&m| match &band_snr {
                    Some(snr) => apply_noise_correction(m, snr[k]),
                    None => m,
                })
                .map(|m| m.clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let mti: Vec<f64> = mtf
        .iter()
        .map(|row| row.iter().map(|&m| transmission_index(effective_snr(m))).sum::<f64>() / row.len() as f64)
        .collect();
    let sti_male = aggregate_sti(&mti, &model.male)?;
    let sti_female = aggregate_sti(&mti, &model.female)?;
    Ok(StiResult {
        mtf,
        mti,
        sti_male,
        sti_female,
        rating_male: rate_sti(sti_male)?,
        rating_female: rate_sti(sti_female)?,
        noise_included: noise.is_some(),
        distance,
        band_snr,
        model: STI_MODEL.to_string(),
    })
}

/// Full indirect-method STI. `noise = None` evaluates the noise-free case.
pub fn compute_sti_indirect(ir: &ImpulseResponse, noise: Option<&BandSpectrum>, model: &StiModel) -> Result<StiResult> {
    let mtf = noise_free_mtf(ir, &model.grid)?;
    sti_from_mtf(&mtf, noise, ir.distance, model)
}
