//! Synthetic impulse responses and noise recordings with known parameters,
//! for tests and fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::AudioBuffer;

/// ln(10^6): energy decays by 60 dB over one reverberation time.
const DECAY_60DB: f64 = 13.815510557964274;

fn check_common(duration: f64, sample_rate: u32, pre_delay: f64) -> Result<(usize, usize)> {
    if sample_rate == 0 || !(duration > 0.0) || !(pre_delay >= 0.0) || pre_delay >= duration {
        return Err(Error::InvalidInput("need duration > pre_delay >= 0 and a positive rate".into()));
    }
    let fs = sample_rate as f64;
    Ok(((duration * fs).round() as usize, (pre_delay * fs).round() as usize))
}

/// Unit direct impulse at `pre_delay` followed by a white-noise tail whose
/// energy decays by 60 dB every `t60` seconds in every band.
pub fn exponential_noise_ir(t60: f64, duration: f64, sample_rate: u32, pre_delay: f64, seed: u64) -> Result<AudioBuffer> {
    if !(t60 > 0.0) {
        return Err(Error::InvalidInput("t60 must be positive".into()));
    }
    let (n, onset) = check_common(duration, sample_rate, pre_delay)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = DECAY_60DB / (2.0 * t60 * sample_rate as f64);
    let mut samples = vec![0.0; n];
    samples[onset] = 1.0;
    for (k, s) in samples[onset + 1..].iter_mut().enumerate() {
        *s = 0.5 * rng.gen_range(-1.0..1.0) * (-rate * (k + 1) as f64).exp();
    }
    Ok(AudioBuffer::new(samples, sample_rate))
}

/// One decaying tone per band center, each with its own reverberation
/// time. Adjacent octave centers leak about 20 dB into each other's
/// analysis band, so neighbouring decay times should stay close.
pub fn multitone_ir(bands: &[(f64, f64)], duration: f64, sample_rate: u32, pre_delay: f64, seed: u64) -> Result<AudioBuffer> {
    if bands.is_empty() || bands.iter().any(|&(f, t)| !(f > 0.0 && t > 0.0 && 2.0 * f < sample_rate as f64)) {
        return Err(Error::InvalidInput("need positive (center, t60) pairs below Nyquist".into()));
    }
    let (n, onset) = check_common(duration, sample_rate, pre_delay)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let mut samples = vec![0.0; n];
    for &(freq, t60) in bands {
        let phase = rng.gen_range(0.0..2.0 * PI);
        let rate = DECAY_60DB / (2.0 * t60 * fs);
        let step = 2.0 * PI * freq / fs;
        for (k, s) in samples[onset..].iter_mut().enumerate() {
            let k = k as f64;
            *s += (-rate * k).exp() * (step * k + phase).cos();
        }
    }
    Ok(AudioBuffer::new(samples, sample_rate))
}

/// Calibrated steady noise with the given per-band levels (dB SPL), built
/// from three random-phase tones inside each octave. `-inf` bands are
/// omitted.
pub fn band_noise(
    centers: &[f64],
    levels_db: &[f64],
    calibration_offset: f64,
    duration: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    if centers.len() != levels_db.len() {
        return Err(Error::InvalidInput("one level per band center required".into()));
    }
    let (n, _) = check_common(duration, sample_rate, 0.0)?;
    let fs = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; n];
    for (&center, &level) in centers.iter().zip(levels_db) {
        if level == f64::NEG_INFINITY {
            continue;
        }
        // a sine of amplitude a reads 20 log10(a) + offset
        let amplitude = 10f64.powf((level - calibration_offset) / 20.0) / 3f64.sqrt();
        for ratio in [2f64.powf(-1.0 / 6.0), 1.0, 2f64.powf(1.0 / 6.0)] {
            let freq = center * ratio;
            if 2.0 * freq >= fs {
                return Err(Error::InvalidInput(format!("{freq} Hz is above Nyquist")));
            }
            let phase = rng.gen_range(0.0..2.0 * PI);
            let step = 2.0 * PI * freq / fs;
            for (k, s) in samples.iter_mut().enumerate() {
                *s += amplitude * (step * k as f64 + phase).sin();
            }
        }
    }
    Ok(AudioBuffer::new(samples, sample_rate).with_calibration(calibration_offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_ir_is_seeded_and_shaped() {
        let a = exponential_noise_ir(0.5, 1.0, 48000, 0.01, 7).unwrap();
        let b = exponential_noise_ir(0.5, 1.0, 48000, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples[480], 1.0);
        assert!(a.samples[..480].iter().all(|&s| s == 0.0));
        // energy over 0.25 s windows drops by about 30 dB
        let energy = |lo: usize| a.samples[lo..lo + 12000].iter().map(|s| s * s).sum::<f64>();
        let drop = 10.0 * (energy(481) / energy(481 + 12000)).log10();
        assert!((drop - 30.0).abs() < 1.0, "{drop}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(exponential_noise_ir(0.0, 1.0, 48000, 0.0, 1).is_err());
        assert!(exponential_noise_ir(0.5, 1.0, 48000, 1.0, 1).is_err());
        assert!(multitone_ir(&[(30000.0, 0.5)], 1.0, 48000, 0.0, 1).is_err());
        assert!(band_noise(&[1000.0], &[], 94.0, 1.0, 48000, 1).is_err());
    }
}
