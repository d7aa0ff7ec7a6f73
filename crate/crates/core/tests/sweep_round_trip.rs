use proptest::prelude::*;
use roomacoustics::decay::{analyze_impulse_response, reverberation_time, schroeder_curve, DecayMarker};
use roomacoustics::signal::{deconvolve, fft_convolve, generate_ess, AudioBuffer, BandDefinition, SweepSpec};
use roomacoustics::synth::multitone_ir;
use roomacoustics::Error;
use std::f64::consts::PI;

/// Frequency of the strongest DFT bin of `x`, Hann-windowed.
fn dominant_frequency(x: &[f64], fs: f64) -> f64 {
    let n = x.len();
    let windowed: Vec<f64> =
        x.iter().enumerate().map(|(i, v)| v * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())).collect();
    let power = |k: usize| {
        let w = -2.0 * PI * k as f64 / n as f64;
        let (re, im) = windowed.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, v)| {
            let a = w * i as f64;
            (re + v * a.cos(), im + v * a.sin())
        });
        re * re + im * im
    };
    let best = (1..n / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
    best as f64 * fs / n as f64
}

#[test]
fn sweep_starts_and_ends_at_its_band_edges() {
    let spec = SweepSpec::new(50.0, 20000.0, 10.0, 48000);
    let (sweep, _) = generate_ess(&spec).unwrap();
    let head = 4096;
    let f0 = dominant_frequency(&sweep.samples[..head], 48000.0);
    assert!((f0 - 50.0).abs() <= 48000.0 / head as f64, "start {f0}");
    let tail = 256;
    let f1 = dominant_frequency(&sweep.samples[sweep.len() - tail..], 48000.0);
    assert!((f1 - 20000.0).abs() <= 48000.0 / tail as f64, "end {f1}");
}

#[test]
fn sweep_and_inverse_compress_to_a_pulse() {
    let spec = SweepSpec::new(50.0, 20000.0, 10.0, 48000);
    let (sweep, inverse) = generate_ess(&spec).unwrap();
    let y = fft_convolve(&sweep.samples, &inverse.samples);
    let peak = (0..y.len()).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())).unwrap();
    let total: f64 = y.iter().map(|v| v * v).sum();
    let near: f64 = y[peak - 48..=peak + 48].iter().map(|v| v * v).sum();
    assert!(near / total >= 0.99, "{}", near / total);
}

#[test]
fn self_deconvolution_has_no_decay_to_measure() {
    let spec = SweepSpec::new(50.0, 20000.0, 2.0, 48000);
    let (sweep, inverse) = generate_ess(&spec).unwrap();
    let ir = deconvolve(&sweep, &inverse).unwrap();
    let curve = schroeder_curve(&ir.buffer, ir.onset_index).unwrap();
    assert!(matches!(reverberation_time(&curve, DecayMarker::T30), Err(Error::InsufficientDecayRange { .. })));
}

fn round_trip_t30(t60: f64, sweep_seconds: f64) -> Vec<(f64, f64)> {
    let bands = BandDefinition::octaves(125.0, 8000.0);
    let tones: Vec<(f64, f64)> = bands.center_frequencies.iter().map(|&c| (bands.exact_center(c), t60)).collect();
    let room = multitone_ir(&tones, (2.5 * t60).max(1.0), 48000, 0.0, 5).unwrap();
    let (sweep, inverse) = generate_ess(&SweepSpec::new(50.0, 20000.0, sweep_seconds, 48000)).unwrap();
    let recording = AudioBuffer::new(fft_convolve(&sweep.samples, &room.samples), 48000);
    let ir = deconvolve(&recording, &inverse).unwrap();
    analyze_impulse_response(&ir, &bands)
        .unwrap()
        .iter()
        .map(|p| (p.band_center, p.t30.expect("T30 present")))
        .collect()
}

#[test]
fn ten_second_sweep_round_trip() {
    for (band, t30) in round_trip_t30(0.5, 10.0) {
        assert!((t30 / 0.5 - 1.0).abs() <= 0.05, "band {band}: {t30}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn round_trip_recovers_any_decay(t60 in 0.2f64..1.5) {
        for (band, t30) in round_trip_t30(t60, 3.0) {
            prop_assert!((t30 / t60 - 1.0).abs() <= 0.05, "T={} band {}: {}", t60, band, t30);
        }
    }
}
