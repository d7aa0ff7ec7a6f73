use proptest::prelude::*;
use roomacoustics::decay::{analyze_impulse_response, clarity, schroeder_frequency, RoomGeometry};
use roomacoustics::signal::{octave_filterbank, AudioBuffer, BandDefinition, ImpulseResponse};
use roomacoustics::synth::{exponential_noise_ir, multitone_ir};

/// One tone per band center, all decaying with the same T: a single
/// exponential in every band without the realization scatter of noise.
fn single_exponential_ir(t60: f64, bands: &BandDefinition, seed: u64) -> ImpulseResponse {
    let tones: Vec<(f64, f64)> = bands.center_frequencies.iter().map(|&c| (bands.exact_center(c), t60)).collect();
    let duration = (2.5 * t60).max(1.0);
    ImpulseResponse::from_buffer(multitone_ir(&tones, duration, 48000, 0.01, seed).unwrap()).unwrap()
}

#[test]
fn t30_recovers_single_exponential_decay() {
    let bands = BandDefinition::room_octaves();
    for t60 in [0.3, 0.5, 0.8, 1.1] {
        let params = analyze_impulse_response(&single_exponential_ir(t60, &bands, 11), &bands).unwrap();
        for p in &params {
            let tol = if p.band_center <= 125.0 { 0.03 } else { 0.01 };
            let t30 = p.t30.unwrap();
            assert!((t30 / t60 - 1.0).abs() <= tol, "T={t60} band {} got {t30}", p.band_center);
        }
    }
}

#[test]
fn schroeder_frequency_of_the_meeting_room() {
    let f = schroeder_frequency(&RoomGeometry::new(150.8).unwrap(), 0.6).unwrap();
    assert!((f - 126.2).abs() < 0.1, "{f}");
}

#[test]
fn two_impulse_clarity() {
    let pair = |second: f64| {
        let mut x = vec![0.0; 9600];
        x[0] = 1.0;
        x[2880] = second;
        AudioBuffer::new(x, 48000)
    };
    assert!((clarity(&pair(0.5), 0, 50.0).unwrap() - 6.0206).abs() < 0.05);
    assert!(clarity(&pair(1.0), 0, 50.0).unwrap().abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn filterbank_is_linear(seed in any::<u64>(), a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let x = exponential_noise_ir(0.3, 0.25, 48000, 0.0, seed).unwrap();
        let y = exponential_noise_ir(0.6, 0.25, 48000, 0.0, seed ^ 0x5a5a).unwrap();
        let mix = AudioBuffer::new(x.samples.iter().zip(&y.samples).map(|(p, q)| a * p + b * q).collect(), 48000);
        let bands = BandDefinition::room_octaves();
        let (fx, fy, fm) = (
            octave_filterbank(&x, &bands).unwrap(),
            octave_filterbank(&y, &bands).unwrap(),
            octave_filterbank(&mix, &bands).unwrap(),
        );
        for k in 0..bands.len() {
            for i in 0..mix.len() {
                let expect = a * fx[k].samples[i] + b * fy[k].samples[i];
                prop_assert!((fm[k].samples[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn t30_is_gain_invariant(gain in 1e-3f64..1e3) {
        let ir = exponential_noise_ir(0.5, 1.25, 48000, 0.01, 3).unwrap();
        let scaled = AudioBuffer::new(ir.samples.iter().map(|v| v * gain).collect(), 48000);
        let bands = BandDefinition::octaves(500.0, 2000.0);
        let base = analyze_impulse_response(&ImpulseResponse::from_buffer(ir).unwrap(), &bands).unwrap();
        let other = analyze_impulse_response(&ImpulseResponse::from_buffer(scaled).unwrap(), &bands).unwrap();
        for (p, q) in base.iter().zip(&other) {
            prop_assert!((p.t30.unwrap() - q.t30.unwrap()).abs() < 1e-6);
        }
    }
}
