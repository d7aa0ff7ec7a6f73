use proptest::prelude::*;
use roomacoustics::noise::BandSpectrum;
use roomacoustics::signal::{AudioBuffer, BandDefinition, ImpulseResponse};
use roomacoustics::sti::{
    compute_sti_indirect, effective_snr, noise_free_mtf, rate_sti, sti_from_mtf, StiModel, StiRating, StiResult,
    MODULATION_FREQUENCIES,
};
use roomacoustics::synth::multitone_ir;

const MALE_ALPHA: [f64; 7] = [0.085, 0.127, 0.230, 0.233, 0.309, 0.224, 0.173];
const MALE_BETA: [f64; 6] = [0.085, 0.078, 0.065, 0.011, 0.047, 0.095];
const FEMALE_ALPHA: [f64; 7] = [0.0, 0.117, 0.223, 0.216, 0.328, 0.250, 0.194];
const FEMALE_BETA: [f64; 6] = [0.0, 0.099, 0.066, 0.062, 0.025, 0.076];
const MODULATION: [f64; 14] = [0.63, 0.8, 1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0, 10.0, 12.5];

/// Independent transcription of the m -> STI arithmetic.
fn oracle_sti(m: impl Fn(usize, f64) -> f64, alpha: &[f64; 7], beta: &[f64; 6]) -> f64 {
    let mti: Vec<f64> = (0..7)
        .map(|k| {
            MODULATION
                .iter()
                .map(|&fm| {
                    let v = m(k, fm);
                    let snr = (10.0 * (v / (1.0 - v)).log10()).clamp(-15.0, 15.0);
                    (snr + 15.0) / 30.0
                })
                .sum::<f64>()
                / 14.0
        })
        .collect();
    let redundancy: f64 = (0..6).map(|k| beta[k] * (mti[k] * mti[k + 1]).sqrt()).sum();
    let weighted: f64 = (0..7).map(|k| alpha[k] * mti[k]).sum();
    (weighted - redundancy).clamp(0.0, 1.0)
}

fn exponential_ir(t60: f64, seed: u64) -> ImpulseResponse {
    let bands = BandDefinition::sti_octaves();
    let tones: Vec<(f64, f64)> = bands.center_frequencies.iter().map(|&c| (bands.exact_center(c), t60)).collect();
    ImpulseResponse::from_buffer(multitone_ir(&tones, (2.5 * t60).max(1.0), 48000, 0.01, seed).unwrap()).unwrap()
}

#[test]
fn grid_matches_the_standard() {
    assert_eq!(MODULATION_FREQUENCIES, MODULATION);
}

#[test]
fn ideal_channel_scores_one() {
    let mut x = vec![0.0; 48000];
    x[480] = 1.0;
    let ir = ImpulseResponse::from_buffer(AudioBuffer::new(x, 48000)).unwrap();
    let r = compute_sti_indirect(&ir, None, &StiModel::default()).unwrap();
    assert!((r.sti_male - 1.0).abs() <= 0.001, "{}", r.sti_male);
    assert!((r.sti_female - 1.0).abs() <= 0.001, "{}", r.sti_female);
}

#[test]
fn exponential_decay_matches_closed_form() {
    let model = StiModel::default();
    for t60 in [0.4, 0.6, 0.9] {
        let closed = |_: usize, fm: f64| (1.0 + (2.0 * std::f64::consts::PI * fm * t60 / 13.8).powi(2)).powf(-0.5);
        let r = compute_sti_indirect(&exponential_ir(t60, 2), None, &model).unwrap();
        let male = oracle_sti(closed, &MALE_ALPHA, &MALE_BETA);
        let female = oracle_sti(closed, &FEMALE_ALPHA, &FEMALE_BETA);
        assert!((r.sti_male - male).abs() <= 0.005, "T={t60}: {} vs {male}", r.sti_male);
        assert!((r.sti_female - female).abs() <= 0.005, "T={t60}: {} vs {female}", r.sti_female);
    }
}

#[test]
fn rating_bins() {
    let cases = [
        (0.20, StiRating::Bad),
        (0.44, StiRating::Poor),
        (0.59, StiRating::Fair),
        (0.74, StiRating::Good),
        (0.75, StiRating::Excellent),
    ];
    for (sti, rating) in cases {
        assert_eq!(rate_sti(sti).unwrap(), rating, "{sti}");
    }
}

/// Some cell's clipped SNR is still free to move, in a band that carries
/// weight for this gender. The female index ignores 125 Hz entirely.
fn live_cell(mtf: &[Vec<f64>], alpha: &[f64; 7]) -> bool {
    mtf.iter().zip(alpha).filter(|(_, a)| **a > 0.0).flat_map(|(row, _)| row).any(|&m| {
        let snr = effective_snr(m);
        snr > -15.0 && snr < 15.0
    })
}

#[test]
fn noise_confined_to_125_hz_leaves_female_sti_unchanged() {
    let model = StiModel::default();
    let distance = 8.05;
    let ir = exponential_ir(0.2, 0).with_distance(distance);
    let mtf = noise_free_mtf(&ir, &model.grid).unwrap();
    let levels = vec![10.0, 61.1, 66.9, 63.9, 64.2, 67.4, 58.2];
    let noise = BandSpectrum::new(model.grid.octave_bands.to_vec(), levels, 15.0, "").unwrap();
    let base = sti_from_mtf(&mtf, Some(&noise), Some(distance), &model).unwrap();
    let louder = sti_from_mtf(&mtf, Some(&noise.shifted(10.0)), Some(distance), &model).unwrap();
    assert!(live_cell(&base.mtf, &MALE_ALPHA) && !live_cell(&base.mtf, &FEMALE_ALPHA));
    assert!(louder.sti_male < base.sti_male);
    assert_eq!(louder.sti_female, base.sti_female);
}

/// Real MTI drops in one band can raise the index: removing a weak band
/// between strong neighbours sheds more redundancy than weighted content.
#[test]
fn redundancy_correction_can_reward_noise() {
    let model = StiModel::default();
    let distance = 4.95;
    let ir = exponential_ir(0.2, 0).with_distance(distance);
    let mtf = noise_free_mtf(&ir, &model.grid).unwrap();
    let levels = vec![10.0, 50.6, 10.0, 10.0, 10.0, 65.2, 58.4];
    let noise = BandSpectrum::new(model.grid.octave_bands.to_vec(), levels, 15.0, "").unwrap();
    let base = sti_from_mtf(&mtf, Some(&noise), Some(distance), &model).unwrap();
    let louder = sti_from_mtf(&mtf, Some(&noise.shifted(10.0)), Some(distance), &model).unwrap();
    assert!(louder.mti.iter().zip(&base.mti).all(|(a, b)| a <= b));
    assert!(louder.mti[1] < base.mti[1]);
    assert!(louder.sti_male > base.sti_male, "{} vs {}", louder.sti_male, base.sti_male);
    assert!(louder.sti_female < base.sti_female);
}

fn noise_pair(t60: f64, distance: f64, levels: Vec<f64>, seed: u64) -> (StiResult, StiResult) {
    let model = StiModel::default();
    let ir = exponential_ir(t60, seed).with_distance(distance);
    let mtf = noise_free_mtf(&ir, &model.grid).unwrap();
    let noise = BandSpectrum::new(model.grid.octave_bands.to_vec(), levels, 15.0, "").unwrap();
    let base = sti_from_mtf(&mtf, Some(&noise), Some(distance), &model).unwrap();
    let louder = sti_from_mtf(&mtf, Some(&noise.shifted(10.0)), Some(distance), &model).unwrap();
    (base, louder)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn more_noise_never_raises_band_mti(
        t60 in 0.2f64..2.0,
        distance in 0.5f64..12.0,
        levels in proptest::collection::vec(10.0f64..70.0, 7),
        seed in 0u64..1000,
    ) {
        let (base, louder) = noise_pair(t60, distance, levels, seed);
        for k in 0..7 {
            prop_assert!(louder.mti[k] <= base.mti[k]);
            let live = base.mtf[k].iter().any(|&m| {
                let snr = effective_snr(m);
                snr > -15.0 && snr < 15.0
            });
            if live {
                prop_assert!(louder.mti[k] < base.mti[k], "band {}: {} vs {}", k, louder.mti[k], base.mti[k]);
            }
        }
    }

    /// Noise falling smoothly with frequency, as HVAC and projector noise does.
    #[test]
    fn more_smooth_noise_never_helps(
        t60 in 0.2f64..2.0,
        distance in 0.5f64..12.0,
        level in 20.0f64..65.0,
        slope in -6.0f64..0.0,
        jitter in proptest::collection::vec(-3.0f64..3.0, 7),
        seed in 0u64..1000,
    ) {
        let levels = jitter.iter().enumerate().map(|(k, j)| level + slope * k as f64 + j).collect();
        let (base, louder) = noise_pair(t60, distance, levels, seed);
        prop_assert!(louder.sti_male <= base.sti_male && louder.sti_female <= base.sti_female);
        if live_cell(&base.mtf, &MALE_ALPHA) {
            prop_assert!(louder.sti_male < base.sti_male, "{} vs {}", louder.sti_male, base.sti_male);
        }
        if live_cell(&base.mtf, &FEMALE_ALPHA) {
            prop_assert!(louder.sti_female < base.sti_female, "{} vs {}", louder.sti_female, base.sti_female);
        }
    }
}
