//! Energy-decay analysis: Schroeder backward integration, reverberation
//! times, clarity, Schroeder frequency and spatial averaging.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::signal::{octave_filterbank, AudioBuffer, BandDefinition, ImpulseResponse};

/// Fraction of the buffer used to estimate the noise floor.
const NOISE_FLOOR_FRACTION: f64 = 0.1;
/// Integration stops once the envelope stays within this margin of the floor.
const NOISE_FLOOR_MARGIN_DB: f64 = 5.0;
/// Moving-average length of the energy envelope, seconds.
const ENVELOPE_WINDOW: f64 = 0.02;
/// Fits with r² below this carry a warning.
pub const MIN_FIT_R2: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomGeometry {
    /// Room volume, m³.
    pub volume: f64,
    #[serde(default)]
    pub usage_labels: Vec<String>,
}

impl RoomGeometry {
    pub fn new(volume: f64) -> Result<Self> {
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::InvalidInput(format!("room volume {volume} must be positive")));
        }
        Ok(RoomGeometry { volume, usage_labels: Vec::new() })
    }
}

/// Normalized energy-decay curve starting at the onset.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    /// `levels[0]` is the onset and always 0 dB; samples past the truncation
    /// point are `-inf`.
    pub levels: Vec<f64>,
    pub sample_rate: u32,
    /// Absolute index of the onset in the source buffer.
    pub onset: usize,
    /// Absolute index where backward integration stopped (exclusive).
    pub truncation_index: usize,
}

impl DecayCurve {
    /// Number of finite points, i.e. points before truncation.
    pub fn finite_len(&self) -> usize {
        self.truncation_index - self.onset
    }

    /// Lowest level reached before truncation.
    pub fn dynamic_range(&self) -> f64 {
        self.levels.iter().copied().filter(|l| l.is_finite()).fold(0.0, f64::min)
    }

    /// Writes `time_s,level_db` rows up to truncation, keeping every
    /// `stride`-th sample.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> io::Result<()> {
        writeln!(out, "time_s,level_db")?;
        let fs = self.sample_rate as f64;
        for (i, level) in self.levels.iter().enumerate().step_by(stride.max(1)) {
            if !level.is_finite() {
                break;
            }
            writeln!(out, "{:.6},{:.4}", i as f64 / fs, level)?;
        }
        Ok(())
    }
}

/// Absolute index (exclusive) where backward integration stops.
///
/// The floor is the mean energy of the final 10% of the buffer. Integration
/// stops after the last sample whose smoothed envelope is more than 5 dB
/// above that floor. Digitally silent tails stop at the last nonzero sample.
pub fn truncation_point(samples: &[f64], onset: usize, sample_rate: u32) -> usize {
    let n = samples.len();
    let tail_len = ((n as f64 * NOISE_FLOOR_FRACTION).ceil() as usize).max(1);
    let floor = samples[n - tail_len..].iter().map(|v| v * v).sum::<f64>() / tail_len as f64;
    if floor == 0.0 {
        let last = samples.iter().rposition(|v| *v != 0.0).unwrap_or(onset);
        return (last + 1).max(onset + 1);
    }

    let window = ((ENVELOPE_WINDOW * sample_rate as f64).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in samples {
        acc += v * v;
        prefix.push(acc);
    }
    let threshold = floor * 10f64.powf(NOISE_FLOOR_MARGIN_DB / 10.0);
    let last_above = (onset..n).rev().find(|&i| {
        let end = (i + window).min(n);
        (prefix[end] - prefix[i]) / (end - i) as f64 > threshold
    });
    last_above.map_or(onset + 1, |i| i + 1)
}

/// Schroeder backward-integrated decay curve of a band-limited IR.
pub fn schroeder_curve(ir_band: &AudioBuffer, onset: usize) -> Result<DecayCurve> {
    let h = &ir_band.samples;
    if h.is_empty() {
        return Err(Error::EmptyInput);
    }
    if onset >= h.len() {
        return Err(Error::InvalidInput(format!("onset {onset} beyond buffer of {}", h.len())));
    }
    let truncation_index = truncation_point(h, onset, ir_band.sample_rate);

    let mut remaining = vec![0.0; truncation_index - onset];
    let mut acc = 0.0;
    for i in (onset..truncation_index).rev() {
        acc += h[i] * h[i];
        remaining[i - onset] = acc;
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(Error::InvalidInput("no energy after onset".into()));
    }

    let mut levels: Vec<f64> = remaining.iter().map(|e| 10.0 * (e / total).log10()).collect();
    levels[0] = 0.0;
    levels.resize(h.len() - onset, f64::NEG_INFINITY);
    Ok(DecayCurve { levels, sample_rate: ir_band.sample_rate, onset, truncation_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayMarker {
    T30,
    T20,
    Edt,
}

impl DecayMarker {
    /// Fit span `(upper, lower)` in dB.
    pub fn span(self) -> (f64, f64) {
        match self {
            DecayMarker::T30 => (-5.0, -35.0),
            DecayMarker::T20 => (-5.0, -25.0),
            DecayMarker::Edt => (0.0, -10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Extrapolated 60 dB decay time, seconds.
    pub seconds: f64,
    pub fit_r2: f64,
    /// Slope of the regression line, dB/s.
    pub slope: f64,
}

impl DecayFit {
    pub fn low_quality(&self) -> bool {
        self.fit_r2 < MIN_FIT_R2
    }
}

/// Least-squares decay time over the marker's dB span.
pub fn reverberation_time(curve: &DecayCurve, marker: DecayMarker) -> Result<DecayFit> {
    let (upper, lower) = marker.span();
    let insufficient = || Error::InsufficientDecayRange { achieved_db: curve.dynamic_range(), required_db: lower };
    let finite = &curve.levels[..curve.finite_len()];
    let start = finite.iter().position(|l| *l <= upper).ok_or_else(insufficient)?;
    let end = finite.iter().position(|l| *l <= lower).ok_or_else(insufficient)?;
    if end <= start {
        return Err(insufficient());
    }

    let fs = curve.sample_rate as f64;
    let points = &finite[start..=end];
    let n = points.len() as f64;
    let mean_x = (start + end) as f64 / 2.0 / fs;
    let mean_y = points.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (k, y) in points.iter().enumerate() {
        let dx = (start + k) as f64 / fs - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(insufficient());
    }
    let fit_r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayFit { seconds: -60.0 / slope, fit_r2, slope })
}

/// Clarity index: early-to-late energy ratio in dB, split `early_window_ms`
/// after the onset. Returns `+inf` when there is no late energy.
pub fn clarity(ir_band: &AudioBuffer, onset: usize, early_window_ms: f64) -> Result<f64> {
    let h = &ir_band.samples;
    if h.is_empty() {
        return Err(Error::EmptyInput);
    }
    if onset >= h.len() {
        return Err(Error::InvalidInput(format!("onset {onset} beyond buffer of {}", h.len())));
    }
    let split = (onset + (early_window_ms * 1e-3 * ir_band.sample_rate as f64).round() as usize).min(h.len());
    let early: f64 = h[onset..split].iter().map(|v| v * v).sum();
    let late: f64 = h[split..].iter().map(|v| v * v).sum();
    match (early > 0.0, late > 0.0) {
        (_, false) if early > 0.0 => Ok(f64::INFINITY),
        (false, false) => Err(Error::InvalidInput("no energy after onset".into())),
        _ => Ok(10.0 * (early / late).log10()),
    }
}

/// Definition (D50) from a clarity value.
pub fn definition_from_clarity(c50_db: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-c50_db / 10.0))
}

/// Schroeder frequency `2000 * sqrt(T / V)` in Hz.
pub fn schroeder_frequency(geometry: &RoomGeometry, rt_estimate: f64) -> Result<f64> {
    if !(geometry.volume.is_finite() && geometry.volume > 0.0) {
        return Err(Error::InvalidInput(format!("room volume {} must be positive", geometry.volume)));
    }
    if !(rt_estimate.is_finite() && rt_estimate >= 0.0) {
        return Err(Error::InvalidInput(format!("reverberation time {rt_estimate} must be non-negative")));
    }
    Ok(2000.0 * (rt_estimate / geometry.volume).sqrt())
}

/// Per-band decay parameters at one position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandParams {
    pub band_center: f64,
    pub t30: Option<f64>,
    pub t20: Option<f64>,
    pub edt: Option<f64>,
    /// May be `+inf` when the band has no late energy.
    #[serde(with = "crate::sentinel::option")]
    pub c50: Option<f64>,
    /// r² of the T30 regression, falling back to T20 then EDT.
    pub fit_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BandParams {
    pub fn empty(band_center: f64) -> Self {
        BandParams { band_center, t30: None, t20: None, edt: None, c50: None, fit_r2: None, warnings: Vec::new() }
    }

    /// Derived D50 when C50 is present.
    pub fn d50(&self) -> Option<f64> {
        self.c50.map(definition_from_clarity)
    }
}

/// T30, T20, EDT and C50 of one band-limited IR. Decay times that cannot be
/// evaluated are left empty with a warning.
pub fn band_params(ir_band: &AudioBuffer, onset: usize, band_center: f64) -> BandParams {
    let mut params = BandParams::empty(band_center);
    let curve = match schroeder_curve(ir_band, onset) {
        Ok(c) => c,
        Err(e) => {
            params.warnings.push(format!("decay curve: {e}"));
            return params;
        }
    };
    let mut fits = Vec::new();
    for marker in [DecayMarker::T30, DecayMarker::T20, DecayMarker::Edt] {
        match reverberation_time(&curve, marker) {
            Ok(fit) => {
                if fit.low_quality() {
                    params.warnings.push(format!("{marker:?} fit r2 {:.3} below {MIN_FIT_R2}", fit.fit_r2));
                }
                let slot = match marker {
                    DecayMarker::T30 => &mut params.t30,
                    DecayMarker::T20 => &mut params.t20,
                    DecayMarker::Edt => &mut params.edt,
                };
                *slot = Some(fit.seconds);
                fits.push(fit.fit_r2);
            }
            Err(e) => params.warnings.push(format!("{marker:?}: {e}")),
        }
    }
    params.fit_r2 = fits.first().copied();
    match clarity(ir_band, onset, 50.0) {
        Ok(c) => params.c50 = Some(c),
        Err(e) => params.warnings.push(format!("C50: {e}")),
    }
    params
}

/// Filters the IR into `bands` and evaluates every band.
pub fn analyze_impulse_response(ir: &ImpulseResponse, bands: &BandDefinition) -> Result<Vec<BandParams>> {
    ir.buffer.validate()?;
    let filtered = octave_filterbank(&ir.buffer, bands)?;
    Ok(filtered
        .iter()
        .zip(&bands.center_frequencies)
        .map(|(band, &center)| band_params(band, ir.onset_index, center))
        .collect())
}

/// Per-band spatial mean with contribution counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialAverage {
    pub params: BandParams,
    pub t30_count: usize,
    pub t20_count: usize,
    pub edt_count: usize,
    pub c50_count: usize,
    /// Positions whose C50 was `+inf` and therefore left out of the mean.
    pub c50_infinite_excluded: usize,
}

/// Arithmetic mean over positions of each parameter, per band.
pub fn spatial_average(per_position: &[Vec<BandParams>]) -> Result<Vec<SpatialAverage>> {
    let first = per_position.first().ok_or(Error::EmptyInput)?;
    let centers: Vec<f64> = first.iter().map(|b| b.band_center).collect();
    for position in per_position {
        if position.len() != centers.len() || position.iter().zip(&centers).any(|(b, c)| b.band_center != *c) {
            return Err(Error::BandSetMismatch);
        }
    }

    let mean = |values: Vec<f64>| -> (Option<f64>, usize) {
        let n = values.len();
        if n == 0 {
            (None, 0)
        } else {
            (Some(values.iter().sum::<f64>() / n as f64), n)
        }
    };

    Ok(centers
        .iter()
        .enumerate()
        .map(|(i, &center)| {
            let column = || per_position.iter().map(move |p| &p[i]);
            let (t30, t30_count) = mean(column().filter_map(|b| b.t30).collect());
            let (t20, t20_count) = mean(column().filter_map(|b| b.t20).collect());
            let (edt, edt_count) = mean(column().filter_map(|b| b.edt).collect());
            let (fit_r2, _) = mean(column().filter_map(|b| b.fit_r2).collect());
            let c50_all: Vec<f64> = column().filter_map(|b| b.c50).collect();
            let infinite = c50_all.iter().filter(|c| **c == f64::INFINITY).count();
            let (mut c50, c50_count) = mean(c50_all.iter().copied().filter(|c| c.is_finite()).collect());
            if c50.is_none() && infinite > 0 {
                c50 = Some(f64::INFINITY);
            }
            let mut warnings = Vec::new();
            if infinite > 0 {
                warnings.push(format!("C50 of {infinite} position(s) is +inf and excluded from the mean"));
            }
            SpatialAverage {
                params: BandParams { band_center: center, t30, t20, edt, c50, fit_r2, warnings },
                t30_count,
                t20_count,
                edt_count,
                c50_count,
                c50_infinite_excluded: infinite,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: u32 = 48000;

    /// exp(-6.9078 t / T): amplitude falls 60 dB over T.
    fn exponential(t60: f64, seconds: f64) -> AudioBuffer {
        let n = (seconds * FS as f64) as usize;
        let k = 3.0 * 10f64.ln() / t60;
        AudioBuffer::new((0..n).map(|i| (-k * i as f64 / FS as f64).exp()).collect(), FS)
    }

    fn impulses(spec: &[(f64, f64)], seconds: f64) -> AudioBuffer {
        let mut x = vec![0.0; (seconds * FS as f64) as usize];
        for &(ms, amp) in spec {
            x[(ms * 1e-3 * FS as f64).round() as usize] = amp;
        }
        AudioBuffer::new(x, FS)
    }

    #[test]
    fn exponential_decays_in_a_straight_line() {
        let t = 0.5;
        let curve = schroeder_curve(&exponential(t, 1.5), 0).unwrap();
        let slope = -60.0 / t;
        let mut checked = 0;
        for (i, level) in curve.levels.iter().enumerate() {
            if *level <= -5.0 && *level >= -35.0 {
                let expected = slope * i as f64 / FS as f64;
                assert!((level - expected).abs() < 0.5, "at {i}: {level} vs {expected}");
                checked += 1;
            }
        }
        assert!(checked > 10000);
    }

    #[test]
    fn unit_impulse_drops_immediately() {
        let curve = schroeder_curve(&impulses(&[(0.0, 1.0)], 0.1), 0).unwrap();
        assert_eq!(curve.levels[0], 0.0);
        assert_eq!(curve.levels[1], f64::NEG_INFINITY);
        assert!(matches!(
            reverberation_time(&curve, DecayMarker::T30),
            Err(Error::InsufficientDecayRange { .. })
        ));
    }

    #[test]
    fn scaling_leaves_curve_unchanged() {
        let ir = exponential(0.7, 1.0);
        let scaled = AudioBuffer::new(ir.samples.iter().map(|v| v * 7.3).collect(), FS);
        let a = schroeder_curve(&ir, 0).unwrap();
        let b = schroeder_curve(&scaled, 0).unwrap();
        assert_eq!(a.truncation_index, b.truncation_index);
        for (x, y) in a.levels.iter().zip(&b.levels) {
            assert!(x == y || (x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn decay_times_of_a_single_slope() {
        let curve = schroeder_curve(&exponential(0.5, 1.5), 0).unwrap();
        let t30 = reverberation_time(&curve, DecayMarker::T30).unwrap();
        assert!((t30.seconds - 0.5).abs() < 0.005, "{}", t30.seconds);
        assert!(t30.fit_r2 > 0.999);
        let edt = reverberation_time(&curve, DecayMarker::Edt).unwrap();
        assert!((edt.seconds - 0.5).abs() < 0.005);
        let t20 = reverberation_time(&curve, DecayMarker::T20).unwrap();
        assert!((t20.seconds - 0.5).abs() < 0.005);
    }

    #[test]
    fn truncated_curve_reports_range() {
        let levels: Vec<f64> = (0..4800).map(|i| -30.0 * i as f64 / 4799.0).collect();
        let curve = DecayCurve { levels, sample_rate: FS, onset: 0, truncation_index: 4800 };
        match reverberation_time(&curve, DecayMarker::T30) {
            Err(Error::InsufficientDecayRange { achieved_db, required_db }) => {
                assert!((achieved_db + 30.0).abs() < 1e-9);
                assert_eq!(required_db, -35.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(reverberation_time(&curve, DecayMarker::T20).is_ok());
    }

    #[test]
    fn clarity_two_impulse_cases() {
        let c = clarity(&impulses(&[(0.0, 1.0), (60.0, 0.5)], 0.2), 0, 50.0).unwrap();
        assert!((c - 6.0206).abs() < 0.05);
        let c = clarity(&impulses(&[(0.0, 1.0), (40.0, 1.0)], 0.2), 0, 50.0).unwrap();
        assert_eq!(c, f64::INFINITY);
        let c = clarity(&impulses(&[(0.0, 1.0), (60.0, 1.0)], 0.2), 0, 50.0).unwrap();
        assert!(c.abs() < 0.05);
        assert!(matches!(clarity(&AudioBuffer::new(vec![], FS), 0, 50.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn clarity_onset_offset() {
        // same two impulses 10 ms later with the onset moved accordingly
        let c = clarity(&impulses(&[(10.0, 1.0), (70.0, 0.5)], 0.2), 480, 50.0).unwrap();
        assert!((c - 6.0206).abs() < 0.05);
    }

    #[test]
    fn d50_from_c50() {
        assert!((definition_from_clarity(0.0) - 0.5).abs() < 1e-12);
        assert!((definition_from_clarity(f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schroeder_frequency_cases() {
        let room = RoomGeometry::new(150.8).unwrap();
        assert!((schroeder_frequency(&room, 0.6).unwrap() - 126.2).abs() < 0.1);
        let big = RoomGeometry::new(400.0).unwrap();
        assert!((schroeder_frequency(&big, 1.0).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(schroeder_frequency(&big, 0.0).unwrap(), 0.0);
        assert!(schroeder_frequency(&big, -1.0).is_err());
        assert!(RoomGeometry::new(0.0).is_err());
    }

    fn params(center: f64, t30: Option<f64>, c50: Option<f64>) -> BandParams {
        BandParams { t30, c50, fit_r2: t30.map(|_| 0.99), ..BandParams::empty(center) }
    }

    #[test]
    fn spatial_average_rules() {
        let one = vec![params(500.0, Some(0.6), Some(2.0)), params(1000.0, Some(0.6), Some(2.0))];
        let avg = spatial_average(&[one.clone(), one.clone(), one.clone()]).unwrap();
        for (a, p) in avg.iter().zip(&one) {
            assert_eq!(a.params.t30, p.t30);
            assert_eq!(a.params.c50, p.c50);
            assert_eq!(a.t30_count, 3);
        }

        let a = vec![params(1000.0, Some(0.6), Some(2.0))];
        let b = vec![params(1000.0, Some(0.8), Some(f64::INFINITY))];
        let avg = spatial_average(&[a, b]).unwrap();
        assert!((avg[0].params.t30.unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(avg[0].params.c50, Some(2.0));
        assert_eq!(avg[0].c50_infinite_excluded, 1);
        assert_eq!(avg[0].c50_count, 1);

        let mismatched = vec![params(500.0, None, None)];
        assert!(matches!(
            spatial_average(&[vec![params(1000.0, None, None)], mismatched]),
            Err(Error::BandSetMismatch)
        ));
        assert!(matches!(spatial_average(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn csv_export_stops_at_truncation() {
        let curve = schroeder_curve(&impulses(&[(0.0, 1.0), (1.0, 0.5)], 0.01), 0).unwrap();
        let mut out = Vec::new();
        curve.write_csv(&mut out, 1).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time_s,level_db");
        assert_eq!(lines.len(), 1 + curve.finite_len());
        assert!(lines[1].starts_with("0.000000,0.0000"));
    }
}
