//! Target profiles, pass/fail grading, before/after comparison and
//! Sabine-based treatment sizing.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::decay::{spatial_average, BandParams, RoomGeometry};
use crate::error::{Error, Result};
use crate::noise::{AWeighting, BandSpectrum};
use crate::sti::{rate_sti, StiRating, StiResult};

/// Sabine constant, s/m.
const SABINE: f64 = 0.161;
/// Rooms up to this volume follow the small-room coverage guideline.
const SMALL_ROOM_VOLUME: f64 = 300.0;
/// Low bands get their own placement advice once their need exceeds the
/// mid-band need by this factor.
const LOW_BAND_EMPHASIS: f64 = 1.2;

/// Extra reverberation tolerance for one low-frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Widening {
    pub center: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetProfile {
    pub usage: String,
    /// Target reverberation time, seconds.
    pub t_target: f64,
    /// Relative tolerance around the target, e.g. 0.2 for ±20 %.
    #[serde(default = "defaults::t_tolerance")]
    pub t_tolerance: f64,
    #[serde(default = "defaults::widening")]
    pub low_freq_widening: Vec<Widening>,
    #[serde(default)]
    pub c50_min: f64,
    #[serde(default = "defaults::c50_optimal")]
    pub c50_optimal: f64,
    #[serde(default = "defaults::sti_min")]
    pub sti_min: f64,
    #[serde(default = "defaults::sti_goal")]
    pub sti_goal: f64,
    /// Maximum ambient noise, dB(A).
    #[serde(default = "defaults::noise_max")]
    pub noise_max: f64,
}

mod defaults {
    use super::Widening;

    pub fn t_tolerance() -> f64 {
        0.2
    }
    pub fn widening() -> Vec<Widening> {
        vec![Widening { center: 63.0, multiplier: 2.0 }, Widening { center: 125.0, multiplier: 1.5 }]
    }
    pub fn c50_optimal() -> f64 {
        2.0
    }
    pub fn sti_min() -> f64 {
        0.60
    }
    pub fn sti_goal() -> f64 {
        0.75
    }
    pub fn noise_max() -> f64 {
        35.0
    }
}

impl TargetProfile {
    /// A profile with the given reverberation target and default limits for
    /// everything else.
    pub fn custom(t_target: f64) -> Result<Self> {
        let profile = TargetProfile {
            usage: "custom".into(),
            t_target,
            t_tolerance: defaults::t_tolerance(),
            low_freq_widening: defaults::widening(),
            c50_min: 0.0,
            c50_optimal: defaults::c50_optimal(),
            sti_min: defaults::sti_min(),
            sti_goal: defaults::sti_goal(),
            noise_max: defaults::noise_max(),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let profile: TargetProfile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.t_target > 0.0) {
            return bad("t_target must be positive");
        }
        if !(0.0..1.0).contains(&self.t_tolerance) {
            return bad("t_tolerance must lie in [0, 1)");
        }
        if self.low_freq_widening.iter().any(|w| !(w.multiplier > 0.0 && w.center > 0.0)) {
            return bad("widening entries need positive centers and multipliers");
        }
        if !(self.c50_min <= self.c50_optimal) {
            return bad("c50_min must not exceed c50_optimal");
        }
        if !(0.0 <= self.sti_min && self.sti_min <= self.sti_goal && self.sti_goal <= 1.0) {
            return bad("need 0 <= sti_min <= sti_goal <= 1");
        }
        if !self.noise_max.is_finite() {
            return bad("noise_max must be finite");
        }
        Ok(())
    }

    /// Widening multiplier of the octave containing `center` (1 if none).
    pub fn widening_at(&self, center: f64) -> f64 {
        self.low_freq_widening
            .iter()
            .find(|w| (center / w.center).log2().abs() < 0.5)
            .map_or(1.0, |w| w.multiplier)
    }

    /// Accepted reverberation range `[lo, hi]` for a band.
    pub fn tolerance_band(&self, center: f64) -> (f64, f64) {
        let spread = self.t_tolerance * self.widening_at(center);
        ((self.t_target * (1.0 - spread)).max(0.0), self.t_target * (1.0 + spread))
    }
}

/// Targets for the supported usages: `hybrid_meeting` and `lecture` both
/// call for 0.5 s ± 20 %. `custom` needs explicit values.
pub fn target_profile(usage: &str, geometry: &RoomGeometry) -> Result<TargetProfile> {
    RoomGeometry::new(geometry.volume)?;
    match usage {
        "hybrid_meeting" | "lecture" => {
            let mut profile = TargetProfile::custom(0.5)?;
            profile.usage = usage.to_string();
            Ok(profile)
        }
        "custom" => Err(Error::MissingTargets),
        other => Err(Error::UnknownUsage(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T30Verdict {
    Pass,
    High,
    Low,
    NoData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T30Check {
    pub band_center: f64,
    pub value: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub verdict: T30Verdict,
}

pub fn check_t30(bands: &[BandParams], profile: &TargetProfile) -> Vec<T30Check> {
    bands
        .iter()
        .map(|b| {
            let (lower, upper) = profile.tolerance_band(b.band_center);
            let verdict = match b.t30 {
                None => T30Verdict::NoData,
                Some(t) if t < lower => T30Verdict::Low,
                Some(t) if t > upper => T30Verdict::High,
                Some(_) => T30Verdict::Pass,
            };
            T30Check { band_center: b.band_center, value: b.t30, lower, upper, verdict }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C50Verdict {
    BelowMin,
    Acceptable,
    Optimal,
    NoData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C50Check {
    pub band_center: f64,
    #[serde(with = "crate::sentinel::option")]
    pub value: Option<f64>,
    pub verdict: C50Verdict,
}

pub fn c50_verdict(c50: f64, profile: &TargetProfile) -> C50Verdict {
    if c50 < profile.c50_min {
        C50Verdict::BelowMin
    } else if c50 < profile.c50_optimal {
        C50Verdict::Acceptable
    } else {
        C50Verdict::Optimal
    }
}

pub fn check_c50(bands: &[BandParams], profile: &TargetProfile) -> Vec<C50Check> {
    bands
        .iter()
        .map(|b| C50Check {
            band_center: b.band_center,
            value: b.c50,
            verdict: b.c50.map_or(C50Verdict::NoData, |c| c50_verdict(c, profile)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StiVerdict {
    Fail,
    Pass,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiCheck {
    /// The lower of male and female STI.
    pub value: f64,
    pub rating: StiRating,
    pub verdict: StiVerdict,
}

pub fn sti_verdict(sti: f64, profile: &TargetProfile) -> StiVerdict {
    if sti < profile.sti_min {
        StiVerdict::Fail
    } else if sti < profile.sti_goal {
        StiVerdict::Pass
    } else {
        StiVerdict::Goal
    }
}

pub fn check_sti(results: &[StiResult], profile: &TargetProfile) -> Result<Vec<StiCheck>> {
    results
        .iter()
        .map(|r| {
            let value = r.sti_min();
            Ok(StiCheck { value, rating: rate_sti(value)?, verdict: sti_verdict(value, profile) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCheck {
    #[serde(with = "crate::sentinel")]
    pub level_dba: f64,
    pub limit_dba: f64,
    pub verdict: NoiseVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn check_noise(noise: &BandSpectrum, profile: &TargetProfile) -> Result<NoiseCheck> {
    check_noise_with(noise, profile, &AWeighting::default())
}

pub fn check_noise_with(noise: &BandSpectrum, profile: &TargetProfile, weighting: &AWeighting) -> Result<NoiseCheck> {
    let level_dba = weighting.total(noise)?;
    let warning = (level_dba == f64::NEG_INFINITY).then(|| "noise spectrum is empty or silent".to_string());
    let verdict = if level_dba <= profile.noise_max { NoiseVerdict::Pass } else { NoiseVerdict::Fail };
    Ok(NoiseCheck { level_dba, limit_dba: profile.noise_max, verdict, warning })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub t30_pass: usize,
    pub t30_high: usize,
    pub t30_low: usize,
    pub t30_no_data: usize,
    pub c50_below_min: usize,
    pub c50_acceptable: usize,
    pub c50_optimal: usize,
    pub c50_no_data: usize,
    pub sti_fail: usize,
    pub sti_pass: usize,
    pub sti_goal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub profile: TargetProfile,
    pub t30: Vec<T30Check>,
    pub c50: Vec<C50Check>,
    pub sti: Vec<StiCheck>,
    pub noise: Option<NoiseCheck>,
    pub summary: ComplianceSummary,
}

/// Grades every band and position against `profile`.
pub fn compliance_report(
    bands: &[BandParams],
    sti: &[StiResult],
    noise: Option<&BandSpectrum>,
    profile: &TargetProfile,
) -> Result<ComplianceReport> {
    let t30 = check_t30(bands, profile);
    let c50 = check_c50(bands, profile);
    let sti = check_sti(sti, profile)?;
    let noise = noise.map(|n| check_noise(n, profile)).transpose()?;
    let mut summary = ComplianceSummary::default();
    for c in &t30 {
        match c.verdict {
            T30Verdict::Pass => summary.t30_pass += 1,
            T30Verdict::High => summary.t30_high += 1,
            T30Verdict::Low => summary.t30_low += 1,
            T30Verdict::NoData => summary.t30_no_data += 1,
        }
    }
    for c in &c50 {
        match c.verdict {
            C50Verdict::BelowMin => summary.c50_below_min += 1,
            C50Verdict::Acceptable => summary.c50_acceptable += 1,
            C50Verdict::Optimal => summary.c50_optimal += 1,
            C50Verdict::NoData => summary.c50_no_data += 1,
        }
    }
    for c in &sti {
        match c.verdict {
            StiVerdict::Fail => summary.sti_fail += 1,
            StiVerdict::Pass => summary.sti_pass += 1,
            StiVerdict::Goal => summary.sti_goal += 1,
        }
    }
    Ok(ComplianceReport { profile: profile.clone(), t30, c50, sti, noise, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Untreated,
    Treated,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionResult {
    pub receiver: String,
    pub bands: Vec<BandParams>,
    pub sti_without_noise: Option<StiResult>,
    pub sti_with_noise: Option<StiResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub source: String,
    pub positions: Vec<PositionResult>,
    pub noise: Option<BandSpectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSession {
    pub id: String,
    pub condition: Condition,
    pub geometry: RoomGeometry,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDelta {
    pub band_center: f64,
    #[serde(with = "crate::sentinel::option")]
    pub before: Option<f64>,
    #[serde(with = "crate::sentinel::option")]
    pub after: Option<f64>,
    pub delta: Option<f64>,
    pub delta_pct: Option<f64>,
}

impl BandDelta {
    fn new(band_center: f64, before: Option<f64>, after: Option<f64>) -> Self {
        let (delta, delta_pct) = match (before, after) {
            (Some(b), Some(a)) if a.is_finite() && b.is_finite() => {
                let d = a - b;
                (Some(d), (b != 0.0).then(|| 100.0 * d / b))
            }
            _ => (None, None),
        };
        BandDelta { band_center, before, after, delta, delta_pct }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiDelta {
    /// min(male, female) before and after.
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    pub delta_male: f64,
    pub delta_female: f64,
    pub rating_before: StiRating,
    pub rating_after: StiRating,
    pub transition: String,
}

impl StiDelta {
    fn new(before: &StiResult, after: &StiResult) -> Result<Self> {
        let (b, a) = (before.sti_min(), after.sti_min());
        let (rating_before, rating_after) = (rate_sti(b)?, rate_sti(a)?);
        Ok(StiDelta {
            before: b,
            after: a,
            delta: a - b,
            delta_male: after.sti_male - before.sti_male,
            delta_female: after.sti_female - before.sti_female,
            rating_before,
            rating_after,
            transition: format!("{rating_before} → {rating_after}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDelta {
    pub source: String,
    pub receiver: String,
    pub t30: Vec<BandDelta>,
    pub c50: Vec<BandDelta>,
    pub sti_with_noise: Option<StiDelta>,
    pub sti_without_noise: Option<StiDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDelta {
    pub source: String,
    pub matched_positions: usize,
    pub t30: Vec<BandDelta>,
    pub c50: Vec<BandDelta>,
    pub mean_sti_delta_with_noise: Option<f64>,
    pub mean_sti_delta_without_noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionComparison {
    pub before_id: String,
    pub after_id: String,
    pub positions: Vec<PositionDelta>,
    pub scenarios: Vec<ScenarioDelta>,
    /// Entries present in only one session, e.g. `S2/M4 (after only)`.
    pub unmatched: Vec<String>,
    /// Rating changes counted over matched positions (with-noise STI when
    /// available); unchanged ratings are not listed.
    pub transitions: BTreeMap<String, usize>,
}

fn band_deltas(before: &[BandParams], after: &[BandParams], pick: fn(&BandParams) -> Option<f64>) -> Result<Vec<BandDelta>> {
    if before.len() != after.len() || before.iter().zip(after).any(|(b, a)| b.band_center != a.band_center) {
        return Err(Error::BandSetMismatch);
    }
    Ok(before.iter().zip(after).map(|(b, a)| BandDelta::new(b.band_center, pick(b), pick(a))).collect())
}

fn sti_delta(before: Option<&StiResult>, after: Option<&StiResult>) -> Result<Option<StiDelta>> {
    match (before, after) {
        (Some(b), Some(a)) => StiDelta::new(b, a).map(Some),
        _ => Ok(None),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Matches scenarios by source label and positions by receiver label.
pub fn compare_sessions(before: &MeasurementSession, after: &MeasurementSession) -> Result<SessionComparison> {
    let mut positions = Vec::new();
    let mut scenarios = Vec::new();
    let mut unmatched = Vec::new();
    let mut transitions = BTreeMap::new();

    for sb in &before.scenarios {
        let Some(sa) = after.scenarios.iter().find(|s| s.source == sb.source) else {
            unmatched.push(format!("{} (before only)", sb.source));
            continue;
        };
        let mut matched_before = Vec::new();
        let mut matched_after = Vec::new();
        let mut scenario_deltas = Vec::new();
        for pb in &sb.positions {
            let Some(pa) = sa.positions.iter().find(|p| p.receiver == pb.receiver) else {
                unmatched.push(format!("{}/{} (before only)", sb.source, pb.receiver));
                continue;
            };
            let delta = PositionDelta {
                source: sb.source.clone(),
                receiver: pb.receiver.clone(),
                t30: band_deltas(&pb.bands, &pa.bands, |b| b.t30)?,
                c50: band_deltas(&pb.bands, &pa.bands, |b| b.c50)?,
                sti_with_noise: sti_delta(pb.sti_with_noise.as_ref(), pa.sti_with_noise.as_ref())?,
                sti_without_noise: sti_delta(pb.sti_without_noise.as_ref(), pa.sti_without_noise.as_ref())?,
            };
            if let Some(d) = delta.sti_with_noise.as_ref().or(delta.sti_without_noise.as_ref()) {
                if d.rating_before != d.rating_after {
                    *transitions.entry(d.transition.clone()).or_insert(0) += 1;
                }
            }
            matched_before.push(pb.bands.clone());
            matched_after.push(pa.bands.clone());
            scenario_deltas.push(delta);
        }
        for pa in &sa.positions {
            if !sb.positions.iter().any(|p| p.receiver == pa.receiver) {
                unmatched.push(format!("{}/{} (after only)", sa.source, pa.receiver));
            }
        }
        if !matched_before.is_empty() {
            let avg_before: Vec<BandParams> = spatial_average(&matched_before)?.into_iter().map(|a| a.params).collect();
            let avg_after: Vec<BandParams> = spatial_average(&matched_after)?.into_iter().map(|a| a.params).collect();
            scenarios.push(ScenarioDelta {
                source: sb.source.clone(),
                matched_positions: scenario_deltas.len(),
                t30: band_deltas(&avg_before, &avg_after, |b| b.t30)?,
                c50: band_deltas(&avg_before, &avg_after, |b| b.c50)?,
                mean_sti_delta_with_noise: mean(scenario_deltas.iter().filter_map(|d| d.sti_with_noise.as_ref().map(|s| s.delta))),
                mean_sti_delta_without_noise: mean(
                    scenario_deltas.iter().filter_map(|d| d.sti_without_noise.as_ref().map(|s| s.delta)),
                ),
            });
        }
        positions.extend(scenario_deltas);
    }
    for sa in &after.scenarios {
        if !before.scenarios.iter().any(|s| s.source == sa.source) {
            unmatched.push(format!("{} (after only)", sa.source));
        }
    }
    if positions.is_empty() {
        return Err(Error::NoMatchingPositions);
    }
    Ok(SessionComparison {
        before_id: before.id.clone(),
        after_id: after.id.clone(),
        positions,
        scenarios,
        unmatched,
        transitions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surfaces {
    pub ceiling_area: f64,
    pub wall_area: f64,
    pub rear_wall_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisorOptions {
    /// Nominal absorption coefficient of the treatment at mid frequencies.
    pub absorber_alpha: f64,
}

impl Default for AdvisorOptions {
    fn default() -> Self {
        AdvisorOptions { absorber_alpha: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionNeed {
    pub band_center: f64,
    pub current_t30: Option<f64>,
    pub target: f64,
    /// Additional equivalent absorption area, m² Sabine.
    pub added_absorption: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGuidance {
    /// Mid-frequency absorption driving the coverage estimate, m².
    pub mid_band_absorption: f64,
    /// Treated surface area needed at the nominal coefficient, m².
    pub absorber_area: f64,
    pub ceiling_fraction: f64,
    pub wall_fraction: f64,
    /// Share of `absorber_area` on the ceiling if the ceiling alone were used.
    pub ceiling_only_fraction: f64,
    pub guideline: String,
    pub within_guideline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorReport {
    pub volume: f64,
    pub bands: Vec<AbsorptionNeed>,
    pub coverage: Option<CoverageGuidance>,
    pub guidance: Vec<String>,
}

/// `0.161 V (1/T_target - 1/T_current)`, floored at zero.
pub fn added_absorption(volume: f64, t_current: f64, t_target: f64) -> f64 {
    (SABINE * volume * (1.0 / t_target - 1.0 / t_current)).max(0.0)
}

/// Per-band absorption needed to reach the profile target, with coverage
/// guidance when surface areas are known. Sabine estimate only.
pub fn sabine_advisor(
    geometry: &RoomGeometry,
    current_t30: &[BandParams],
    profile: &TargetProfile,
    surfaces: Option<&Surfaces>,
    options: &AdvisorOptions,
) -> Result<AdvisorReport> {
    let volume = geometry.volume;
    if !(volume.is_finite() && volume > 0.0) {
        return Err(Error::InvalidInput(format!("room volume {volume} must be positive")));
    }
    if current_t30.iter().filter_map(|b| b.t30).any(|t| !(t > 0.0)) {
        return Err(Error::InvalidInput("reverberation times must be positive".into()));
    }
    if !(options.absorber_alpha > 0.0 && options.absorber_alpha <= 1.0) {
        return Err(Error::InvalidInput("absorber coefficient must lie in (0, 1]".into()));
    }
    let target = profile.t_target;

    let bands: Vec<AbsorptionNeed> = current_t30
        .iter()
        .map(|b| {
            let (added_absorption, note) = match b.t30 {
                None => (None, Some("no T30 available".to_string())),
                Some(t) if t < target => (Some(0.0), Some("over-damped: already below target".to_string())),
                Some(t) => (Some(added_absorption(volume, t, target)), None),
            };
            AbsorptionNeed { band_center: b.band_center, current_t30: b.t30, target, added_absorption, note }
        })
        .collect();

    let small_room = volume <= SMALL_ROOM_VOLUME;
    let mut guidance = vec![format!(
        "Sabine estimate for V = {volume:.1} m3 towards T = {target:.2} s; treat the figures as a starting point."
    )];
    guidance.push(if small_room {
        "Guideline for rooms up to about 300 m3: treat 20-30% of the ceiling and up to 15% of the rear walls.".into()
    } else {
        "Guideline for larger rooms: treat 50-70% of the ceiling and 20-40% of the walls, including the rear wall."
            .into()
    });

    let need_at = |lo: f64, hi: f64| {
        mean(bands.iter().filter(|b| b.band_center >= lo && b.band_center <= hi).filter_map(|b| b.added_absorption))
    };
    let mid = need_at(400.0, 1300.0);
    let low = bands
        .iter()
        .filter(|b| b.band_center < 250.0)
        .filter_map(|b| b.added_absorption)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    if let (Some(low), mid) = (low, mid) {
        if low > LOW_BAND_EMPHASIS * mid.unwrap_or(0.0) {
            guidance.push(
                "Low bands need the most absorption: place porous absorbers and bass traps at room edges and corners, where modal pressure maxima occur."
                    .into(),
            );
        }
    }

    let coverage = match (surfaces, mid) {
        (Some(s), Some(mid)) => Some(coverage_guidance(s, mid, options.absorber_alpha, small_room)?),
        _ => None,
    };
    Ok(AdvisorReport { volume, bands, coverage, guidance })
}

fn coverage_guidance(s: &Surfaces, mid: f64, alpha: f64, small_room: bool) -> Result<CoverageGuidance> {
    if !(s.ceiling_area > 0.0 && s.wall_area >= 0.0 && s.rear_wall_area >= 0.0) {
        return Err(Error::InvalidInput("surface areas must be positive".into()));
    }
    let area = mid / alpha;
    let (ceiling_range, wall_cap, wall_area, guideline) = if small_room {
        ((0.20, 0.30), 0.15, s.rear_wall_area, "20-30% of the ceiling, up to 15% of the rear walls")
    } else {
        ((0.50, 0.70), 0.40, s.wall_area, "50-70% of the ceiling, 20-40% of the walls")
    };
    let ceiling_share = area.min(ceiling_range.1 * s.ceiling_area);
    let wall_share = area - ceiling_share;
    let ceiling_fraction = ceiling_share / s.ceiling_area;
    let wall_fraction = if wall_area > 0.0 { wall_share / wall_area } else if wall_share > 0.0 { f64::MAX } else { 0.0 };
    Ok(CoverageGuidance {
        mid_band_absorption: mid,
        absorber_area: area,
        ceiling_fraction,
        wall_fraction,
        ceiling_only_fraction: area / s.ceiling_area,
        guideline: guideline.into(),
        within_guideline: wall_fraction <= wall_cap,
    })
}
