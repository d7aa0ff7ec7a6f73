//! Turns a manifest into analyzed positions, collecting per-file failures
//! instead of aborting.

use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

use roomacoustics::compliance::{
    target_profile, MeasurementSession, PositionResult, Scenario, TargetProfile,
};
use roomacoustics::decay::{analyze_impulse_response, schroeder_curve, BandParams, DecayCurve, RoomGeometry};
use roomacoustics::noise::{band_leq, BandSpectrum};
use roomacoustics::signal::{
    load_audio, load_audio_channel, octave_filterbank, AudioBuffer, BandDefinition, BandFraction, ImpulseResponse,
};
use roomacoustics::sti::{noise_free_mtf, sti_from_mtf, StiModel};
use roomacoustics::Error;

use crate::error::CliError;
use crate::manifest::{Manifest, ReceiverEntry};

/// Report bands: octaves or third octaves spanning 63 Hz to 8 kHz.
pub fn report_bands(fraction: BandFraction) -> BandDefinition {
    match fraction {
        BandFraction::Octave => BandDefinition::room_octaves(),
        BandFraction::Third => BandDefinition::third_octaves(63.0, 8000.0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileIssue {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver: Option<String>,
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct PositionExtras {
    pub ir_file: String,
    pub distance_m: f64,
    pub curves: Vec<DecayCurve>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub session: MeasurementSession,
    /// Same shape as `session.scenarios[i].positions`.
    pub extras: Vec<Vec<PositionExtras>>,
    /// Noise spectrum on the STI octaves, per scenario source.
    pub sti_noise: BTreeMap<String, BandSpectrum>,
    pub issues: Vec<FileIssue>,
}

impl Evaluation {
    pub fn analyzed_positions(&self) -> usize {
        self.session.scenarios.iter().map(|s| s.positions.len()).sum()
    }

    /// Every analyzed position's bands, across scenarios.
    pub fn all_bands(&self) -> Vec<Vec<BandParams>> {
        self.session.scenarios.iter().flat_map(|s| s.positions.iter().map(|p| p.bands.clone())).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub sti: bool,
    pub curves: bool,
}

fn load_ir(receiver: &ReceiverEntry) -> Result<ImpulseResponse, Error> {
    let buffer = match receiver.channel {
        Some(ch) => load_audio_channel(&receiver.resolved, ch)?,
        None => load_audio(&receiver.resolved)?,
    };
    Ok(ImpulseResponse::from_buffer(buffer)?.with_distance(receiver.distance_m))
}

fn band_curves(ir: &ImpulseResponse, bands: &BandDefinition) -> Result<Vec<DecayCurve>, Error> {
    octave_filterbank(&ir.buffer, bands)?.iter().map(|b| schroeder_curve(b, ir.onset_index)).collect()
}

pub fn evaluate(manifest: &Manifest, bands: &BandDefinition, options: EvalOptions) -> Result<Evaluation, CliError> {
    let model = StiModel::default();
    let sti_bands = model.grid.band_definition();
    let mut scenarios = Vec::new();
    let mut extras = Vec::new();
    let mut sti_noise = BTreeMap::new();
    let mut issues = Vec::new();

    for entry in &manifest.scenarios {
        let issue = |receiver: Option<&str>, file: &Path, error: &Error| FileIssue {
            scenario: entry.source.clone(),
            receiver: receiver.map(str::to_string),
            file: file.display().to_string(),
            error: error.to_string(),
        };

        let mut noise = None;
        if let Some(n) = &entry.noise {
            let loaded = load_audio(&n.resolved).and_then(|rec| {
                let rec: AudioBuffer = rec.with_calibration(n.calibration_offset_db);
                let report = band_leq(&rec, bands, n.duration_s)?;
                let sti = if options.sti { Some(band_leq(&rec, &sti_bands, n.duration_s)?) } else { None };
                Ok((report, sti))
            });
            match loaded {
                Ok((report, sti)) => {
                    noise = Some(BandSpectrum { label: entry.source.clone(), ..report });
                    if let Some(sti) = sti {
                        sti_noise.insert(entry.source.clone(), sti);
                    }
                }
                Err(e) => issues.push(issue(None, &n.file, &e)),
            }
        }

        let mut positions = Vec::new();
        let mut scenario_extras = Vec::new();
        for r in &entry.receivers {
            let result = load_ir(r).and_then(|ir| {
                let ir = ir.with_positions(&entry.source, &r.label);
                let band_params = analyze_impulse_response(&ir, bands)?;
                let (without, with) = if options.sti {
                    let mtf = noise_free_mtf(&ir, &model.grid)?;
                    let without = sti_from_mtf(&mtf, None, Some(r.distance_m), &model)?;
                    let with = match sti_noise.get(&entry.source) {
                        Some(n) => Some(sti_from_mtf(&mtf, Some(n), Some(r.distance_m), &model)?),
                        None => None,
                    };
                    (Some(without), with)
                } else {
                    (None, None)
                };
                let curves = if options.curves { band_curves(&ir, bands)? } else { Vec::new() };
                Ok((
                    PositionResult {
                        receiver: r.label.clone(),
                        bands: band_params,
                        sti_without_noise: without,
                        sti_with_noise: with,
                    },
                    curves,
                ))
            });
            match result {
                Ok((position, curves)) => {
                    positions.push(position);
                    scenario_extras.push(PositionExtras {
                        ir_file: r.ir_file.display().to_string(),
                        distance_m: r.distance_m,
                        curves,
                    });
                }
                Err(e) => issues.push(issue(Some(&r.label), &r.ir_file, &e)),
            }
        }
        scenarios.push(Scenario { source: entry.source.clone(), positions, noise });
        extras.push(scenario_extras);
    }

    let session = MeasurementSession {
        id: manifest.session_id.clone(),
        condition: manifest.condition,
        geometry: RoomGeometry { volume: manifest.volume_m3, usage_labels: vec![manifest.usage.clone()] },
        scenarios,
    };
    let evaluation = Evaluation { session, extras, sti_noise, issues };
    if evaluation.analyzed_positions() == 0 {
        for i in &evaluation.issues {
            eprintln!("error: {}: {}", i.file, i.error);
        }
        return Err(CliError::NothingAnalyzed);
    }
    Ok(evaluation)
}

/// Resolves the target profile: an explicit `--target` (usage name or TOML
/// file) wins over the manifest's `[targets]`, which wins over its usage.
pub fn resolve_profile(manifest: &Manifest, target: Option<&str>) -> Result<TargetProfile, CliError> {
    let geometry = RoomGeometry::new(manifest.volume_m3)?;
    match target {
        Some(t) if t.ends_with(".toml") => {
            let text = std::fs::read_to_string(t)
                .map_err(|_| CliError::Core(Error::FileNotFound(t.into())))?;
            Ok(TargetProfile::from_toml_str(&text)?)
        }
        Some("custom") => manifest.targets.clone().ok_or(CliError::Core(Error::MissingTargets)),
        Some(name) => Ok(target_profile(name, &geometry)?),
        None => match &manifest.targets {
            Some(p) => Ok(p.clone()),
            None => Ok(target_profile(&manifest.usage, &geometry)?),
        },
    }
}
