//! Session manifest: a TOML description of one measurement session.
//!
//! ```toml
//! schema_version = 1
//!
//! [session]
//! id = "hs3-untreated"
//! condition = "untreated"      # untreated | treated | other
//! volume_m3 = 150.8
//! usage = "hybrid_meeting"     # hybrid_meeting | lecture | custom
//!
//! [options]                    # all optional
//! bands = "octave"             # octave | third
//! sti_noise = true
//! gender = "male"
//!
//! [room.surfaces]              # optional, m²
//! ceiling = 55.0
//! walls = 110.0
//! rear_wall = 20.0
//!
//! [targets]                    # required for usage = "custom"
//! t_target = 0.6
//!
//! [[scenario]]
//! source = "S1"
//! noise = { file = "noise_s1.wav", calibration_offset_db = 94.0, duration_s = 15.0 }
//!
//! [[scenario.receiver]]
//! label = "M1"
//! ir_file = "s1_m1.wav"
//! distance_m = 3.2
//! channel = 0                  # optional, for multi-channel files
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use serde::Deserialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use roomacoustics::compliance::{Condition, Surfaces, TargetProfile};
use roomacoustics::noise::DEFAULT_INTEGRATION_TIME;
use roomacoustics::signal::BandFraction;
use roomacoustics::sti::Gender;

use crate::error::CliError;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    schema_version: Option<i64>,
    session: Option<RawSession>,
    #[serde(default)]
    options: RawOptions,
    room: Option<RawRoom>,
    targets: Option<toml::Table>,
    #[serde(default)]
    scenario: Vec<RawScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    id: Option<String>,
    condition: Option<String>,
    volume_m3: Option<f64>,
    usage: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    bands: Option<String>,
    sti_noise: Option<bool>,
    gender: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    surfaces: Option<RawSurfaces>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurfaces {
    ceiling: f64,
    walls: f64,
    rear_wall: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    source: Option<String>,
    noise: Option<RawNoise>,
    #[serde(default)]
    receiver: Vec<RawReceiver>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    file: Option<PathBuf>,
    calibration_offset_db: Option<f64>,
    duration_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReceiver {
    label: Option<String>,
    ir_file: Option<PathBuf>,
    distance_m: Option<f64>,
    channel: Option<u16>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub path: PathBuf,
    pub session_id: String,
    pub condition: Condition,
    pub volume_m3: f64,
    pub usage: String,
    pub bands: BandFraction,
    pub sti_noise: bool,
    pub gender: Gender,
    pub surfaces: Option<Surfaces>,
    /// Explicit targets from the `[targets]` table.
    pub targets: Option<TargetProfile>,
    pub scenarios: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone)]
pub struct ScenarioEntry {
    pub source: String,
    pub noise: Option<NoiseEntry>,
    pub receivers: Vec<ReceiverEntry>,
}

#[derive(Debug, Clone)]
pub struct NoiseEntry {
    /// As written in the manifest.
    pub file: PathBuf,
    pub resolved: PathBuf,
    pub calibration_offset_db: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone)]
pub struct ReceiverEntry {
    pub label: String,
    pub ir_file: PathBuf,
    pub resolved: PathBuf,
    pub distance_m: f64,
    pub channel: Option<u16>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ManifestInvalid {
            path: path.to_path_buf(),
            violations: vec![format!("cannot read manifest: {e}")],
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let invalid = |violations: Vec<String>| CliError::ManifestInvalid { path: path.to_path_buf(), violations };
        let raw: RawManifest = toml::from_str(text).map_err(|e| invalid(vec![e.message().to_string()]))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut v = Vec::new();

        match raw.schema_version {
            None => v.push("schema_version is missing".to_string()),
            Some(SCHEMA_VERSION) => {}
            Some(other) => v.push(format!("schema_version {other} is not supported (expected {SCHEMA_VERSION})")),
        }

        let session = raw.session.unwrap_or(RawSession { id: None, condition: None, volume_m3: None, usage: None });
        let session_id = session.id.unwrap_or_default();
        if session_id.trim().is_empty() {
            v.push("session.id is missing".into());
        }
        let condition = match session.condition.as_deref() {
            Some("untreated") => Condition::Untreated,
            Some("treated") => Condition::Treated,
            Some("other") => Condition::Other,
            Some(other) => {
                v.push(format!("session.condition '{other}' must be untreated, treated or other"));
                Condition::Other
            }
            None => {
                v.push("session.condition is missing".into());
                Condition::Other
            }
        };
        let volume_m3 = match session.volume_m3 {
            Some(vol) if vol.is_finite() && vol > 0.0 => vol,
            Some(vol) => {
                v.push(format!("session.volume_m3 must be positive, got {vol}"));
                0.0
            }
            None => {
                v.push("session.volume_m3 is missing".into());
                0.0
            }
        };
        let usage = session.usage.unwrap_or_default();
        match usage.as_str() {
            "hybrid_meeting" | "lecture" => {}
            "custom" if raw.targets.is_some() => {}
            "custom" => v.push("usage 'custom' needs a [targets] table".into()),
            "" => v.push("session.usage is missing".into()),
            other => v.push(format!("session.usage '{other}' must be hybrid_meeting, lecture or custom")),
        }

        let bands = match raw.options.bands.as_deref() {
            None | Some("octave") => BandFraction::Octave,
            Some("third") => BandFraction::Third,
            Some(other) => {
                v.push(format!("options.bands '{other}' must be octave or third"));
                BandFraction::Octave
            }
        };
        let gender = match raw.options.gender.as_deref() {
            None | Some("male") => Gender::Male,
            Some("female") => Gender::Female,
            Some(other) => {
                v.push(format!("options.gender '{other}' must be male or female"));
                Gender::Male
            }
        };

        let surfaces = raw.room.and_then(|r| r.surfaces).map(|s| Surfaces {
            ceiling_area: s.ceiling,
            wall_area: s.walls,
            rear_wall_area: s.rear_wall,
        });
        if let Some(s) = &surfaces {
            if !(s.ceiling_area > 0.0 && s.wall_area >= 0.0 && s.rear_wall_area >= 0.0) {
                v.push("room.surfaces: ceiling must be positive and wall areas non-negative".into());
            }
        }

        let targets = match raw.targets {
            None => None,
            Some(mut table) => {
                table.entry("usage").or_insert_with(|| toml::Value::String(usage.clone()));
                match toml::to_string(&table).map_err(|e| e.to_string()).and_then(|t| {
                    TargetProfile::from_toml_str(&t).map_err(|e| e.to_string())
                }) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        v.push(format!("targets: {e}"));
                        None
                    }
                }
            }
        };

        if raw.scenario.is_empty() {
            v.push("at least one [[scenario]] is required".into());
        }
        let mut sources = BTreeSet::new();
        let mut scenarios = Vec::new();
        for (i, s) in raw.scenario.into_iter().enumerate() {
            let source = s.source.unwrap_or_default();
            let at = if source.is_empty() { format!("scenario[{i}]") } else { format!("scenario '{source}'") };
            if source.is_empty() {
                v.push(format!("{at}: source is missing"));
            } else if !sources.insert(source.clone()) {
                v.push(format!("{at}: duplicate source label"));
            }
            let noise = s.noise.and_then(|n| {
                let file = n.file.or_else(|| {
                    v.push(format!("{at}: noise.file is missing"));
                    None
                })?;
                let calibration_offset_db = match n.calibration_offset_db {
                    Some(c) if c.is_finite() => c,
                    _ => {
                        v.push(format!("{at}: noise.calibration_offset_db must be a finite number"));
                        0.0
                    }
                };
                let duration_s = n.duration_s.unwrap_or(DEFAULT_INTEGRATION_TIME);
                if !(duration_s > 0.0) {
                    v.push(format!("{at}: noise.duration_s must be positive"));
                }
                Some(NoiseEntry { resolved: base.join(&file), file, calibration_offset_db, duration_s })
            });
            if s.receiver.is_empty() {
                v.push(format!("{at}: at least one [[scenario.receiver]] is required"));
            }
            let mut labels = BTreeSet::new();
            let mut receivers = Vec::new();
            for (j, r) in s.receiver.into_iter().enumerate() {
                let label = r.label.unwrap_or_default();
                let rat = if label.is_empty() { format!("{at} receiver[{j}]") } else { format!("{at} receiver '{label}'") };
                if label.is_empty() {
                    v.push(format!("{rat}: label is missing"));
                } else if !labels.insert(label.clone()) {
                    v.push(format!("{rat}: duplicate receiver label"));
                }
                let ir_file = r.ir_file.unwrap_or_default();
                if ir_file.as_os_str().is_empty() {
                    v.push(format!("{rat}: ir_file is missing"));
                }
                let distance_m = match r.distance_m {
                    Some(d) if d.is_finite() && d > 0.0 => d,
                    Some(d) => {
                        v.push(format!("{rat}: distance_m must be positive, got {d}"));
                        0.0
                    }
                    None => {
                        v.push(format!("{rat}: distance_m is missing"));
                        0.0
                    }
                };
                receivers.push(ReceiverEntry {
                    label,
                    resolved: base.join(&ir_file),
                    ir_file,
                    distance_m,
                    channel: r.channel,
                });
            }
            scenarios.push(ScenarioEntry { source, noise, receivers });
        }

        if !v.is_empty() {
            return Err(invalid(v));
        }
        Ok(Manifest {
            path: path.to_path_buf(),
            session_id,
            condition,
            volume_m3,
            usage,
            bands,
            sti_noise: raw.options.sti_noise.unwrap_or(true),
            gender,
            surfaces,
            targets,
            scenarios,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
schema_version = 1
[session]
id = "a"
condition = "treated"
volume_m3 = 150.8
usage = "lecture"
[[scenario]]
source = "S1"
noise = { file = "n.wav", calibration_offset_db = 94.0 }
[[scenario.receiver]]
label = "M1"
ir_file = "m1.wav"
distance_m = 2.0
"#;

    fn violations(text: &str) -> Vec<String> {
        match Manifest::parse(text, Path::new("dir/session.toml")) {
            Err(CliError::ManifestInvalid { violations, .. }) => violations,
            other => panic!("expected ManifestInvalid, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_resolves_paths() {
        let m = Manifest::parse(GOOD, Path::new("dir/session.toml")).unwrap();
        assert_eq!(m.scenarios[0].receivers[0].resolved, Path::new("dir/m1.wav"));
        let noise = m.scenarios[0].noise.as_ref().unwrap();
        assert_eq!(noise.duration_s, DEFAULT_INTEGRATION_TIME);
        assert_eq!(m.bands, BandFraction::Octave);
        assert!(m.sti_noise);
    }

    #[test]
    fn every_violation_is_listed() {
        let v = violations(
            r#"
schema_version = 2
[session]
id = "a"
condition = "renovated"
usage = "lecture"
[[scenario]]
source = "S1"
[[scenario.receiver]]
label = "M1"
ir_file = "m1.wav"
distance_m = -1.0
"#,
        );
        assert_eq!(v.len(), 4, "{v:?}");
        assert!(v.iter().any(|s| s.contains("volume_m3 is missing")));
        assert!(v.iter().any(|s| s.contains("distance_m")));
    }

    #[test]
    fn empty_scenarios_and_custom_usage() {
        let text = GOOD.split("[[scenario]]").next().unwrap().replace("lecture", "custom");
        let v = violations(&text);
        assert!(v.iter().any(|s| s.contains("at least one [[scenario]]")));
        assert!(v.iter().any(|s| s.contains("[targets]")));
        let with_targets = format!("{GOOD}\n[targets]\nt_target = 0.6\n").replace("lecture", "custom");
        let m = Manifest::parse(&with_targets, Path::new("s.toml")).unwrap();
        assert_eq!(m.targets.unwrap().t_target, 0.6);
    }

    #[test]
    fn syntax_errors_are_manifest_errors() {
        assert_eq!(violations("schema_version = ").len(), 1);
        assert_eq!(violations("schema_version = 1\nbogus = 3\n").len(), 1);
    }
}
