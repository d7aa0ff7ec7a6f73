//! Report files: one `report.json` per run plus per-parameter CSV tables.

use serde::Serialize;
use std::fs;
use std::path::PathBuf;

use roomacoustics::compliance::Condition;

use crate::error::CliError;
use crate::manifest::Manifest;
use crate::session::FileIssue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Partial,
}

impl Status {
    pub fn from_issues(issues: &[FileIssue]) -> Self {
        if issues.is_empty() {
            Status::Complete
        } else {
            Status::Partial
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Complete => 0,
            Status::Partial => 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SessionInfo {
    pub id: String,
    pub condition: Condition,
    pub volume_m3: f64,
    pub usage: String,
    pub manifest: String,
}

impl SessionInfo {
    pub fn from_manifest(m: &Manifest) -> Self {
        SessionInfo {
            id: m.session_id.clone(),
            condition: m.condition,
            volume_m3: m.volume_m3,
            usage: m.usage.clone(),
            manifest: m.path.display().to_string(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<String>,
    status: Status,
    issues: &'a [FileIssue],
    #[serde(flatten)]
    body: &'a T,
}

pub struct Output {
    pub dir: PathBuf,
    pub timestamp: bool,
}

impl Output {
    pub fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|source| CliError::Output { path: self.dir.clone(), source })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_report<T: Serialize>(
        &self,
        command: &'static str,
        status: Status,
        issues: &[FileIssue],
        body: &T,
    ) -> Result<PathBuf, CliError> {
        let envelope = Envelope {
            tool: "roomac",
            version: env!("CARGO_PKG_VERSION"),
            command,
            generated_at: self.timestamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            status,
            issues,
            body,
        };
        let mut text = serde_json::to_string_pretty(&envelope)?;
        text.push('\n');
        let path = self.path("report.json");
        fs::write(&path, text).map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(path)
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(csv::Writer::from_writer(file))
    }

    pub fn subdir(&self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::create_dir_all(&path).map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(path)
    }
}

/// CSV cell for an optional value; empty when absent, `+inf`/`-inf` for
/// the sentinels.
pub fn cell(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::INFINITY => "+inf".into(),
        Some(x) if x == f64::NEG_INFINITY => "-inf".into(),
        Some(x) => format!("{x:.6}"),
    }
}

/// Table text for an optional value with fixed decimals.
pub fn text(v: Option<f64>, decimals: usize) -> String {
    match v {
        None => "-".into(),
        Some(x) if x == f64::INFINITY => "+inf".into(),
        Some(x) if x == f64::NEG_INFINITY => "-inf".into(),
        Some(x) => format!("{x:.decimals$}"),
    }
}

pub fn file_stem_safe(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}
