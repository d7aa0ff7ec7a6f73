use std::fmt;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid manifest {}:\n{}", path.display(), Bullets(violations))]
    ManifestInvalid { path: PathBuf, violations: Vec<String> },
    #[error("--with-noise requested but scenario '{scenario}' has no noise entry")]
    MissingNoise { scenario: String },
    #[error("no position could be analyzed")]
    NothingAnalyzed,
    #[error(transparent)]
    Core(#[from] roomacoustics::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

struct Bullets<'a>(&'a [String]);

impl fmt::Display for Bullets<'_> {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        for (i, line) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {line}")?;
        }
        Ok(())
    }
}
