use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the analysis library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("input has {channels} channels; split channels before analysis")]
    MultiChannelInput { channels: u16 },
    #[error("channel {requested} requested but file has {channels} channels")]
    ChannelOutOfRange { requested: u16, channels: u16 },
    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },
    #[error("no onset detected (signal is silent)")]
    NoOnsetDetected,
    #[error("band {center} Hz has upper edge {upper:.1} Hz above Nyquist {nyquist:.1} Hz")]
    BandAboveNyquist { center: f64, upper: f64, nyquist: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("decay curve spans only {achieved_db:.1} dB; {required_db:.0} dB required")]
    InsufficientDecayRange { achieved_db: f64, required_db: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("band sets do not match")]
    BandSetMismatch,
    #[error("weight vectors must hold 7 alpha and 6 beta factors, got {alpha} and {beta}")]
    WeightDimensionMismatch { alpha: usize, beta: usize },
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid source-receiver distance {0} m")]
    InvalidDistance(f64),
    #[error("sample rate {rate} Hz too low; at least {required} Hz needed to cover the 8 kHz band")]
    SampleRateTooLow { rate: u32, required: u32 },
    #[error("recording has no calibration offset")]
    MissingCalibration,
    #[error("recording lasts {available:.3} s; {requested:.3} s requested")]
    RecordingTooShort { available: f64, requested: f64 },
    #[error("no A-weighting entry for band {0} Hz")]
    UnknownBand(f64),
    #[error("unknown usage '{0}'")]
    UnknownUsage(String),
    #[error("custom usage requires explicit targets")]
    MissingTargets,
    #[error("no matching positions between sessions")]
    NoMatchingPositions,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
