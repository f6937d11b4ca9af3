//! Error type shared by all modules of the crate.

use chrono::{NaiveDate, NaiveDateTime};

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A seasonal sequence has zero dispersion (all values equal), so the
    /// pattern transform is undefined.
    #[error("sequence dispersion is zero (all values equal)")]
    ZeroDispersion,
    /// NaN or infinity encountered where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// No training pair qualifies for the requested query date.
    #[error("no training pairs qualify for forecast date {0}")]
    EmptyTrainingSet(NaiveDate),
    /// Series length does not split into whole cycles.
    #[error("series length {len} is not a multiple of cycle length {cycle_len}")]
    MisalignedCycles { len: usize, cycle_len: usize },
    /// The anchor pool for hidden-bias placement is empty.
    #[error("anchor pattern pool is empty")]
    EmptyPool,
    /// Slope-angle bound outside the open interval (0, 90) degrees.
    #[error("alpha_max must lie in (0, 90) degrees, got {0}")]
    InvalidAngle(f64),
    /// An input vector does not match the model's active feature count.
    #[error("input has {got} features, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A hyperparameter grid has no cells.
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    /// Not enough data for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A parameter is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// A per-member subsample came out empty.
    #[error("ensemble member subsample is empty")]
    EmptySubsample,
    /// A data file row could not be parsed.
    #[error("parse error at row {row}: {message}")]
    ParseError { row: usize, message: String },
    /// Missing timestamps in an hourly series.
    #[error(
        "gap in hourly series: {} missing timestamp(s), first {}",
        missing.len(),
        missing.first().map(|t| t.to_string()).unwrap_or_default()
    )]
    Gap { missing: Vec<NaiveDateTime> },
    /// The same timestamp appears more than once.
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(NaiveDateTime),
    /// The cycle required by the naive forecast is not in the series.
    #[error("no cycle 7 days before {0} in the series")]
    MissingHistory(NaiveDate),
    /// Percentage errors are undefined on non-positive actuals.
    #[error("actual value at day {day}, position {position} is not strictly positive")]
    ZeroActual { day: usize, position: usize },
    /// Two aligned collections disagree in shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A serialized model or ensemble could not be decoded.
    #[error("serialization: {0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
