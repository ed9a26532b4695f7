//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by any pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A price-file row could not be parsed.
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    /// Prices must be strictly positive and finite.
    #[error("non-positive or non-finite price {value} for '{instrument}' at line {line}")]
    NonPositivePrice {
        line: u64,
        instrument: String,
        value: f64,
    },

    /// The same date appeared twice in a price file.
    #[error("duplicate date {date} at line {line}")]
    DuplicateDate { line: u64, date: String },

    /// Dates must be strictly increasing.
    #[error("dates out of order at line {line}: {date} does not follow {previous}")]
    NonIncreasingDate {
        line: u64,
        date: String,
        previous: String,
    },

    /// The same instrument id appeared twice in the header.
    #[error("duplicate instrument id '{id}' in header")]
    DuplicateInstrument { id: String },

    /// A usable panel needs at least two dates after missing-data handling.
    #[error("fewer than 2 dates remain after cleaning ({remaining})")]
    TooFewDates { remaining: usize },

    /// Return interval must be shorter than the observation count.
    #[error("return interval {interval} must be < number of dates {dates}")]
    IntervalTooLong { interval: usize, dates: usize },

    /// Window width exceeds the number of observations.
    #[error("window width {width} exceeds the {observations} available observations")]
    WindowTooWide { width: usize, observations: usize },

    /// An instrument with constant returns inside a window has no
    /// well-defined correlation.
    #[error("zero return variance for '{instrument}' in window {window}")]
    ZeroVariance { instrument: String, window: usize },

    /// Two matrices or sequences that must agree in size do not.
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    /// Operation requires more vertices than the graph has.
    #[error("{op} requires at least {min} vertices, got {n}")]
    TooFewVertices {
        op: &'static str,
        min: usize,
        n: usize,
    },

    /// A probability vector failed validation.
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    /// Dissimilarity weights must be nonnegative and sum to one.
    #[error("invalid dissimilarity weights ({alpha}, {beta}, {gamma}): {reason}")]
    InvalidWeights {
        alpha: f64,
        beta: f64,
        gamma: f64,
        reason: String,
    },

    /// Consistence needs difference sequences of length >= 3.
    #[error("difference sequences too short ({len}); need at least 3 entries")]
    SequenceTooShort { len: usize },

    /// The sweep needs at least 4 windows so that difference sequences
    /// have >= 3 entries.
    #[error("too few windows ({windows}); need at least {min}")]
    TooFewWindows { windows: usize, min: usize },

    /// Every grid point produced an undefined consistence value.
    #[error("all consistence values undefined over the grid: {reason}")]
    AllUndefined { reason: String },

    /// Shortest-path statistics need at least one connected pair.
    #[error("graph has no connected vertex pairs")]
    NoConnectedPairs,

    /// A configuration value is out of its documented range.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// A binary matrix dump did not match the documented layout.
    #[error("corrupt matrix dump: {reason}")]
    CorruptDump { reason: String },
}
