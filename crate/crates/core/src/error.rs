//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two objects that must share index ranges do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A post-selected statistic has no clicking rounds for some input cell.
    ///
    /// `b` is `None` when the failure is on the preparation side alone,
    /// where only the input `a` is involved.
    #[error("zero click probability for input a={a}{}", .b.map(|b| format!(", b={b}")).unwrap_or_default())]
    ZeroClickProbability { a: usize, b: Option<usize> },

    /// A deterministic-strategy enumeration would exceed the configured cap.
    #[error("enumeration of {pairs} strategy pairs exceeds the cap of {cap}")]
    EnumerationTooLarge { pairs: u128, cap: u128 },

    /// The simplex solver exceeded its iteration cap.
    #[error("linear program stalled after {0} iterations")]
    SolverStall(u64),

    /// An efficiency-assignment search would exceed the configured cap.
    #[error("search over {assignments} efficiency assignments exceeds the cap of {cap}")]
    SearchSpaceTooLarge { assignments: u128, cap: u128 },

    /// An event-log cell has no clicks, so nothing can be estimated for it.
    #[error("no clicks recorded for input cell a={a}, b={b}")]
    EmptyCell { a: usize, b: usize },

    /// An index argument is outside its alphabet.
    #[error("index out of range: {name}={index}, alphabet size {len}")]
    IndexOutOfRange {
        name: &'static str,
        index: usize,
        len: usize,
    },

    /// A real-valued argument is outside its stated interval.
    #[error("value out of range: {name}={value}, expected in [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A constructor invariant does not hold (negative probability,
    /// non-stochastic row, priors not summing to one, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A structured input file has the wrong shape (row arity, missing block).
    #[error("schema error: {0}")]
    Schema(String),

    /// A line of an event-log file could not be parsed.
    #[error("event log parse error at line {line}: {message}")]
    LogParse { line: usize, message: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
