use std::fmt;

/// Errors produced by the simulation and analysis pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter or argument violates its documented domain.
    #[error("{0}")]
    Domain(String),

    /// Integration produced a non-finite value.
    #[error("integration overflow: non-finite state after t = {last_valid_time} (failed step ending at t = {failed_time})")]
    Overflow {
        last_valid_time: f64,
        failed_time: f64,
    },

    /// Adaptive step size collapsed below what the time resolution can represent.
    #[error("step size underflow at t = {time}: h = {step}")]
    StepUnderflow { time: f64, step: f64 },

    /// A text row could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Timestamps are not strictly increasing.
    #[error("line {line}: time {time} is not greater than previous time {previous}")]
    NonMonotoneTime { line: u64, time: f64, previous: f64 },

    /// Fewer samples than an operation requires.
    #[error("insufficient data: {found} sample(s), at least {required} required")]
    InsufficientData { found: usize, required: usize },

    /// A text input ended before two data rows were read.
    #[error("line {line}: insufficient data: {found} data row(s), at least 2 required")]
    InsufficientRows { line: u64, found: usize },

    /// A SPICE export lacks its header line.
    #[error("line 1: missing header (expected a time column label, found {found:?})")]
    MissingHeader { found: String },

    /// The traces' time domains do not overlap.
    #[error("no overlapping time domain among traces: {}", DomainList(.domains))]
    NoOverlap { domains: Vec<(String, f64, f64)> },

    /// A resampling grid reaches outside a trace's time domain.
    #[error("grid [{grid_start}, {grid_end}] extends outside trace {source_id:?} domain [{trace_start}, {trace_end}]")]
    Extrapolation {
        source_id: String,
        grid_start: f64,
        grid_end: f64,
        trace_start: f64,
        trace_end: f64,
    },

    /// Two series that must share a shape or grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NRMSE normalisation term is zero.
    #[error("degenerate data: zero deviation about the mean over samples 1..={prefix_end}")]
    DegenerateDenominator { prefix_end: usize },

    /// Two trajectories coincide where a log-separation is needed.
    #[error("degenerate separation: trajectories coincide at index {index}")]
    DegenerateSeparation { index: usize },

    /// Selection over an empty candidate set.
    #[error("no candidates to select from")]
    Empty,
}

struct DomainList<'a>(&'a [(String, f64, f64)]);

impl fmt::Display for DomainList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (id, start, end)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{id:?} [{start}, {end}]")?;
        }
        Ok(())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
