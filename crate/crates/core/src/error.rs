use thiserror::Error;

/// Errors surfaced by the engine.
#[derive(Debug, Error)]
pub enum EngineError {
    /// Kraus expansion produced an operator with vanishing trace norm
    /// (e.g. μ = 0 with φ = π, where Υ is the zero operator).
    #[error("state has vanishing trace norm ({0:e}); nothing to normalize")]
    ZeroNormState(f64),

    /// Fock-basis construction failed its convergence guard.
    #[error("Fock cutoff {cutoff} too small: population above level {} is {tail:e} (limit {limit:e})", cutoff - 5)]
    CutoffTooSmall { cutoff: usize, tail: f64, limit: f64 },

    /// Two grids were combined but their specs differ.
    #[error("grid specs do not match: {0}")]
    GridMismatch(String),

    /// A grid was requested with fewer than 2 points on an axis.
    #[error("grid must have at least 2 points per axis (got {nx}x{ny})")]
    GridTooSmall { nx: usize, ny: usize },

    /// Finite-difference quotient failed its step-convergence guard.
    #[error("sensitivity quotient did not converge after {halvings} step halvings (last change {last_change:e})")]
    NumericalInstability { halvings: usize, last_change: f64 },

    /// Least-squares iteration hit its cap without meeting the tolerance.
    #[error("fit did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Trace data has no usable signal amplitude.
    #[error("degenerate trace: signal amplitude {amplitude:e} below threshold {threshold:e}")]
    DegenerateTrace { amplitude: f64, threshold: f64 },

    /// Every φ sample was rejected by the drift cut.
    #[error("no φ samples remain after the {max_drift_deg}° drift cut")]
    EmptyAfterRejection { max_drift_deg: f64 },

    /// Sample set cannot constrain the fit (too few points / no spread).
    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),

    /// Poisson resampling produced an empty histogram.
    #[error("resampled histogram is empty (total counts {0})")]
    EmptyResample(u64),

    /// A negative value appeared where a probability density is required.
    #[error("negative density value {value:e} at cell {index}")]
    NegativeDensity { value: f64, index: usize },

    /// Catch-all for invalid arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
