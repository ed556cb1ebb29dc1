use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate resonance in {context}: |denominator| = {value:.4e} rad/s is below {tolerance:.4e} rad/s")]
    DegenerateResonance {
        context: String,
        value: f64,
        tolerance: f64,
    },

    #[error("insufficient duration: {0}")]
    InsufficientDuration(String),

    #[error("frequency extraction failed: {0}")]
    ExtractionFailed(String),

    #[error("level labeling is ambiguous: {0}")]
    LabelingAmbiguity(String),

    #[error("iteration failed to converge: {0}")]
    IterationFailed(String),

    #[error("fit failed after {iterations} iterations: {reason}")]
    FitFailed { reason: String, iterations: usize },

    #[error("fit is underconstrained; null directions: {}", format_null(.null_directions))]
    Underconstrained {
        null_directions: Vec<Vec<(String, f64)>>,
    },

    #[error("inconsistent measurement: {0}")]
    InconsistentMeasurement(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::InvalidState(_) | Error::Config { .. }
        )
    }
}

fn format_null(dirs: &[Vec<(String, f64)>]) -> String {
    dirs.iter()
        .map(|d| {
            let parts: Vec<String> = d
                .iter()
                .filter(|(_, c)| c.abs() > 1e-3)
                .map(|(n, c)| format!("{c:+.3}*{n}"))
                .collect();
            format!("[{}]", parts.join(" "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}
