use thiserror::Error;

/// Errors produced by the resonator models.
///
/// The split between [`Error::InvalidInput`] and the numerical variants is
/// what the CLI uses to choose between "config error" and "numerical
/// failure" exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resonators {first} and {second} overlap (center distance {distance:.6e} <= radius sum {radius_sum:.6e})")]
    Overlap {
        first: usize,
        second: usize,
        distance: f64,
        radius_sum: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate triangle {index} (area {area:.3e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("single layer system is singular or ill-conditioned (pivot ratio estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("non-positive eigenvalue {value:.6e} at index {index}; capacitance matrix is nonphysical")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("near-degenerate spectrum: eigenvalue gap {gap:.3e} below tolerance {tolerance:.3e}")]
    NearDegenerate { gap: f64, tolerance: f64 },

    #[error("inadmissible scaling constant: eps*(N-1)*Cap/(4*pi)*sup|z_i-z_j|^-1 = {value:.6} must be < 1")]
    Inadmissible { value: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Overlap { .. }
                | Error::DimensionMismatch { .. }
                | Error::Inadmissible { .. }
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
