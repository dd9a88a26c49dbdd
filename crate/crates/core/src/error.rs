use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration blew up at t={time}: {detail}")]
    Blowup { time: f64, detail: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sweep did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NotConverged {
        iterations: usize,
        last_residual: f64,
        /// Sup-norm control residual recorded at every iteration.
        history: Vec<f64>,
    },

    #[error("calibration consistency check failed for {row}: {detail}")]
    Calibration { row: String, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} is not finite ({value})")))
    }
}
