use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A quadrature resolution ladder was exhausted without two
    /// successive levels agreeing to the requested tolerance.
    #[error("quadrature did not converge: {context} (last delta {delta:.3e})")]
    QuadratureNotConverged { context: String, delta: f64 },

    /// Configuration file or override problem; `key` names the offender.
    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    /// The nonlinear temperature update was handed a negative available
    /// energy. This indicates a scheme failure upstream, so it is
    /// reported instead of being clamped.
    #[error("negative available energy r = {r:.6e} in temperature update")]
    NegativeEnergy { r: f64 },

    /// A time step failed; carries the simulation context.
    #[error("step failed at t = {time:.6e}, cell {cell}: {source}")]
    Step {
        time: f64,
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    /// Invalid solver or scenario setup (mismatched shapes, bad
    /// boundary pairing, out-of-range indices).
    #[error("invalid setup: {0}")]
    Setup(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn at_step(self, time: f64, cell: usize) -> Self {
        Error::Step {
            time,
            cell,
            source: Box::new(self),
        }
    }
}
