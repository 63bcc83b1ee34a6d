use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coordinate for particle {particle} at t = {time}")]
    BlowUp { particle: usize, time: f64 },

    #[error("spectral instability at xi = {xi}: |F| = {modulus} (t = {time})")]
    SpectralInstability { xi: f64, modulus: f64, time: f64 },

    #[error("spectral invariant violated: {0}")]
    SpectralInvariant(String),

    #[error("xi = {xi} falls outside the grid [{lo}, {hi}]")]
    GridTruncation { xi: f64, lo: f64, hi: f64 },

    #[error("assignment size {n} exceeds the exact solver budget of {budget}; use the sliced estimator")]
    AssignmentBudget { n: usize, budget: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
