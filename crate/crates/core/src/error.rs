use thiserror::Error;

/// Errors raised by model evaluation, filtering, certification and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inertia matrix is not positive definite at q = {q:?}")]
    SingularMass { q: Vec<f64> },

    #[error(
        "degenerate safety filter: z = {z:e} < 0 but |L_g h| = {lg_norm:e} at x = {state:?}"
    )]
    DegenerateFilter { state: Vec<f64>, z: f64, lg_norm: f64 },

    #[error("grid contains no points to evaluate")]
    EmptyGrid,

    #[error("psi(q) = {psi:e} is not positive at q = {q:?}; rho cannot be tuned")]
    PsiNotPositive { q: Vec<f64>, psi: f64 },

    #[error("no probe in [{lo}, {hi}] passes certification")]
    NonePassing { lo: f64, hi: f64 },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("no initial condition lies inside the certified region")]
    EmptySweep,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            got,
            expected,
        })
    }
}
