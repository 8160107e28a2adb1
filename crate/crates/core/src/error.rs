use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("unknown model preset `{0}`")]
    UnknownPreset(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("interaction frame generator does not commute with itself at t = {t1} and t = {t2}")]
    FrameNotCommuting { t1: f64, t2: f64 },

    #[error("quadrature did not converge after {refinements} refinements (achieved {achieved:e})")]
    Quadrature { achieved: f64, refinements: usize },

    #[error("model is not Hermitian: |H-| = {anti_hermitian_norm:e} at t = {t}")]
    NotHermitian { t: f64, anti_hermitian_norm: f64 },

    #[error("imaginary residue {residue:e} of the assembled survival probability exceeds {limit:e}")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("propagation diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("invalid interval: t2 = {t2} precedes t1 = {t1}")]
    Interval { t1: f64, t2: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of a numerical engine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::ImaginaryResidue { .. }
                | Error::Stiffness { .. }
                | Error::Divergence { .. }
                | Error::NonFinite(_)
        )
    }

    /// Short kebab-case tag, used in the flag column of result files.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::NotSquare { .. } => "not-square",
            Error::NonFinite(_) => "non-finite",
            Error::NotNormalized { .. } => "not-normalized",
            Error::UnknownPreset(_) => "unknown-preset",
            Error::Domain(_) => "domain",
            Error::FrameNotCommuting { .. } => "frame-not-commuting",
            Error::Quadrature { .. } => "quadrature",
            Error::NotHermitian { .. } => "not-hermitian",
            Error::ImaginaryResidue { .. } => "imaginary-residue",
            Error::Stiffness { .. } => "stiffness",
            Error::Divergence { .. } => "divergence",
            Error::Interval { .. } => "interval",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
