use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("eigensolver did not converge ({context}); {report}")]
    EigenNonConvergence { context: String, report: String },

    #[error("unphysical normal frequency {value:e} at index {index} ({context})")]
    NonPositiveFrequency { context: String, index: usize, value: f64 },

    #[error("{what} cutoff saturated at {cutoff}: {detail}")]
    CutoffSaturation { what: &'static str, cutoff: usize, detail: String },

    #[error("basis size {size} exceeds configured maximum {max} ({what})")]
    BasisOverflow { what: &'static str, size: usize, max: usize },

    #[error("quadrature grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("wrong boundary: {0}")]
    WrongBoundary(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-monotone samples: {0}")]
    NonMonotone(String),

    #[error("no overlap between mobility ranges: charge [{charge_lo}, {charge_hi}], flux [{flux_lo}, {flux_hi}]")]
    NoOverlap { charge_lo: f64, charge_hi: f64, flux_lo: f64, flux_hi: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("missing reference level: {0}")]
    MissingReference(String),

    #[error("sweep point {index} (bias {bias}) failed: {source}")]
    SweepPoint { index: usize, bias: f64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
