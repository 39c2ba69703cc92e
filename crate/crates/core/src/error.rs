use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variant names double as the "module error name" the CLI prints on
/// numeric failures, so keep them stable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmrpError {
    #[error("DivergentMgf: moment generating function diverges at s={s} (abscissa of convergence {bound})")]
    DivergentMgf { s: f64, bound: f64 },

    #[error("NonEquivalentSupports: {num} and {den} do not share a support")]
    NonEquivalentSupports { num: String, den: String },

    #[error("DomainError: {0}")]
    Domain(String),

    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),

    #[error("InvalidTilt: {0}")]
    InvalidTilt(String),

    #[error("InvalidReweight: {0}")]
    InvalidReweight(String),

    #[error("ModelError: {0}")]
    Model(String),

    #[error("ExplosionGuard: {jumps} arrivals before t={time} (limit {limit}, theta={theta:?})")]
    ExplosionGuard {
        jumps: usize,
        limit: usize,
        time: f64,
        theta: Vec<f64>,
    },

    #[error("NoRoot: no sign change on bracket [{lo}, {hi}] (values {f_lo}, {f_hi})")]
    NoRoot {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("NoPositiveRoot: {0}")]
    NoPositiveRoot(String),

    #[error("UnsupportedClaimLaw: {0}")]
    UnsupportedClaimLaw(String),

    #[error("QuadratureError: {0}")]
    Quadrature(String),

    #[error("DegenerateCheck: {0}")]
    DegenerateCheck(String),

    #[error("ExprError: {0}")]
    Expr(String),

    #[error("ConfigError at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("IoError: {0}")]
    Io(String),
}

impl CmrpError {
    /// Short variant name, e.g. `NoRoot`.
    pub fn name(&self) -> &'static str {
        match self {
            CmrpError::DivergentMgf { .. } => "DivergentMgf",
            CmrpError::NonEquivalentSupports { .. } => "NonEquivalentSupports",
            CmrpError::Domain(_) => "DomainError",
            CmrpError::InvalidParameter(_) => "InvalidParameter",
            CmrpError::InvalidTilt(_) => "InvalidTilt",
            CmrpError::InvalidReweight(_) => "InvalidReweight",
            CmrpError::Model(_) => "ModelError",
            CmrpError::ExplosionGuard { .. } => "ExplosionGuard",
            CmrpError::NoRoot { .. } => "NoRoot",
            CmrpError::NoPositiveRoot(_) => "NoPositiveRoot",
            CmrpError::UnsupportedClaimLaw(_) => "UnsupportedClaimLaw",
            CmrpError::Quadrature(_) => "QuadratureError",
            CmrpError::DegenerateCheck(_) => "DegenerateCheck",
            CmrpError::Expr(_) => "ExprError",
            CmrpError::Config { .. } => "ConfigError",
            CmrpError::Io(_) => "IoError",
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CmrpError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CmrpError {
    fn from(e: std::io::Error) -> Self {
        CmrpError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CmrpError>;
