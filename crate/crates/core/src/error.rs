use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be a positive integer, got {0}")]
    InvalidDimension(u32),

    #[error("exponent vector {entries:?} has trailing zeros; use {hint:?}")]
    NonCanonical { entries: Vec<u32>, hint: Vec<u32> },

    #[error("requested total order {requested} exceeds the enumeration limit of {limit}")]
    OrderLimit { requested: u32, limit: u32 },

    #[error("integer overflow while building term with exponents {0:?}")]
    Overflow(Vec<u32>),

    #[error("decay class {0} has no asymptotic log-slope")]
    UnsupportedDecay(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("derivative order {0} is outside the supported range 0..=6")]
    DerivativeOrder(usize),

    #[error("radius {r} is outside the profile domain")]
    Domain { r: f64 },

    #[error("density vanishes at r = {r}; normalized quantities have a pole there")]
    Pole { r: f64 },

    #[error("derivative g_{order} vanishes at r = {r}")]
    Node { order: usize, r: f64 },

    #[error("ln rho = {log_rho} at r = {r} is below the floor {floor}")]
    Underflow { r: f64, log_rho: f64, floor: f64 },

    #[error("probe window unusable: {0}")]
    Window(String),

    #[error("term dimension {term} does not match profile dimension {profile}")]
    DimensionMismatch { term: u32, profile: u32 },

    #[error("{0}")]
    KindMismatch(String),

    #[error("non-finite integrand at r = {r}")]
    NonFinite { r: f64 },

    #[error("design matrix is rank deficient: rank {rank}, null-space dimension {null_dim}")]
    RankDeficient { rank: usize, null_dim: usize },

    #[error("basis term {0} is not localized-admissible")]
    InadmissibleBasis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
