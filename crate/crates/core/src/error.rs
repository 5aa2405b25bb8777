use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{oracle} oracle does not support environment {env}")]
    UnsupportedOracle { oracle: &'static str, env: String },

    #[error(
        "Fock truncation at d = {dim} leaves tail mass {tail_mass:.3e} above {threshold:.1e}; \
         try d = {suggested_dim}"
    )]
    Truncation {
        dim: usize,
        tail_mass: f64,
        threshold: f64,
        suggested_dim: usize,
    },

    #[error("truncation d = {dim} exceeds the memory guard of {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_nonneg(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "finite and >= 0",
        })
    }
}
