use thiserror::Error;

/// Errors raised by parameter validation and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unphysical sensitivity: {param} = {value} (requires {requirement})")]
    UnphysicalSensitivity {
        param: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("unphysical differential efficiency: eps' = {eps_prime} <= -1")]
    UnphysicalDifferentialEfficiency { eps_prime: f64 },

    #[error("zero quantum efficiency")]
    ZeroQuantumEfficiency,

    #[error("zero denominator in {what}")]
    ZeroDenominator { what: &'static str },

    #[error("mode index {index} out of range (device has {n_modes} modes)")]
    InvalidModeIndex { index: usize, n_modes: usize },

    #[error("no steady state in search range [{lo:e}, {hi:e}] for pump {pump:e} 1/s")]
    NoSteadyState { pump: f64, lo: f64, hi: f64 },

    #[error("non-finite derivative of {what} at n_c = {n_c:e}")]
    NonFiniteDerivative { what: &'static str, n_c: f64 },

    #[error(
        "integration unstable at step {step}: |dn_c| = {value:e} exceeds {limit:e} \
         (stationary std {stationary_std:e}, dt {dt:e} s, tau'' {tau_dd:e} s)"
    )]
    Instability {
        step: usize,
        value: f64,
        limit: f64,
        stationary_std: f64,
        dt: f64,
        tau_dd: f64,
    },

    #[error("too few spectral segments: have {have}, need {need}; duration must be at least {required_duration:e} s")]
    TooFewSegments {
        have: usize,
        need: usize,
        required_duration: f64,
    },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("{file}:{line}: key `{key}`: {message}")]
    Config {
        file: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("missing required key `{key}` in {file}")]
    MissingKey { file: String, key: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        reason: reason.into(),
    }
}
