use thiserror::Error;

/// Errors raised by model, estimation and bound computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infinite moment: the 2*gamma moment of the stable kernel diverges (gamma = {gamma}, alpha = {alpha})")]
    InfiniteMoment { gamma: f64, alpha: f64 },

    #[error("Hölder exponent gamma = {gamma} is outside (0, alpha/2] for alpha = {alpha}")]
    GammaTooLarge { gamma: f64, alpha: f64 },

    #[error("C(gamma, alpha) is undefined at gamma = alpha/2 (gamma = {gamma}, alpha = {alpha})")]
    UndefinedAtBoundary { gamma: f64, alpha: f64 },

    #[error("Hölder violation: empirical ratio {observed} exceeds declared norm {declared}")]
    HolderViolation { observed: f64, declared: f64 },

    #[error("grids are not nested: {n} does not divide {n_ref}")]
    NotNested { n: usize, n_ref: usize },

    #[error("non-finite path value at step {step} (master_seed = {master_seed}, path = {path_index})")]
    NonFinite { master_seed: u64, path_index: u64, step: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error_estimate}")]
    Quadrature { estimate: f64, error_estimate: f64 },

    #[error("malformed path dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
