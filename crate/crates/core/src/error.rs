use thiserror::Error;

pub type Result<T> = std::result::Result<T, KkError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KkError {
    #[error("invalid input: {what} = {value} is not finite")]
    NonFinite { what: &'static str, value: f64 },

    #[error("domain error: {constraint} (got {value})")]
    Domain { constraint: &'static str, value: f64 },

    #[error("unsupported sech power {0}: only 2, 4, 6 and 8 are tabulated")]
    UnsupportedOrder(u32),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state diverged at t = {t} (last valid time {last_valid_t})")]
    Diverged { t: f64, last_valid_t: f64 },

    #[error("solution blew up near t = {t_estimate}")]
    Blowup { t_estimate: f64 },

    #[error("closed form hits a finite-time singularity: denominator {denominator} <= 0 at t = {t}")]
    FiniteTimeSingularity { t: f64, denominator: f64 },

    #[error("singular scaling: {0} must be nonzero")]
    SingularScaling(&'static str),

    #[error("z = {z} is within pole tolerance of the rational solution")]
    Pole { z: f64 },

    #[error("all {n_paths} ensemble paths blew up")]
    DegenerateEnsemble { n_paths: usize },

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
}

pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(KkError::NonFinite { what, value })
    }
}
