use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// An objective returned NaN or an infinity while being optimized.
    #[error("objective is not finite at {arg:?} (value {value})")]
    NonFinite { arg: Vec<f64>, value: f64 },

    #[error("invalid search bounds: {0}")]
    SearchSpec(String),

    #[error("Monte Carlo estimate needs at least {min} trials, got {got}")]
    TooFewTrials { min: u64, got: u64 },

    #[error("configuration mismatch: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
