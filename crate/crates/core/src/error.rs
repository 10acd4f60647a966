use thiserror::Error;

/// Errors raised by the samplers, the exact-arithmetic layer and the
/// mechanisms.
#[derive(Debug, Error)]
pub enum Error {
    /// The entropy backend could not produce bits. Unrecoverable.
    #[error("entropy source failure: {0}")]
    Entropy(String),

    /// A mechanism or sampler parameter is outside its domain.
    #[error("parameter domain error: {0}")]
    Domain(String),

    /// A rejection loop hit its attempt cap. Never expected at valid parameters.
    #[error("rejection sampler exceeded {attempts} attempts")]
    AttemptCapExceeded { attempts: u64 },

    /// A caller-supplied probability oracle broke its contract
    /// (non-nested refinements or decreasing cumulative sums).
    #[error("probability oracle contract violated: {0}")]
    Contract(String),

    /// Integer arithmetic on released values left the i64 range.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
