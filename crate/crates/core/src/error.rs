use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps these onto its exit-code contract: everything except
/// [`Error::Internal`] is a scope rejection or bad input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("residue characteristic < 5 unsupported (p = {0})")]
    UnsupportedCharacteristic(u64),
    #[error("field with {0} elements is too large for this operation")]
    FieldTooLarge(u128),
    #[error("valuation of the zero function is not representable")]
    ZeroValuation,
    #[error("pole at place {0}")]
    PoleAtPlace(String),
    #[error("singular model: discriminant vanishes identically")]
    SingularCurve,
    #[error("unsupported curve class {0}")]
    UnsupportedCurve(String),
    #[error("point not on curve")]
    PointNotOnCurve,
    #[error("height did not stabilize after {0} doublings")]
    HeightDidNotStabilize(u32),
    #[error("place {0} has bad reduction")]
    BadPlace(String),
    #[error("dependent generators: regulator vanishes")]
    DependentGenerators,
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of an internal cross-check, as opposed to
    /// inputs outside the supported class.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
