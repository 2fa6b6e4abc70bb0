use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at least two arms are required, got {0}")]
    TooFewArms(usize),
    #[error("variance of arm {arm} must be positive and finite, got {value}")]
    NonPositiveVariance { arm: usize, value: f64 },
    #[error("mean of arm {0} is not finite")]
    NonFiniteMean(usize),
    #[error("arms {first} and {second} tie for the largest mean norm")]
    TiedOptimum { first: usize, second: usize },
    #[error("invalid power profile: {0}")]
    InvalidProfile(String),
    #[error("power must be nonnegative and finite, got {0}")]
    NegativePower(f64),
    #[error("positive power without an observation")]
    MissingObservation,
    #[error("observation supplied for a zero-power arm")]
    UnexpectedObservation,
    #[error("no positive power in the data")]
    AllZeroPower,
    #[error("invalid posterior parameters: {0}")]
    InvalidParams(String),
    #[error("at least one Monte-Carlo sample is required")]
    ZeroSamples,
    #[error("arm {0} lacks data for a posterior")]
    InsufficientData(usize),
    #[error("operation not available for policy kind {0}")]
    WrongKind(&'static str),
    #[error("profile or outcome length {got} does not match arm count {expected}")]
    ProfileMismatch { expected: usize, got: usize },
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("degrees of freedom must be even and at least 2, got {0}")]
    OddDof(u32),
    #[error("argument must be nonnegative, got {0}")]
    NegativeX(f64),
    #[error("noise response vanishes at bin {0}")]
    ZeroNoiseBin(usize),
    #[error("bins {first} and {second} tie for the peak gain")]
    TiedPeak { first: usize, second: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("no arm has received power")]
    NoData,
}
