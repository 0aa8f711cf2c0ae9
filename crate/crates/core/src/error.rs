use thiserror::Error;

/// Errors raised by the estimators, samplers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset has no class-1 (minority) samples")]
    EmptyMinorityClass,
    #[error("dataset has no class-0 (majority) samples")]
    EmptyMajorityClass,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("subsample size {s} is not in 1..={n}")]
    SizeExceedsPopulation { s: usize, n: usize },
    #[error("subsample size {s} for class {class} is not in 1..={available}")]
    SizeExceedsClass { class: u8, s: usize, available: usize },
    #[error("nearest-neighbour query over an empty point set")]
    EmptyPointSet,
    #[error("1-NN prediction over an empty subset")]
    EmptySubset,
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("could not calibrate the model prior to {target}")]
    CalibrationFailed { target: f64 },
    #[error("odds are undefined at z = 1")]
    OddsAtOne,
    #[error("odds ratio is undefined for mu = {0}")]
    DegenerateMu(f64),
    #[error("value {0} is outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("probability {0} is outside (0, 1)")]
    InvalidPrior(f64),
    #[error("enumeration of {0} subsets exceeds the oracle limit")]
    EnumerationTooLarge(u128),
    #[error("theoretical variance is zero at the probe point (mu = {0})")]
    ZeroTheoryVariance(f64),
    #[error("non-finite covariate in sample {0}")]
    NonFiniteCovariate(usize),
    #[error("invalid label {0:?}, expected 0 or 1")]
    InvalidLabel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset redraw limit reached ({0} attempts) without both classes present")]
    RedrawLimit(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
