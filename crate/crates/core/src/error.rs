use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vector has non-finite components")]
    NonFinite,
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("vector norm {norm} is not within tolerance of 1")]
    NotUnitNorm { norm: f64 },
    #[error("cap threshold {0} outside [-1, 1]")]
    CapThresholdOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("Bloch vector norm {norm} exceeds 1")]
    BlochVectorTooLong { norm: f64 },
    #[error("Bloch vector has non-finite components")]
    NonFiniteBlochVector,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("cos(theta) = {0} outside [-1, 1]")]
    CosineOutOfRange(f64),
    #[error("angle {0} rad outside [0, pi]")]
    AngleOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("trial count {0} exceeds the 2^62 cap")]
    TooManyTrials(u64),
    #[error("shard count must be at least 1")]
    NoShards,
    #[error("shard count {shards} exceeds trial count {trials}")]
    MoreShardsThanTrials { shards: u64, trials: u64 },
    #[error("empty run: no trials were tallied")]
    EmptyRun,
    #[error("{model} model does not support {what}: {reason}")]
    UnsupportedModel {
        model: &'static str,
        what: &'static str,
        reason: &'static str,
    },
    #[error("exact product law violated at trial {trial} of shard {shard}")]
    ProductLawViolation { shard: u64, trial: u64 },
    #[error("cannot merge tallies of different kinds or seeds")]
    IncompatibleCounts,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("no trials landed in the X = {0} conditioning cell")]
    InsufficientData(crate::geometry::Sign),
    #[error("setting grid needs at least two directions")]
    GridTooSmall,
}
