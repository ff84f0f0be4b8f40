use thiserror::Error;

use crate::metric::PointId;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
    #[error("average cost over an empty or zero-weight set")]
    EmptySet,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("input is not a metric: {0}")]
    NotMetric(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("enumeration of {0} candidate sets exceeds the guard of {1}")]
    TooLarge(u128, u128),
    #[error("empty candidate set")]
    NoCandidates,
    #[error("LP solver returned status {0}")]
    Lp(String),
    #[error("LP residual {0:e} exceeds tolerance")]
    Residual(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum SketchError {
    #[error("GOPT must be positive when the input has distinct points")]
    NonPositiveGopt,
    #[error("initial set already finalized")]
    AlreadyFinalized,
}

#[derive(Debug, Error, PartialEq)]
pub enum RobustError {
    #[error("center {0} passed to MakeRobust twice within one robustify call")]
    RepeatedMakeRobust(PointId),
    #[error("robustify called with an empty center set")]
    EmptySolution,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
