use thiserror::Error;

/// Errors produced by the inference library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval: lower endpoint {lo} exceeds upper endpoint {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("probability {0} is outside the open unit interval")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate search state: {0}")]
    DegenerateState(String),

    #[error("search exhausted: the searched set already covers the support")]
    SearchExhausted,

    #[error("query point {z} lies inside the searched set")]
    QueryInsideSearched { z: f64 },

    #[error("oracle contract violated: region returned at z = {z} does not contain z")]
    OracleContract { z: f64 },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("no bracket found for mu at target level {target}")]
    UnboundedMu { target: f64 },

    #[error("operation requires a Gaussian null distribution")]
    UnsupportedDistribution,

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("degenerate test statistic: {0}")]
    DegenerateStatistic(String),

    #[error("degenerate salient split: {0}")]
    DegenerateSplit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
