use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ER probability {p} exceeds 1 for n={n}, e={e}")]
    ErProbabilityOutOfRange { n: usize, e: usize, p: f64 },

    #[error("WS ring degree 2e/n = {raw} is not a positive even integer for n={n}, e={e}")]
    WsDegreeInvalid { n: usize, e: usize, raw: f64 },

    #[error("BA discriminant negative: n^2 = {} < 4e = {} (n={n}, e={e})", n * n, 4 * e)]
    BaNoRealRoot { n: usize, e: usize },

    #[error("invalid graph parameters: {0}")]
    InvalidGraphParams(String),

    #[error("centrality requires at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("PageRank did not converge within {max_iter} iterations (last residual {residual:e})")]
    PageRankDiverged { max_iter: usize, residual: f64 },

    #[error("softmax of an empty score vector")]
    EmptyScores,

    #[error("cannot sample pairs from an edgeless graph")]
    EdgelessGraph,

    #[error("pair sampling requires at least 2 nodes, got {0}")]
    TooFewAgents(usize),

    #[error("could not draw a distractor distinct from the target after {0} attempts")]
    DistractorExhausted(usize),

    #[error("non-finite gradient encountered in parameter group {0}")]
    NonFiniteGradient(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no records to summarize")]
    EmptyRecords,

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
