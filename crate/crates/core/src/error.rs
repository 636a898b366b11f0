use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(u64, u64),
    #[error("negative weight {weight} on edge {{{u}, {v}}}")]
    NegativeWeight { u: u64, v: u64, weight: f64 },
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("graph is empty")]
    EmptyGraph,
    #[error("walker stuck at node {0}: no positive-weight edge to follow")]
    Stuck(u32),
    #[error("positive-weight subgraph is disconnected")]
    Disconnected,
    #[error("power iteration did not converge (periodic or disconnected chain)")]
    NonConvergence,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing self-loop at node {0}")]
    MissingSelfLoop(u64),
    #[error("graph generation failed: {0}")]
    Generation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
