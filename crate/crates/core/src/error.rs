use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("ground truth line {line} contradicts an earlier entry: {text}")]
    ConflictingGroundTruth { line: usize, text: String },

    #[error("tier-1 list is empty")]
    EmptyTier1,

    #[error("cannot build {steps} shrinking steps from {collectors} collectors")]
    ShrinkSteps { collectors: usize, steps: usize },

    #[error("component has no valley-free assignment; relax it first")]
    Unsatisfiable,

    #[error("component is satisfiable; relaxation requires an unsatisfiable component")]
    AlreadySatisfiable,

    #[error("brute-force enumeration limited to {limit} nodes, component has {nodes}")]
    SizeGuard { nodes: usize, limit: usize },

    #[error("phase II did not reach a fixpoint within {0} iterations")]
    IterationCap(usize),

    #[error("feature schema mismatch: model expects {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },

    #[error("share vector required for schema {0}")]
    MissingShares(String),

    #[error("non-finite feature value")]
    NonFinite,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("confusion matrix has no evaluated links")]
    EmptyMatrix,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
