//! Inference engines for the decision models: feed-forward networks, fuzzy
//! decision support systems and acquisition-angle policies. Training lives in
//! `neuroevo` and `fuzzyga`.

mod alpha;
mod ann;
mod fuzzy;

pub use alpha::{alpha_decide, AlphaPolicy};
pub use ann::{
    ann_forward, sigmoid, Activation, CompiledNet, ConnectionGene, NetGenome, NodeGene, NodeRole, NET_FORMAT,
};
pub use fuzzy::{
    covers_unit_interval, fuzzy_infer, repair_coverage, FuzzyRule, FuzzySystem, Triangle, FUZZY_FORMAT, TERMS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("input {0} outside [0,1]")]
    InputRange(f64),
    #[error("enabled connections form a cycle")]
    Cyclic,
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("unsupported document: {0}")]
    Format(String),
    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),
}
