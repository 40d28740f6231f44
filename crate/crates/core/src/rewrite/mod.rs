//! Graph rewriting over diagrams: a rule catalog, subdiagram matching,
//! normal forms for single-algebra diagrams and semantic checks against
//! the tensor interpretation.

mod enumerate;
mod harness;
mod matching;
mod normal;
mod rules;

pub use enumerate::{ enumerate_connected, oracle_agreement, EnumerationReport };
pub use harness::{ random_host, soundness_harness, HarnessMode, SoundnessReport };
pub use matching::{ apply, find_matches, Embedding };
pub use normal::{
    decide_equal, normal_key, normalize_mixed, normalize_single, AlgebraKind, MixedResult,
    NormalForm, NormalKey, Normalized, Part,
};
pub use rules::{ algebra_rules, builtin_rules, catalog_json, cololli_diagram, lolli_diagram, RewriteRule };

use thiserror::Error;
use crate::{ diagram::DiagramError, tensor::TensorError };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("embedding no longer matches the host")]
    StaleEmbedding,

    #[error("rewrite would create a cycle")]
    Cycle,

    #[error("left-hand side of '{0}' is not a valid pattern: {1}")]
    BadPattern(String, String),

    #[error("rule '{0}' is unsound: residual {1:e}")]
    UnsoundRule(String, f64),

    #[error("diagram is not over a single algebra: {0}")]
    NotSingleAlgebra(String),

    #[error("boundaries differ: {0}")]
    Boundary(String),

    #[error("diagram error: {0}")]
    Diagram(#[from] DiagramError),

    #[error("tensor error: {0}")]
    Tensor(#[from] TensorError),
}
pub type RewriteResult<T> = Result<T, RewriteError>;
