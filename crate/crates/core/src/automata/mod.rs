//! Synchronous multi-tape automata over signed-binary integer encodings.
//!
//! Transitions are decision diagrams over the bits of a column, so relations over
//! dozens of tapes stay compact. See [`Repr`] for the two tape disciplines.

mod bdd;
mod dfa;
mod linear;
mod qf;
mod relations;
mod word;

pub use dfa::{BoolOp, Limits, Repr, SyncAutomaton};
pub use linear::{linear_automaton, Linear, Rel};
pub use qf::{compile_qf, LazyProduct, Qf, QfRestrictor};
pub use relations::{
    add_auto, canonicalize, const_auto, eq_auto, format_domain, lt_auto, offset_auto,
};
pub(crate) use relations::point_loose;
pub use word::{
    convolve, convolve_typed, decode_int, encode_int, PaddedTuple, SignedWord, Symbol, TapeKind,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomataError {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("automata have different tape kinds or representations")]
    Incompatible,
    #[error("tape {tape} out of range for arity {arity}")]
    TapeOutOfRange { tape: usize, arity: usize },
    #[error("state budget of {limit} exceeded")]
    StateBudget { limit: usize },
    #[error("decision-diagram node budget of {limit} exceeded")]
    NodeBudget { limit: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("non-canonical word {0}")]
    NonCanonical(String),
}

impl AutomataError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            AutomataError::StateBudget { .. } | AutomataError::NodeBudget { .. }
        )
    }
}

#[cfg(test)]
mod tests;
