//! Concrete semantics of infinite chess on the integer lattice.
//!
//! Everything here works on arbitrary-precision coordinates and serves as the
//! reference semantics the automata layer and the search engine are checked against.

mod rules;
mod types;

pub use rules::*;
pub use types::*;
