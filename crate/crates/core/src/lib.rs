//! Mate-in-n for infinite chess.
//!
//! Two independent engines answer the same questions:
//!
//! * [`decision`] compiles first-order formulas over positions into synchronous
//!   multi-tape automata ([`automata`], [`chess_automata`]) and decides them exactly.
//! * [`search`] runs a bounded-region alternating search that reaches practical depths
//!   and returns replay-verified lines.
//!
//! [`model`] holds the reference rules both engines are checked against, and
//! [`notation`] / [`protocol`] are the text and service front ends.

pub mod automata;
pub mod chess_automata;
pub mod decision;
pub mod model;
pub mod notation;
pub mod protocol;
pub mod search;

pub use model::{
    Color, Move, PieceDesignation, PieceSpec, PieceType, Position, Square,
};
