//! Benchmark fixtures shared by the criterion targets.

use infmate_core::notation::parse_position;
use infmate_core::Position;

/// White mates in 13 with queen and rook against the lone black king.
pub const QR_MATE_13: &str = "w: Q(1,2) R(4,3) K(19,4) k(5,4)";
pub const QR_MATE_1: &str = "w: k(0,0) R(1,9) R(-1,9) Q(3,5)";
pub const MIDDLEGAME: &str = "w: K(0,0) Q(3,5) R(-4,2) B(2,-3) N(1,1) k(7,7) r(9,-2) n(6,5)";

pub fn position(text: &str) -> Position {
    parse_position(text).expect("fixture parses")
}
