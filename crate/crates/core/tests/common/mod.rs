#![allow(dead_code)]

use infmate_core::model::{validate_position, KING_OFFSETS};
use infmate_core::{Color, PieceDesignation, PieceSpec, Position, Square};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec(s: &str) -> PieceSpec {
    PieceSpec::from_letters(s).unwrap()
}

/// Random valid position: pieces clustered around a random base so that lines and
/// obstructions occur often; non-king pieces are captured with probability 1/8.
pub fn random_position(rng: &mut ChaCha8Rng, spec: &PieceSpec, base_range: i64, spread: i64) -> Position {
    loop {
        let bx = rng.gen_range(-base_range..=base_range);
        let by = rng.gen_range(-base_range..=base_range);
        let pieces = spec
            .entries()
            .iter()
            .map(|&(k, c)| {
                if k != infmate_core::PieceType::King && rng.gen_ratio(1, 8) {
                    PieceDesignation::captured(k, c)
                } else {
                    let sq = Square::new(
                        bx + rng.gen_range(-spread..=spread),
                        by + rng.gen_range(-spread..=spread),
                    );
                    PieceDesignation::live(k, c, sq)
                }
            })
            .collect();
        let turn = if rng.gen_bool(0.5) { Color::White } else { Color::Black };
        let p = Position::new(pieces, turn);
        if validate_position(&p).is_ok() {
            return p;
        }
    }
}

/// A square near piece `i` that is often on one of its lines.
pub fn interesting_square(rng: &mut ChaCha8Rng, p: &Position, spread: i64) -> Square {
    let live: Vec<&PieceDesignation> = p.pieces.iter().filter(|d| d.alive).collect();
    let from = &live[rng.gen_range(0..live.len())].square;
    let d = rng.gen_range(1..=spread.max(1));
    let (dx, dy) = match rng.gen_range(0..4) {
        0 => KING_OFFSETS[rng.gen_range(0..8)],
        1 => (d * [1, -1][rng.gen_range(0..2)], 0),
        2 => (d * [1, -1][rng.gen_range(0..2)], d * [1, -1][rng.gen_range(0..2)]),
        _ => (rng.gen_range(-spread..=spread), rng.gen_range(-spread..=spread)),
    };
    if rng.gen_bool(0.5) {
        Square::new(&from.x + dx, &from.y + dy)
    } else {
        Square::new(&from.x + dy, &from.y + dx)
    }
}

pub fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

/// All positions of a one-king-each specification `Kk` with both kings inside a window.
pub fn all_kk_positions(lo: i64, hi: i64) -> Vec<Position> {
    let mut out = Vec::new();
    for turn in [Color::White, Color::Black] {
        for wx in lo..=hi {
            for wy in lo..=hi {
                for bx in lo..=hi {
                    for by in lo..=hi {
                        if (wx, wy) == (bx, by) {
                            continue;
                        }
                        out.push(Position::new(
                            vec![
                                PieceDesignation::live(infmate_core::PieceType::King, Color::White, Square::new(wx, wy)),
                                PieceDesignation::live(infmate_core::PieceType::King, Color::Black, Square::new(bx, by)),
                            ],
                            turn,
                        ));
                    }
                }
            }
        }
    }
    out
}
