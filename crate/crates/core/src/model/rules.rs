use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::types::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("piece index {index} out of range for a position of {len} pieces")]
    PieceIndex { index: usize, len: usize },
    #[error("illegal move {0}")]
    IllegalMove(Move),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyPosition,
    DuplicateKing(Color),
    SharedSquare { first: usize, second: usize },
    CapturedOffDefault(usize),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyPosition => write!(f, "position has no pieces"),
            Violation::DuplicateKing(c) => write!(f, "duplicate king: more than one {c} king"),
            Violation::SharedSquare { first, second } => {
                write!(f, "shared square: pieces {first} and {second} stand on the same square")
            }
            Violation::CapturedOffDefault(i) => {
                write!(f, "captured piece {i} does not carry the default square (0,0)")
            }
        }
    }
}

/// Checks every position invariant and lists the ones that fail.
pub fn validate_position(p: &Position) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if p.pieces.is_empty() {
        out.push(Violation::EmptyPosition);
    }
    for color in [Color::White, Color::Black] {
        let kings = p
            .pieces
            .iter()
            .filter(|d| d.kind == PieceType::King && d.color == color)
            .count();
        if kings > 1 {
            out.push(Violation::DuplicateKing(color));
        }
    }
    for (i, a) in p.pieces.iter().enumerate() {
        if !a.alive {
            if a.square != Square::captured_default() {
                out.push(Violation::CapturedOffDefault(i));
            }
            continue;
        }
        for (j, b) in p.pieces.iter().enumerate().skip(i + 1) {
            if b.alive && a.square == b.square {
                out.push(Violation::SharedSquare {
                    first: i,
                    second: j,
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn signum(v: &BigInt) -> i64 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// True when some live piece other than `skip` lies strictly between `from` and `to`,
/// which must be on a common rank, file or diagonal.
fn obstructed(p: &Position, skip: usize, from: &Square, to: &Square) -> bool {
    let dx = &to.x - &from.x;
    let dy = &to.y - &from.y;
    let (sx, sy) = (signum(&dx), signum(&dy));
    let steps = if sx != 0 { dx.abs() } else { dy.abs() };
    p.pieces.iter().enumerate().any(|(j, b)| {
        if j == skip || !b.alive {
            return false;
        }
        let bx = &b.square.x - &from.x;
        let by = &b.square.y - &from.y;
        let t = if sx != 0 { &bx * sx } else { &by * sy };
        t.is_positive() && t < steps && bx == &t * sx && by == &t * sy
    })
}

fn slider_reaches(kind: PieceType, from: &Square, to: &Square) -> bool {
    let dx = &to.x - &from.x;
    let dy = &to.y - &from.y;
    if dx.is_zero() && dy.is_zero() {
        return false;
    }
    let ortho = dx.is_zero() || dy.is_zero();
    let diag = dx.abs() == dy.abs();
    match kind {
        PieceType::Rook => ortho,
        PieceType::Bishop => diag,
        PieceType::Queen => ortho || diag,
        _ => false,
    }
}

fn attacks_unchecked(p: &Position, i: usize, s: &Square) -> bool {
    let piece = &p.pieces[i];
    if !piece.alive {
        return false;
    }
    let from = &piece.square;
    let dx = &s.x - &from.x;
    let dy = &s.y - &from.y;
    match piece.kind {
        PieceType::King => {
            let (ax, ay) = (dx.abs(), dy.abs());
            !(ax.is_zero() && ay.is_zero()) && ax <= BigInt::one() && ay <= BigInt::one()
        }
        PieceType::Knight => KNIGHT_OFFSETS
            .iter()
            .any(|&(ox, oy)| dx == BigInt::from(ox) && dy == BigInt::from(oy)),
        PieceType::Pawn => {
            dy == BigInt::from(piece.color.pawn_direction()) && dx.abs() == BigInt::one()
        }
        kind => slider_reaches(kind, from, s) && !obstructed(p, i, from, s),
    }
}

/// Whether piece `i` attacks `s`: occupancy of `s` and pins are ignored, obstruction is not.
pub fn attacks(p: &Position, i: usize, s: &Square) -> Result<bool, ModelError> {
    check_index(p, i)?;
    Ok(attacks_unchecked(p, i, s))
}

fn check_index(p: &Position, i: usize) -> Result<(), ModelError> {
    if i >= p.pieces.len() {
        Err(ModelError::PieceIndex {
            index: i,
            len: p.pieces.len(),
        })
    } else {
        Ok(())
    }
}

pub fn in_check(p: &Position, c: Color) -> bool {
    let Some((_, king)) = p.king(c) else {
        return false;
    };
    p.pieces
        .iter()
        .enumerate()
        .any(|(j, q)| q.alive && q.color != c && attacks_unchecked(p, j, &king.square))
}

/// Relocates the piece and records any capture; does not check legality.
pub(crate) fn apply_unchecked(p: &Position, m: &Move) -> Position {
    let mut pieces = p.pieces.clone();
    if let Some(victim) = p.occupant(&m.target) {
        if victim != m.piece {
            pieces[victim].alive = false;
            pieces[victim].square = Square::captured_default();
        }
    }
    pieces[m.piece].square = m.target.clone();
    Position {
        pieces,
        turn: p.turn.opponent(),
    }
}

/// Geometric and occupancy legality, before the self-check test.
fn pseudo_legal(p: &Position, m: &Move) -> bool {
    let piece = &p.pieces[m.piece];
    if !piece.alive || piece.color != p.turn || piece.square == m.target {
        return false;
    }
    let occupant = p.occupant(&m.target).map(|j| &p.pieces[j]);
    if let Some(o) = occupant {
        // no friendly captures, and the king is never captured
        if o.color == piece.color || o.kind == PieceType::King {
            return false;
        }
    }
    if piece.kind == PieceType::Pawn {
        let dir = piece.color.pawn_direction();
        let dx = &m.target.x - &piece.square.x;
        let dy = &m.target.y - &piece.square.y;
        if dy != BigInt::from(dir) {
            return false;
        }
        if dx.is_zero() {
            occupant.is_none()
        } else {
            dx.abs() == BigInt::one() && occupant.is_some()
        }
    } else {
        attacks_unchecked(p, m.piece, &m.target)
    }
}

pub fn is_legal_move(p: &Position, m: &Move) -> Result<bool, ModelError> {
    check_index(p, m.piece)?;
    Ok(legal_unchecked(p, m))
}

fn legal_unchecked(p: &Position, m: &Move) -> bool {
    if !pseudo_legal(p, m) {
        return false;
    }
    let q = apply_unchecked(p, m);
    !in_check(&q, p.turn)
}

pub fn apply_move(p: &Position, m: &Move) -> Result<Position, ModelError> {
    if !is_legal_move(p, m)? {
        return Err(ModelError::IllegalMove(m.clone()));
    }
    Ok(apply_unchecked(p, m))
}

/// Ray steps at which a slider leaving `from` along `dir` crosses the rank, file or
/// diagonals through `target`.
fn crossing_steps(from: &Square, dir: (i64, i64), target: &Square, out: &mut Vec<BigInt>) {
    let (dx, dy) = dir;
    // each line is given as a linear form (a, b) with value a*x + b*y fixed at target
    for (a, b) in [(0i64, 1i64), (1, 0), (1, -1), (1, 1)] {
        let rate = a * dx + b * dy;
        let want = &target.x * a + &target.y * b - (&from.x * a + &from.y * b);
        if rate != 0 {
            let (q, r) = want.div_rem(&BigInt::from(rate));
            if r.is_zero() {
                out.push(q);
            }
        } else if want.is_zero() {
            // the ray runs along this line; use the projection of the target
            let proj = if dx != 0 {
                (&target.x - &from.x) * dx
            } else {
                (&target.y - &from.y) * dy
            };
            out.push(proj);
        }
    }
}

/// Finite candidate move set that contains a legal move whenever one exists.
///
/// Fixed-offset pieces contribute their offsets. For a slider ray, legality of a move to
/// an empty square only changes where the ray crosses a line through some live piece, so
/// it suffices to test the steps next to those crossings, the first steps, the blocker,
/// and two steps past the last interesting point on an open ray.
pub fn candidate_moves(p: &Position) -> Vec<Move> {
    let mut moves = Vec::new();
    for (i, piece) in p.live_pieces() {
        if piece.color != p.turn {
            continue;
        }
        let sq = &piece.square;
        match piece.kind {
            PieceType::King => {
                for &(dx, dy) in &KING_OFFSETS {
                    moves.push(Move::new(i, sq.offset(dx, dy)));
                }
            }
            PieceType::Knight => {
                for &(dx, dy) in &KNIGHT_OFFSETS {
                    moves.push(Move::new(i, sq.offset(dx, dy)));
                }
            }
            PieceType::Pawn => {
                let dir = piece.color.pawn_direction();
                for dx in [-1, 0, 1] {
                    moves.push(Move::new(i, sq.offset(dx, dir)));
                }
            }
            kind => {
                for &dir in kind.ray_directions() {
                    slider_candidates(p, i, dir, &mut moves);
                }
            }
        }
    }
    moves
}

fn slider_candidates(p: &Position, i: usize, dir: (i64, i64), moves: &mut Vec<Move>) {
    let from = &p.pieces[i].square;
    // first blocking step along the ray
    let mut blocker: Option<BigInt> = None;
    for (j, b) in p.live_pieces() {
        if j == i {
            continue;
        }
        let bx = &b.square.x - &from.x;
        let by = &b.square.y - &from.y;
        let t = if dir.0 != 0 { &bx * dir.0 } else { &by * dir.1 };
        if t.is_positive() && bx == &t * dir.0 && by == &t * dir.1 {
            blocker = Some(match blocker {
                Some(cur) if cur <= t => cur,
                _ => t,
            });
        }
    }
    let mut steps: Vec<BigInt> = vec![BigInt::one(), BigInt::from(2)];
    let mut crossings = Vec::new();
    for (_, other) in p.live_pieces() {
        crossing_steps(from, dir, &other.square, &mut crossings);
    }
    for c in crossings {
        steps.push(&c - 1);
        steps.push(&c + 1);
        steps.push(c);
    }
    if let Some(b) = &blocker {
        steps.push(b - 1);
        steps.push(b.clone());
    } else {
        let max = steps.iter().max().cloned().unwrap_or_else(BigInt::one);
        steps.push(&max + 1);
        steps.push(&max + 2);
    }
    let uniq: BTreeSet<BigInt> = steps
        .into_iter()
        .filter(|s| s.is_positive() && blocker.as_ref().is_none_or(|b| s <= b))
        .collect();
    for s in uniq {
        let target = Square {
            x: &from.x + &s * dir.0,
            y: &from.y + &s * dir.1,
        };
        moves.push(Move::new(i, target));
    }
}

/// All legal moves among [`candidate_moves`].
pub fn legal_candidate_moves(p: &Position) -> Vec<Move> {
    candidate_moves(p)
        .into_iter()
        .filter(|m| legal_unchecked(p, m))
        .collect()
}

pub fn has_legal_move(p: &Position) -> bool {
    candidate_moves(p).iter().any(|m| legal_unchecked(p, m))
}

pub fn is_mated(p: &Position) -> bool {
    in_check(p, p.turn) && !has_legal_move(p)
}

/// A side with no live pieces at all has no legal move; without a king it is not in
/// check, so such a position counts as stalemate.
pub fn is_stalemated(p: &Position) -> bool {
    !in_check(p, p.turn) && !has_legal_move(p)
}

pub fn translate(p: &Position, dx: &BigInt, dy: &BigInt) -> Position {
    Position {
        pieces: p
            .pieces
            .iter()
            .map(|d| {
                if d.alive {
                    PieceDesignation {
                        square: d.square.shifted(dx, dy),
                        ..d.clone()
                    }
                } else {
                    d.clone()
                }
            })
            .collect(),
        turn: p.turn,
    }
}

/// The move that turns `p` into `q`, if `q` differs from `p` by one relocated piece.
pub fn move_between(p: &Position, q: &Position) -> Option<Move> {
    if p.pieces.len() != q.pieces.len() {
        return None;
    }
    let moved: Vec<usize> = (0..p.pieces.len())
        .filter(|&i| p.pieces[i].alive && q.pieces[i].alive && p.pieces[i].square != q.pieces[i].square)
        .collect();
    match moved.as_slice() {
        [i] => Some(Move::new(*i, q.pieces[*i].square.clone())),
        _ => None,
    }
}
