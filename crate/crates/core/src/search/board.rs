//! Machine-integer board used by the search engine.

use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rustc_hash::FxHasher;

use crate::model::{Color, Move, PieceDesignation, PieceType, Position, Square, KING_OFFSETS, KNIGHT_OFFSETS};

/// Coordinates beyond this magnitude (after centring) are refused, leaving ample room
/// for arithmetic on offsets and region bounds.
const COORD_LIMIT: i64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Piece {
    pub kind: PieceType,
    pub color: Color,
    pub alive: bool,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoardMove {
    pub piece: u8,
    pub x: i64,
    pub y: i64,
}

/// What [`Board::make`] needs to undo a move.
#[derive(Debug, Clone, Copy)]
pub struct Undo {
    piece: u8,
    from: (i64, i64),
    captured: Option<u8>,
}

/// A position translated so that its pieces sit near the origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Board {
    pub pieces: Vec<Piece>,
    pub turn: Color,
}

/// Translation between a [`Position`] and its [`Board`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub dx: BigInt,
    pub dy: BigInt,
}

impl Frame {
    pub fn to_move(&self, m: &BoardMove) -> Move {
        Move::new(
            m.piece as usize,
            Square::new(BigInt::from(m.x) + &self.dx, BigInt::from(m.y) + &self.dy),
        )
    }

    pub fn to_board_move(&self, m: &Move) -> Option<BoardMove> {
        Some(BoardMove {
            piece: u8::try_from(m.piece).ok()?,
            x: (&m.target.x - &self.dx).to_i64()?,
            y: (&m.target.y - &self.dy).to_i64()?,
        })
    }

    pub fn to_position(&self, b: &Board) -> Position {
        Position::new(
            b.pieces
                .iter()
                .map(|p| {
                    if p.alive {
                        PieceDesignation::live(
                            p.kind,
                            p.color,
                            Square::new(BigInt::from(p.x) + &self.dx, BigInt::from(p.y) + &self.dy),
                        )
                    } else {
                        PieceDesignation::captured(p.kind, p.color)
                    }
                })
                .collect(),
            b.turn,
        )
    }
}

pub fn sign(v: i64) -> i64 {
    v.signum()
}

impl Board {
    /// Centres the position on its first live piece; `None` when the live pieces are
    /// too far apart for machine integers or there are more than 255 pieces.
    pub fn from_position(p: &Position) -> Option<(Board, Frame)> {
        if p.pieces.len() > u8::MAX as usize {
            return None;
        }
        let anchor = p
            .live_pieces()
            .next()
            .map(|(_, d)| d.square.clone())
            .unwrap_or_else(Square::captured_default);
        let frame = Frame { dx: anchor.x, dy: anchor.y };
        let mut pieces = Vec::with_capacity(p.pieces.len());
        for d in &p.pieces {
            let (x, y) = if d.alive {
                let x = (&d.square.x - &frame.dx).to_i64()?;
                let y = (&d.square.y - &frame.dy).to_i64()?;
                if x.abs() > COORD_LIMIT || y.abs() > COORD_LIMIT {
                    return None;
                }
                (x, y)
            } else {
                (0, 0)
            };
            pieces.push(Piece { kind: d.kind, color: d.color, alive: d.alive, x, y });
        }
        Some((Board { pieces, turn: p.turn }, frame))
    }

    pub fn hash_key(&self) -> u64 {
        let mut h = FxHasher::default();
        self.turn.hash(&mut h);
        for p in &self.pieces {
            p.alive.hash(&mut h);
            if p.alive {
                p.x.hash(&mut h);
                p.y.hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn occupant(&self, x: i64, y: i64) -> Option<usize> {
        self.pieces.iter().position(|p| p.alive && p.x == x && p.y == y)
    }

    pub fn king(&self, c: Color) -> Option<usize> {
        self.pieces
            .iter()
            .position(|p| p.alive && p.kind == PieceType::King && p.color == c)
    }

    /// Whether some live piece other than `skip` lies strictly between the two squares,
    /// which must share a line.
    fn obstructed(&self, skip: usize, fx: i64, fy: i64, tx: i64, ty: i64) -> bool {
        let (sx, sy) = (sign(tx - fx), sign(ty - fy));
        let steps = if sx != 0 { (tx - fx).abs() } else { (ty - fy).abs() };
        self.pieces.iter().enumerate().any(|(j, b)| {
            if j == skip || !b.alive {
                return false;
            }
            let (bx, by) = (b.x - fx, b.y - fy);
            let t = if sx != 0 { bx * sx } else { by * sy };
            t > 0 && t < steps && bx == t * sx && by == t * sy
        })
    }

    pub fn attacks(&self, i: usize, x: i64, y: i64) -> bool {
        let p = &self.pieces[i];
        if !p.alive {
            return false;
        }
        let (dx, dy) = (x - p.x, y - p.y);
        match p.kind {
            PieceType::King => (dx, dy) != (0, 0) && dx.abs() <= 1 && dy.abs() <= 1,
            PieceType::Knight => KNIGHT_OFFSETS.contains(&(dx, dy)),
            PieceType::Pawn => dy == p.color.pawn_direction() && dx.abs() == 1,
            kind => {
                if (dx, dy) == (0, 0) {
                    return false;
                }
                let ortho = dx == 0 || dy == 0;
                let diag = dx.abs() == dy.abs();
                let on_line = match kind {
                    PieceType::Rook => ortho,
                    PieceType::Bishop => diag,
                    _ => ortho || diag,
                };
                on_line && !self.obstructed(i, p.x, p.y, x, y)
            }
        }
    }

    pub fn attacked_by(&self, c: Color, x: i64, y: i64) -> bool {
        (0..self.pieces.len()).any(|j| self.pieces[j].alive && self.pieces[j].color == c && self.attacks(j, x, y))
    }

    pub fn in_check(&self, c: Color) -> bool {
        match self.king(c) {
            Some(k) => self.attacked_by(c.opponent(), self.pieces[k].x, self.pieces[k].y),
            None => false,
        }
    }

    fn pseudo_legal(&self, m: &BoardMove) -> bool {
        let i = m.piece as usize;
        let p = &self.pieces[i];
        if !p.alive || p.color != self.turn || (p.x, p.y) == (m.x, m.y) {
            return false;
        }
        let occ = self.occupant(m.x, m.y).map(|j| &self.pieces[j]);
        if let Some(o) = occ {
            if o.color == p.color || o.kind == PieceType::King {
                return false;
            }
        }
        if p.kind == PieceType::Pawn {
            let dir = p.color.pawn_direction();
            let dx = m.x - p.x;
            if m.y - p.y != dir {
                return false;
            }
            if dx == 0 {
                occ.is_none()
            } else {
                dx.abs() == 1 && occ.is_some()
            }
        } else {
            self.attacks(i, m.x, m.y)
        }
    }

    pub fn make(&mut self, m: &BoardMove) -> Undo {
        let i = m.piece as usize;
        let captured = self.occupant(m.x, m.y).filter(|&j| j != i);
        if let Some(j) = captured {
            let v = &mut self.pieces[j];
            v.alive = false;
            v.x = 0;
            v.y = 0;
        }
        let from = (self.pieces[i].x, self.pieces[i].y);
        self.pieces[i].x = m.x;
        self.pieces[i].y = m.y;
        self.turn = self.turn.opponent();
        Undo {
            piece: m.piece,
            from,
            captured: captured.map(|j| j as u8),
        }
    }

    pub fn unmake(&mut self, m: &BoardMove, u: Undo) {
        let i = u.piece as usize;
        self.pieces[i].x = u.from.0;
        self.pieces[i].y = u.from.1;
        if let Some(j) = u.captured {
            let v = &mut self.pieces[j as usize];
            v.alive = true;
            v.x = m.x;
            v.y = m.y;
        }
        self.turn = self.turn.opponent();
    }

    pub fn is_legal(&mut self, m: &BoardMove) -> bool {
        if !self.pseudo_legal(m) {
            return false;
        }
        let mover = self.turn;
        let u = self.make(m);
        let ok = !self.in_check(mover);
        self.unmake(m, u);
        ok
    }

    /// Finite move set containing a legal move whenever one exists (see the model's
    /// candidate construction, which this mirrors on machine integers).
    fn exact_candidates(&self, out: &mut Vec<BoardMove>) {
        for (i, p) in self.pieces.iter().enumerate() {
            if !p.alive || p.color != self.turn {
                continue;
            }
            let piece = i as u8;
            match p.kind {
                PieceType::King => {
                    out.extend(KING_OFFSETS.iter().map(|&(dx, dy)| BoardMove { piece, x: p.x + dx, y: p.y + dy }))
                }
                PieceType::Knight => {
                    out.extend(KNIGHT_OFFSETS.iter().map(|&(dx, dy)| BoardMove { piece, x: p.x + dx, y: p.y + dy }))
                }
                PieceType::Pawn => {
                    let dir = p.color.pawn_direction();
                    out.extend([-1, 0, 1].map(|dx| BoardMove { piece, x: p.x + dx, y: p.y + dir }))
                }
                kind => {
                    for &dir in kind.ray_directions() {
                        self.exact_ray(i, dir, out);
                    }
                }
            }
        }
    }

    fn exact_ray(&self, i: usize, (dx, dy): (i64, i64), out: &mut Vec<BoardMove>) {
        let from = &self.pieces[i];
        let blocker = self.first_blocker(i, (dx, dy));
        let mut steps = vec![1i64, 2];
        for o in self.pieces.iter().filter(|o| o.alive) {
            for (a, b) in [(0i64, 1i64), (1, 0), (1, -1), (1, 1)] {
                let rate = a * dx + b * dy;
                let want = a * (o.x - from.x) + b * (o.y - from.y);
                let c = if rate != 0 {
                    if want % rate != 0 {
                        continue;
                    }
                    want / rate
                } else if want == 0 {
                    if dx != 0 {
                        (o.x - from.x) * dx
                    } else {
                        (o.y - from.y) * dy
                    }
                } else {
                    continue;
                };
                steps.extend([c - 1, c, c + 1]);
            }
        }
        match blocker {
            Some(b) => steps.extend([b - 1, b]),
            None => {
                let max = steps.iter().copied().max().unwrap_or(1);
                steps.extend([max + 1, max + 2]);
            }
        }
        steps.sort_unstable();
        steps.dedup();
        let piece = i as u8;
        for s in steps {
            if s > 0 && blocker.is_none_or(|b| s <= b) {
                out.push(BoardMove { piece, x: from.x + s * dx, y: from.y + s * dy });
            }
        }
    }

    fn first_blocker(&self, i: usize, (dx, dy): (i64, i64)) -> Option<i64> {
        let from = &self.pieces[i];
        self.pieces
            .iter()
            .enumerate()
            .filter(|&(j, b)| j != i && b.alive)
            .filter_map(|(_, b)| {
                let (bx, by) = (b.x - from.x, b.y - from.y);
                let t = if dx != 0 { bx * dx } else { by * dy };
                (t > 0 && bx == t * dx && by == t * dy).then_some(t)
            })
            .min()
    }

    pub fn has_legal_move(&mut self) -> bool {
        let mut cands = Vec::new();
        self.exact_candidates(&mut cands);
        cands.iter().any(|m| self.is_legal(m))
    }

    /// Legal moves from the exact candidate set.
    pub fn exact_legal_moves(&mut self) -> Vec<BoardMove> {
        let mut cands = Vec::new();
        self.exact_candidates(&mut cands);
        cands.retain(|m| self.is_legal(m));
        cands
    }

    /// Bounding box of the live pieces.
    pub fn bbox(&self) -> (i64, i64, i64, i64) {
        let mut it = self.pieces.iter().filter(|p| p.alive);
        let Some(first) = it.next() else {
            return (0, 0, 0, 0);
        };
        it.fold((first.x, first.x, first.y, first.y), |(x0, x1, y0, y1), p| {
            (x0.min(p.x), x1.max(p.x), y0.min(p.y), y1.max(p.y))
        })
    }

    /// Legal moves with targets in the live bounding box inflated by `radius`, plus
    /// for every slider ray that leaves this region unobstructed the squares
    /// `far_offsets` steps past its last square inside.
    pub fn canonical_moves(&mut self, radius: i64, far_offsets: &[i64]) -> Vec<BoardMove> {
        let (x0, x1, y0, y1) = self.bbox();
        let (x0, x1, y0, y1) = (x0 - radius, x1 + radius, y0 - radius, y1 + radius);
        let inside = |x: i64, y: i64| x >= x0 && x <= x1 && y >= y0 && y <= y1;
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if !p.alive || p.color != self.turn {
                continue;
            }
            let piece = i as u8;
            match p.kind {
                PieceType::King => out.extend(
                    KING_OFFSETS.iter().map(|&(dx, dy)| BoardMove { piece, x: p.x + dx, y: p.y + dy }),
                ),
                PieceType::Knight => out.extend(
                    KNIGHT_OFFSETS.iter().map(|&(dx, dy)| BoardMove { piece, x: p.x + dx, y: p.y + dy }),
                ),
                PieceType::Pawn => {
                    let dir = p.color.pawn_direction();
                    out.extend([-1, 0, 1].map(|dx| BoardMove { piece, x: p.x + dx, y: p.y + dir }))
                }
                kind => {
                    for &(dx, dy) in kind.ray_directions() {
                        let (mut x, mut y) = (p.x + dx, p.y + dy);
                        let mut open = true;
                        while inside(x, y) {
                            out.push(BoardMove { piece, x, y });
                            if self.occupant(x, y).is_some() {
                                open = false;
                                break;
                            }
                            x += dx;
                            y += dy;
                        }
                        if open {
                            let (lx, ly) = (x - dx, y - dy);
                            for &f in far_offsets {
                                out.push(BoardMove { piece, x: lx + f * dx, y: ly + f * dy });
                            }
                        }
                    }
                }
            }
        }
        out.retain(|m| inside(m.x, m.y) || self.pieces[m.piece as usize].kind.is_slider());
        let mut seen = rustc_hash::FxHashSet::default();
        out.retain(|m| seen.insert(*m));
        out.retain(|m| self.is_legal(m));
        out
    }

    pub fn gives_check(&mut self, m: &BoardMove) -> bool {
        let mover = self.turn;
        let u = self.make(m);
        let c = self.in_check(mover.opponent());
        self.unmake(m, u);
        c
    }

    pub fn king_distance(&self) -> Option<i64> {
        let a = &self.pieces[self.king(Color::White)?];
        let b = &self.pieces[self.king(Color::Black)?];
        Some((a.x - b.x).abs().max((a.y - b.y).abs()))
    }
}
