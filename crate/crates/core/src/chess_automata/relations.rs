//! The chess relations as quantifier-free linear formulas over a [`Layout`].

use crate::automata::{Qf, Rel};
use crate::model::{Color, PieceSpec, PieceType, KING_OFFSETS, KNIGHT_OFFSETS};

use super::layout::Layout;

pub(crate) fn color_bit(c: Color) -> i128 {
    match c {
        Color::White => 0,
        Color::Black => 1,
    }
}

fn is_alive(l: &Layout, slot: usize, i: usize) -> Qf {
    Qf::is_const(l.alive(slot, i), 1)
}

fn at(l: &Layout, slot: usize, j: usize, tx: usize, ty: usize) -> Qf {
    Qf::and([Qf::eq(l.x(slot, j), tx), Qf::eq(l.y(slot, j), ty)])
}

/// Live piece `j` of `slot` stands on `(tx, ty)`.
fn occupies(l: &Layout, slot: usize, j: usize, tx: usize, ty: usize) -> Qf {
    Qf::and([is_alive(l, slot, j), at(l, slot, j, tx, ty)])
}

/// Well-formedness beyond tape syntax: captured pieces sit on the default square and
/// live pieces occupy distinct squares.
pub fn domain_qf(l: &Layout, slot: usize) -> Qf {
    let mut parts = Vec::new();
    for i in 0..l.pieces {
        parts.push(Qf::implies(
            Qf::not(is_alive(l, slot, i)),
            Qf::and([Qf::is_const(l.x(slot, i), 0), Qf::is_const(l.y(slot, i), 0)]),
        ));
        for j in i + 1..l.pieces {
            parts.push(Qf::not(Qf::and([
                is_alive(l, slot, i),
                is_alive(l, slot, j),
                Qf::eq(l.x(slot, i), l.x(slot, j)),
                Qf::eq(l.y(slot, i), l.y(slot, j)),
            ])));
        }
    }
    Qf::and(parts)
}

fn offsets(l: &Layout, slot: usize, i: usize, tx: usize, ty: usize, table: &[(i64, i64)]) -> Qf {
    Qf::or(table.iter().map(|&(dx, dy)| {
        Qf::and([
            Qf::eq_off(tx, l.x(slot, i), dx as i128),
            Qf::eq_off(ty, l.y(slot, i), dy as i128),
        ])
    }))
}

/// Integer linear forms of a line direction: points on the line through `(x0, y0)` keep
/// `key` fixed and are ordered by `order`.
struct LineKind {
    key: &'static [(i128, i128)], // coefficients on (x, y) that stay constant
    order: (i128, i128),
}

const RANK: LineKind = LineKind {
    key: &[(0, 1)],
    order: (1, 0),
};
const FILE: LineKind = LineKind {
    key: &[(1, 0)],
    order: (0, 1),
};
const DIAG: LineKind = LineKind {
    key: &[(1, -1)],
    order: (1, 0),
};
const ANTI: LineKind = LineKind {
    key: &[(1, 1)],
    order: (1, 0),
};

/// Slider `i` reaches `(tx, ty)` along one kind of line without obstruction.
fn along(l: &Layout, slot: usize, i: usize, tx: usize, ty: usize, line: &LineKind) -> Qf {
    let (xi, yi) = (l.x(slot, i), l.y(slot, i));
    let mut parts = Vec::new();
    for &(a, b) in line.key {
        parts.push(Qf::atom([(tx, a), (ty, b), (xi, -a), (yi, -b)], Rel::Eq, 0));
    }
    let (oa, ob) = line.order;
    // target differs from the slider's square
    parts.push(Qf::atom([(tx, oa), (ty, ob), (xi, -oa), (yi, -ob)], Rel::Ne, 0));
    for j in 0..l.pieces {
        if j == i {
            continue;
        }
        let (xj, yj) = (l.x(slot, j), l.y(slot, j));
        let mut on_line = vec![is_alive(l, slot, j)];
        for &(a, b) in line.key {
            on_line.push(Qf::atom([(xj, a), (yj, b), (xi, -a), (yi, -b)], Rel::Eq, 0));
        }
        // strictly between along the ordering form
        let ord = |p: (usize, usize), q: (usize, usize)| {
            Qf::atom([(p.0, oa), (p.1, ob), (q.0, -oa), (q.1, -ob)], Rel::Lt, 0)
        };
        let between = Qf::or([
            Qf::and([ord((xi, yi), (xj, yj)), ord((xj, yj), (tx, ty))]),
            Qf::and([ord((tx, ty), (xj, yj)), ord((xj, yj), (xi, yi))]),
        ]);
        on_line.push(between);
        parts.push(Qf::not(Qf::and(on_line)));
    }
    Qf::and(parts)
}

/// Geometry of piece `i` (alive) attacking `(tx, ty)` in `slot`, ignoring occupancy of
/// the target.
pub fn attack_qf(spec: &PieceSpec, l: &Layout, slot: usize, i: usize, tx: usize, ty: usize) -> Qf {
    let (kind, color) = spec.get(i);
    let geometry = match kind {
        PieceType::King => offsets(l, slot, i, tx, ty, &KING_OFFSETS),
        PieceType::Knight => offsets(l, slot, i, tx, ty, &KNIGHT_OFFSETS),
        PieceType::Pawn => {
            let d = color.pawn_direction();
            offsets(l, slot, i, tx, ty, &[(-1, d), (1, d)])
        }
        PieceType::Rook => Qf::or([
            along(l, slot, i, tx, ty, &RANK),
            along(l, slot, i, tx, ty, &FILE),
        ]),
        PieceType::Bishop => Qf::or([
            along(l, slot, i, tx, ty, &DIAG),
            along(l, slot, i, tx, ty, &ANTI),
        ]),
        PieceType::Queen => Qf::or([
            along(l, slot, i, tx, ty, &RANK),
            along(l, slot, i, tx, ty, &FILE),
            along(l, slot, i, tx, ty, &DIAG),
            along(l, slot, i, tx, ty, &ANTI),
        ]),
    };
    Qf::and([is_alive(l, slot, i), geometry])
}

/// `c`'s king is alive and attacked in `slot`.
pub fn in_check_qf(spec: &PieceSpec, l: &Layout, slot: usize, c: Color) -> Qf {
    let Some(k) = spec.king_index(c) else {
        return Qf::False;
    };
    let (kx, ky) = (l.x(slot, k), l.y(slot, k));
    let attackers = (0..l.pieces)
        .filter(|&j| spec.get(j).1 != c)
        .map(|j| attack_qf(spec, l, slot, j, kx, ky));
    Qf::and([is_alive(l, slot, k), Qf::or(attackers)])
}

fn unchanged(l: &Layout, p: usize, q: usize, j: usize) -> Qf {
    Qf::and([
        Qf::eq(l.alive(q, j), l.alive(p, j)),
        Qf::eq(l.x(q, j), l.x(p, j)),
        Qf::eq(l.y(q, j), l.y(p, j)),
    ])
}

/// Position `q` arises from `p` by a legal move of piece `i`.
pub fn one_move_piece_qf(spec: &PieceSpec, l: &Layout, p: usize, q: usize, i: usize) -> Qf {
    let (kind, color) = spec.get(i);
    let (tx, ty) = (l.x(q, i), l.y(q, i));
    let mut parts = vec![
        Qf::is_const(l.turn(p), color_bit(color)),
        Qf::is_const(l.turn(q), color_bit(color.opponent())),
        is_alive(l, p, i),
        is_alive(l, q, i),
    ];
    let opponents: Vec<usize> = (0..l.pieces).filter(|&j| spec.get(j).1 != color).collect();
    let geometry = if kind == PieceType::Pawn {
        let d = color.pawn_direction() as i128;
        let push = Qf::and(
            [
                Qf::eq(tx, l.x(p, i)),
                Qf::eq_off(ty, l.y(p, i), d),
            ]
            .into_iter()
            .chain(
                (0..l.pieces)
                    .filter(|&j| j != i)
                    .map(|j| Qf::not(occupies(l, p, j, tx, ty))),
            ),
        );
        let victim = Qf::or(
            opponents
                .iter()
                .filter(|&&j| spec.get(j).0 != PieceType::King)
                .map(|&j| occupies(l, p, j, tx, ty)),
        );
        Qf::or([push, Qf::and([attack_qf(spec, l, p, i, tx, ty), victim])])
    } else {
        attack_qf(spec, l, p, i, tx, ty)
    };
    parts.push(geometry);
    for j in 0..l.pieces {
        if j == i {
            continue;
        }
        let (jk, jc) = spec.get(j);
        let here = occupies(l, p, j, tx, ty);
        if jc == color || jk == PieceType::King {
            parts.push(Qf::not(here));
            parts.push(unchanged(l, p, q, j));
        } else {
            let captured = Qf::and([
                here.clone(),
                Qf::is_const(l.alive(q, j), 0),
                Qf::is_const(l.x(q, j), 0),
                Qf::is_const(l.y(q, j), 0),
            ]);
            parts.push(Qf::or([
                captured,
                Qf::and([Qf::not(here), unchanged(l, p, q, j)]),
            ]));
        }
    }
    parts.push(Qf::not(in_check_qf(spec, l, q, color)));
    Qf::and(parts)
}

/// Some piece of the side to move in `p` moves legally to give `q`.
pub fn one_move_qf(spec: &PieceSpec, l: &Layout, p: usize, q: usize) -> Qf {
    Qf::or((0..l.pieces).map(|i| one_move_piece_qf(spec, l, p, q, i)))
}
