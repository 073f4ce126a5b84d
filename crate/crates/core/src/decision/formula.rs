use std::collections::BTreeSet;
use std::fmt;

use crate::model::Color;

/// A position variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// First-order formula over positions in the vocabulary of turn, check and one-move
/// atoms. Quantifiers range over well-formed positions of one piece specification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    ToPlay(Color, Var),
    InCheck(Color, Var),
    OneMove(Var, Var),
    PosEq(Var, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn white_to_play(v: Var) -> Formula {
        Formula::ToPlay(Color::White, v)
    }

    pub fn black_to_play(v: Var) -> Formula {
        Formula::ToPlay(Color::Black, v)
    }

    pub fn white_in_check(v: Var) -> Formula {
        Formula::InCheck(Color::White, v)
    }

    pub fn black_in_check(v: Var) -> Formula {
        Formula::InCheck(Color::Black, v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            g => Formula::Not(Box::new(g)),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => v.extend(inner),
                p => v.push(p),
            }
        }
        match v.len() {
            0 => Formula::True,
            1 => v.pop().unwrap(),
            _ => Formula::And(v),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => v.extend(inner),
                p => v.push(p),
            }
        }
        match v.len() {
            0 => Formula::False,
            1 => v.pop().unwrap(),
            _ => Formula::Or(v),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([Formula::not(a), b])
    }

    pub fn exists(v: Var, f: Formula) -> Formula {
        Formula::Exists(v, Box::new(f))
    }

    pub fn forall(v: Var, f: Formula) -> Formula {
        Formula::Forall(v, Box::new(f))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut see = |v: &Var, bound: &Vec<Var>| {
            if !bound.contains(v) {
                out.insert(*v);
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::ToPlay(_, v) | Formula::InCheck(_, v) => see(v, bound),
            Formula::OneMove(a, b) | Formula::PosEq(a, b) => {
                see(a, bound);
                see(b, bound);
            }
            Formula::Not(g) => g.collect_free(bound, out),
            Formula::And(v) | Formula::Or(v) => {
                for g in v {
                    g.collect_free(bound, out);
                }
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                bound.push(*v);
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Longest chain of nested quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Not(g) => g.quantifier_depth(),
            Formula::And(v) | Formula::Or(v) => {
                v.iter().map(Formula::quantifier_depth).max().unwrap_or(0)
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => 1 + g.quantifier_depth(),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => 1 + g.size(),
            Formula::And(v) | Formula::Or(v) => 1 + v.iter().map(Formula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Whether the formula has no quantifier.
    pub fn is_atomic_combination(&self) -> bool {
        self.quantifier_depth() == 0
    }

    /// Renames variables: free ones through `free`, bound ones to consecutive numbers
    /// starting at `next` in binding order. Alpha-equivalent formulas map to the same
    /// result.
    pub fn normalized(&self, free: &dyn Fn(Var) -> Var, next: u32) -> Formula {
        self.norm(free, &mut Vec::new(), next)
    }

    fn norm(&self, free: &dyn Fn(Var) -> Var, bound: &mut Vec<(Var, Var)>, next: u32) -> Formula {
        let r = |v: &Var, bound: &Vec<(Var, Var)>| {
            bound
                .iter()
                .rev()
                .find(|(old, _)| old == v)
                .map_or_else(|| free(*v), |(_, new)| *new)
        };
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::ToPlay(c, v) => Formula::ToPlay(*c, r(v, bound)),
            Formula::InCheck(c, v) => Formula::InCheck(*c, r(v, bound)),
            Formula::OneMove(a, b) => Formula::OneMove(r(a, bound), r(b, bound)),
            Formula::PosEq(a, b) => Formula::PosEq(r(a, bound), r(b, bound)),
            Formula::Not(g) => Formula::Not(Box::new(g.norm(free, bound, next))),
            Formula::And(v) => Formula::And(v.iter().map(|g| g.norm(free, bound, next)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.norm(free, bound, next)).collect()),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let nv = Var(next + bound.len() as u32);
                bound.push((*v, nv));
                let body = Box::new(g.norm(free, bound, next));
                bound.pop();
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(nv, body)
                } else {
                    Formula::Forall(nv, body)
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let color = |c: &Color| match c {
            Color::White => "White",
            Color::Black => "Black",
        };
        let list = |f: &mut fmt::Formatter<'_>, v: &[Formula], op: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::ToPlay(c, v) => write!(f, "{}ToPlay({v})", color(c)),
            Formula::InCheck(c, v) => write!(f, "{}InCheck({v})", color(c)),
            Formula::OneMove(a, b) => write!(f, "OneMove({a},{b})"),
            Formula::PosEq(a, b) => write!(f, "{a}={b}"),
            Formula::Not(g) => write!(f, "¬{g}"),
            Formula::And(v) => list(f, v, "∧"),
            Formula::Or(v) => list(f, v, "∨"),
            Formula::Exists(v, g) => write!(f, "∃{v} {g}"),
            Formula::Forall(v, g) => write!(f, "∀{v} {g}"),
        }
    }
}

/// The questions the engines answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Mate,
    Stalemate,
    /// Draw by confinement to at most `k` positions.
    Draw { k: usize },
}

/// Hands out fresh variables; `Var(0)` is reserved for the root position.
struct Fresh(u32);

impl Fresh {
    fn var(&mut self) -> Var {
        self.0 += 1;
        Var(self.0)
    }
}

/// The free variable of every built formula.
pub const ROOT: Var = Var(0);

/// `player` has already won at `p`: the opponent is to move, checkmated, and `player`
/// is not in check; or `player` is to move and the opponent is in check.
fn won(player: Color, p: Var, fresh: &mut Fresh) -> Formula {
    let opp = player.opponent();
    let q = fresh.var();
    Formula::or([
        Formula::and([
            Formula::ToPlay(opp, p),
            Formula::InCheck(opp, p),
            Formula::not(Formula::exists(q, Formula::OneMove(p, q))),
            Formula::not(Formula::InCheck(player, p)),
        ]),
        Formula::and([Formula::ToPlay(player, p), Formula::InCheck(opp, p)]),
    ])
}

fn stalemated(player: Color, p: Var, fresh: &mut Fresh) -> Formula {
    let opp = player.opponent();
    let q = fresh.var();
    Formula::and([
        Formula::ToPlay(opp, p),
        Formula::not(Formula::InCheck(opp, p)),
        Formula::not(Formula::exists(q, Formula::OneMove(p, q))),
    ])
}

/// `player` forces `goal` within `n` of their own moves.
///
/// Unfolding "win in `n`" as "win in `n − 1`, or a move of ours into win-in-`n − 1`,
/// or every move of theirs answered by such a move" repeats the `n − 1` formula three
/// times. Both move cases are folded into one universal over the position in which we
/// move next — `p` itself when we are to move, any successor of `p` otherwise — and
/// the first disjunct is dropped, since the unfolded formula already contains it at
/// every level (the goal is checked at each depth). The result grows linearly in `n`
/// and is equivalent to the threefold unfolding.
fn forces(
    player: Color,
    n: usize,
    p: Var,
    fresh: &mut Fresh,
    goal: &dyn Fn(Var, &mut Fresh) -> Formula,
) -> Formula {
    let reached = goal(p, fresh);
    if n == 0 {
        return reached;
    }
    let opp = player.opponent();
    let (m, q, r) = (fresh.var(), fresh.var(), fresh.var());
    let next = forces(player, n - 1, r, fresh, goal);
    let our_turn = Formula::or([
        Formula::and([Formula::ToPlay(player, p), Formula::PosEq(p, q)]),
        Formula::and([Formula::ToPlay(opp, p), Formula::OneMove(p, q)]),
    ]);
    let step = Formula::and([
        Formula::or([
            Formula::ToPlay(player, p),
            Formula::exists(m, Formula::OneMove(p, m)),
        ]),
        Formula::forall(
            q,
            Formula::implies(
                our_turn,
                Formula::exists(r, Formula::and([Formula::OneMove(q, r), next])),
            ),
        ),
    ]);
    Formula::or([reached, step])
}

/// Mate in at most `n` of `player`'s moves, free in [`ROOT`].
pub fn mate_formula(player: Color, n: usize) -> Formula {
    forces(player, n, ROOT, &mut Fresh(0), &|p, fresh| won(player, p, fresh))
}

/// Mate or stalemate of the opponent within `n` of `player`'s moves.
pub fn stalemate_formula(player: Color, n: usize) -> Formula {
    forces(player, n, ROOT, &mut Fresh(0), &|p, fresh| {
        Formula::or([won(player, p, fresh), stalemated(player, p, fresh)])
    })
}

/// Within `n` moves `player` wins or reaches one of `k` positions `s_1..s_k` in which
/// the opponent is to move, has a move, and every move of theirs can be answered by a
/// win or a return into the family.
pub fn draw_formula(player: Color, n: usize, k: usize) -> Formula {
    let opp = player.opponent();
    let mut fresh = Fresh(0);
    let family: Vec<Var> = (0..k).map(|_| fresh.var()).collect();
    let in_family = |x: Var| Formula::or(family.iter().map(|&s| Formula::PosEq(x, s)));
    let mut closure = Vec::new();
    for &s in &family {
        let (q1, q2, r) = (fresh.var(), fresh.var(), fresh.var());
        let back = Formula::or([won(player, r, &mut fresh), in_family(r)]);
        closure.push(Formula::and([
            Formula::ToPlay(opp, s),
            Formula::exists(q1, Formula::OneMove(s, q1)),
            Formula::forall(
                q2,
                Formula::implies(
                    Formula::OneMove(s, q2),
                    Formula::exists(r, Formula::and([Formula::OneMove(q2, r), back])),
                ),
            ),
        ]));
    }
    let reach = forces(player, n, ROOT, &mut fresh, &|x, fresh| {
        Formula::or([won(player, x, fresh), in_family(x)])
    });
    let body = Formula::and(closure.into_iter().chain([reach]));
    family
        .iter()
        .rev()
        .fold(body, |acc, &s| Formula::exists(s, acc))
}

/// The formula a query kind asks about.
pub fn query_formula(kind: QueryKind, player: Color, n: usize) -> Formula {
    match kind {
        QueryKind::Mate => mate_formula(player, n),
        QueryKind::Stalemate => stalemate_formula(player, n),
        QueryKind::Draw { k } => draw_formula(player, n, k),
    }
}
