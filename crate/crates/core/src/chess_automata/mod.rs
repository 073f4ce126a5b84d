//! Positions as tuples of signed-binary words, and the chess relations as automata.
//!
//! A position over a specification of `N` pieces occupies `3N+1` tapes: the turn bit,
//! then alive bit, file and rank for each piece. Relation handles are built from the
//! quantifier-free formulas in [`relations`] and are loose automata (see
//! [`crate::automata::Repr`]); they agree with the reference rules on every canonical
//! encoding.

mod layout;
pub mod relations;

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use parking_lot::Mutex;
use rustc_hash::FxHashMap;

use crate::automata::{
    compile_qf, convolve_typed, AutomataError, BoolOp, LazyProduct, Limits,
    PaddedTuple, Qf, SyncAutomaton,
};
use crate::model::{validate_position, Color, PieceDesignation, PieceSpec, Position, Square};

pub use layout::Layout;
pub use relations::{attack_qf, domain_qf, in_check_qf, one_move_piece_qf, one_move_qf};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodingError {
    #[error("position does not match the piece specification")]
    SpecMismatch,
    #[error("invalid position: {0}")]
    Invalid(String),
    #[error("tuple is not an encoded position: {0}")]
    NotInDomain(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

/// Maps positions of one piece specification to tape tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionCoding {
    pub spec: PieceSpec,
}

impl PositionCoding {
    pub fn new(spec: PieceSpec) -> Self {
        PositionCoding { spec }
    }

    pub fn layout(&self, slots: usize, extra: usize) -> Layout {
        Layout::new(self.spec.len(), slots, extra)
    }

    pub fn tape_count(&self) -> usize {
        3 * self.spec.len() + 1
    }

    fn check(&self, p: &Position) -> Result<(), CodingError> {
        let matches = p.pieces.len() == self.spec.len()
            && p.pieces
                .iter()
                .zip(self.spec.entries())
                .all(|(d, &(k, c))| d.kind == k && d.color == c);
        if !matches {
            return Err(CodingError::SpecMismatch);
        }
        validate_position(p).map_err(|v| {
            CodingError::Invalid(
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })
    }

    /// Tape values for several positions interleaved per [`Layout`], then extra values.
    pub fn values(&self, positions: &[&Position], extra: &[BigInt]) -> Result<Vec<BigInt>, CodingError> {
        let l = self.layout(positions.len(), extra.len());
        let mut v = vec![BigInt::zero(); l.tape_count()];
        for (s, p) in positions.iter().enumerate() {
            self.check(p)?;
            v[l.turn(s)] = BigInt::from(relations::color_bit(p.turn));
            for (i, d) in p.pieces.iter().enumerate() {
                v[l.alive(s, i)] = BigInt::from(u8::from(d.alive));
                v[l.x(s, i)] = d.square.x.clone();
                v[l.y(s, i)] = d.square.y.clone();
            }
        }
        for (j, e) in extra.iter().enumerate() {
            v[l.extra(j)] = e.clone();
        }
        Ok(v)
    }

    pub fn encode_many(&self, positions: &[&Position], extra: &[BigInt]) -> Result<PaddedTuple, CodingError> {
        let l = self.layout(positions.len(), extra.len());
        let v = self.values(positions, extra)?;
        Ok(convolve_typed(&l.kinds().into_iter().zip(v).collect::<Vec<_>>())?)
    }

    pub fn encode(&self, p: &Position) -> Result<PaddedTuple, CodingError> {
        self.encode_many(&[p], &[])
    }

    /// Inverse of [`encode`](Self::encode) on canonical tuples of valid positions.
    pub fn decode(&self, t: &PaddedTuple) -> Result<Position, CodingError> {
        let l = self.layout(1, 0);
        let v = t.decode(&l.kinds())?;
        self.from_values(&l, 0, &v)
    }

    pub(crate) fn from_values(&self, l: &Layout, slot: usize, v: &[BigInt]) -> Result<Position, CodingError> {
        let turn = if v[l.turn(slot)].is_zero() {
            Color::White
        } else {
            Color::Black
        };
        let pieces = self
            .spec
            .entries()
            .iter()
            .enumerate()
            .map(|(i, &(kind, color))| PieceDesignation {
                kind,
                color,
                alive: v[l.alive(slot, i)].is_one(),
                square: Square {
                    x: v[l.x(slot, i)].clone(),
                    y: v[l.y(slot, i)].clone(),
                },
            })
            .collect();
        let p = Position { pieces, turn };
        self.check(&p)
            .map_err(|e| CodingError::NotInDomain(e.to_string()))?;
        Ok(p)
    }
}

pub fn encode_position(p: &Position) -> Result<PaddedTuple, CodingError> {
    let spec = p.spec().map_err(|e| CodingError::Invalid(e.to_string()))?;
    PositionCoding::new(spec).encode(p)
}

pub fn decode_position(spec: &PieceSpec, t: &PaddedTuple) -> Result<Position, CodingError> {
    PositionCoding::new(spec.clone()).decode(t)
}

/// How a relation's automaton is held.
#[derive(Debug, Clone)]
pub enum Representation {
    /// Explicit minimal automaton.
    Explicit(SyncAutomaton),
    /// Product of the atom automata run on the fly; used when the explicit automaton
    /// exceeds the construction budget.
    OnTheFly(LazyProduct),
}

/// A named chess relation: its formula and the automaton compiled from it.
#[derive(Debug, Clone)]
pub struct RelationHandle {
    pub name: String,
    pub spec: PieceSpec,
    pub layout: Layout,
    pub formula: Qf,
    pub representation: Representation,
}

impl RelationHandle {
    fn build(name: String, spec: &PieceSpec, layout: Layout, formula: Qf, limits: &Limits) -> Result<Self, AutomataError> {
        let representation = match compile_qf(&layout.kinds(), &formula, limits) {
            Ok(a) => Representation::Explicit(a),
            Err(e) if e.is_budget() => {
                Representation::OnTheFly(LazyProduct::new(&layout.kinds(), &formula, limits)?)
            }
            Err(e) => return Err(e),
        };
        Ok(RelationHandle {
            name,
            spec: spec.clone(),
            layout,
            formula,
            representation,
        })
    }

    /// The explicit automaton, if it was built within budget.
    pub fn automaton(&self) -> Option<&SyncAutomaton> {
        match &self.representation {
            Representation::Explicit(a) => Some(a),
            Representation::OnTheFly(_) => None,
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.automaton().is_some()
    }

    pub fn accepts_tuple(&self, t: &PaddedTuple) -> Result<bool, AutomataError> {
        match &self.representation {
            Representation::Explicit(a) => a.accepts(t),
            Representation::OnTheFly(p) => p.accepts(t),
        }
    }

    /// Position slots followed by extra integer arguments.
    pub fn accepts(&self, positions: &[&Position], extra: &[BigInt]) -> Result<bool, CodingError> {
        if positions.len() != self.layout.slots || extra.len() != self.layout.extra {
            return Err(CodingError::Automata(AutomataError::ArityMismatch {
                expected: self.layout.slots + self.layout.extra,
                found: positions.len() + extra.len(),
            }));
        }
        let t = PositionCoding::new(self.spec.clone()).encode_many(positions, extra)?;
        Ok(self.accepts_tuple(&t)?)
    }

    /// Direct evaluation of the formula, bypassing the automaton.
    pub fn eval(&self, positions: &[&Position], extra: &[BigInt]) -> Result<bool, CodingError> {
        let v = PositionCoding::new(self.spec.clone()).values(positions, extra)?;
        Ok(self.formula.eval(&v))
    }
}

/// Well-formed positions of `slots` interleaved slots (loose tapes).
pub fn position_domain_qf(l: &Layout) -> Qf {
    Qf::and((0..l.slots).map(|s| relations::domain_qf(l, s)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Domain(usize),
    Attack(usize),
    InCheck(Color),
    OneMovePiece(usize, bool),
    OneMove(bool),
    TurnIs(Color),
}

/// Thread-safe memo of relation handles per (specification, relation). Construction
/// happens outside the lock; concurrent builders of the same key produce equal handles
/// and the first one stored wins.
#[derive(Default)]
pub struct RelationCache {
    limits: Limits,
    map: Mutex<FxHashMap<(PieceSpec, Key), Arc<RelationHandle>>>,
}

impl RelationCache {
    pub fn new(limits: Limits) -> Self {
        RelationCache {
            limits,
            map: Mutex::new(FxHashMap::default()),
        }
    }

    pub fn global() -> &'static RelationCache {
        static CACHE: OnceLock<RelationCache> = OnceLock::new();
        CACHE.get_or_init(RelationCache::default)
    }

    fn get(
        &self,
        spec: &PieceSpec,
        key: Key,
        name: String,
        layout: Layout,
        formula: impl FnOnce() -> Qf,
    ) -> Result<Arc<RelationHandle>, AutomataError> {
        let k = (spec.clone(), key);
        if let Some(h) = self.map.lock().get(&k) {
            return Ok(h.clone());
        }
        // every handle stays inside the well-formed positions of its slots
        let f = Qf::and([position_domain_qf(&layout), formula()]);
        let h = Arc::new(RelationHandle::build(name, spec, layout, f, &self.limits)?);
        Ok(self.map.lock().entry(k).or_insert(h).clone())
    }

    /// Loose well-formed positions over `slots` interleaved slots.
    pub fn domain(&self, spec: &PieceSpec, slots: usize) -> Result<Arc<RelationHandle>, AutomataError> {
        let l = Layout::new(spec.len(), slots, 0);
        self.get(spec, Key::Domain(slots), format!("Domain{slots}"), l, || {
            position_domain_qf(&l)
        })
    }

    pub fn attack(&self, spec: &PieceSpec, i: usize) -> Result<Arc<RelationHandle>, AutomataError> {
        let l = Layout::new(spec.len(), 1, 2);
        self.get(spec, Key::Attack(i), format!("Attack{i}"), l, || {
            relations::attack_qf(spec, &l, 0, i, l.extra(0), l.extra(1))
        })
    }

    pub fn in_check(&self, spec: &PieceSpec, c: Color) -> Result<Arc<RelationHandle>, AutomataError> {
        let l = Layout::new(spec.len(), 1, 0);
        let name = match c {
            Color::White => "WhiteInCheck",
            Color::Black => "BlackInCheck",
        };
        self.get(spec, Key::InCheck(c), name.into(), l, || {
            relations::in_check_qf(spec, &l, 0, c)
        })
    }

    pub fn turn_is(&self, spec: &PieceSpec, c: Color) -> Result<Arc<RelationHandle>, AutomataError> {
        let l = Layout::new(spec.len(), 1, 0);
        let name = match c {
            Color::White => "WhiteToPlay",
            Color::Black => "BlackToPlay",
        };
        self.get(spec, Key::TurnIs(c), name.into(), l, || {
            Qf::is_const(l.turn(0), relations::color_bit(c))
        })
    }

    /// `(p, q)` with `p` in slot 0, or in slot 1 when `swapped`.
    pub fn one_move_piece(
        &self,
        spec: &PieceSpec,
        i: usize,
        swapped: bool,
    ) -> Result<Arc<RelationHandle>, AutomataError> {
        let l = Layout::new(spec.len(), 2, 0);
        let (p, q) = if swapped { (1, 0) } else { (0, 1) };
        self.get(spec, Key::OneMovePiece(i, swapped), format!("OneMove{i}"), l, || {
            relations::one_move_piece_qf(spec, &l, p, q, i)
        })
    }

    pub fn one_move(&self, spec: &PieceSpec, swapped: bool) -> Result<Arc<RelationHandle>, AutomataError> {
        let k = (spec.clone(), Key::OneMove(swapped));
        if let Some(h) = self.map.lock().get(&k) {
            return Ok(h.clone());
        }
        let l = Layout::new(spec.len(), 2, 0);
        let (p, q) = if swapped { (1, 0) } else { (0, 1) };
        let formula = Qf::and([position_domain_qf(&l), relations::one_move_qf(spec, &l, p, q)]);
        // union of the per-piece automata rather than one big formula
        let mut acc: Option<SyncAutomaton> = None;
        let mut explicit = true;
        for i in 0..spec.len() {
            let h = self.one_move_piece(spec, i, swapped)?;
            let Some(a) = h.automaton() else {
                explicit = false;
                break;
            };
            let next = match acc.take() {
                None => Ok(a.clone()),
                Some(b) => b.product(a, BoolOp::Or, &self.limits).map(|u| u.minimize()),
            };
            match next {
                Ok(u) => acc = Some(u),
                Err(e) if e.is_budget() => {
                    explicit = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let representation = match acc {
            Some(a) if explicit => Representation::Explicit(a),
            _ => Representation::OnTheFly(LazyProduct::new(&l.kinds(), &formula, &self.limits)?),
        };
        let h = Arc::new(RelationHandle {
            name: "OneMove".into(),
            spec: spec.clone(),
            layout: l,
            formula,
            representation,
        });
        Ok(self.map.lock().entry(k).or_insert(h).clone())
    }
}

/// Automaton of valid encoded positions of `spec` (3N+1 tapes, loose).
pub fn domain_auto(spec: &PieceSpec) -> Result<SyncAutomaton, AutomataError> {
    let l = Layout::new(spec.len(), 1, 0);
    compile_qf(&l.kinds(), &position_domain_qf(&l), &Limits::default())
}

pub fn attack_auto(spec: &PieceSpec, i: usize) -> Result<Arc<RelationHandle>, AutomataError> {
    RelationCache::global().attack(spec, i)
}

pub fn in_check_auto(spec: &PieceSpec, c: Color) -> Result<Arc<RelationHandle>, AutomataError> {
    RelationCache::global().in_check(spec, c)
}

pub fn one_move_piece_auto(spec: &PieceSpec, i: usize) -> Result<Arc<RelationHandle>, AutomataError> {
    RelationCache::global().one_move_piece(spec, i, false)
}

pub fn one_move_auto(spec: &PieceSpec) -> Result<Arc<RelationHandle>, AutomataError> {
    RelationCache::global().one_move(spec, false)
}

#[cfg(test)]
mod tests;
