//! Well-formedness domains and the arithmetic base relations.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use super::bdd::{mask, Arena, NodeId, SYM_MINUS, SYM_ONE, SYM_PAD, SYM_PLUS, SYM_ZERO};
use super::dfa::{BoolOp, Limits, Repr, SyncAutomaton};
use super::linear::{linear_automaton, Rel};
use super::word::{encode_int, TapeKind};
use super::AutomataError;

const SIGN: u8 = mask(&[SYM_PLUS, SYM_MINUS]);
const BIT: u8 = mask(&[SYM_ZERO, SYM_ONE]);
const DIGIT_OR_PAD: u8 = mask(&[SYM_ZERO, SYM_ONE, SYM_PAD]);
const ZERO_OR_PAD: u8 = mask(&[SYM_ZERO, SYM_PAD]);
const PAD: u8 = mask(&[SYM_PAD]);

/// All well-formed tuples over `tapes` in the given representation.
pub fn format_domain(tapes: &[TapeKind], repr: Repr) -> SyncAutomaton {
    match repr {
        Repr::Loose => loose_domain(tapes),
        Repr::Canonical => canonical_domain(tapes),
    }
}

fn loose_domain(tapes: &[TapeKind]) -> SyncAutomaton {
    // 0 start, 1 body (accepting), 2 dead
    let mut arena = Arena::new();
    let dead = NodeId::leaf(2);
    let mut start = NodeId::leaf(1);
    let mut body = NodeId::leaf(1);
    for (k, &kind) in tapes.iter().enumerate().rev() {
        let (first, rest) = match kind {
            TapeKind::Int => (SIGN, DIGIT_OR_PAD),
            TapeKind::Bit => (BIT, PAD),
        };
        start = arena.guard(k, first, start, dead);
        body = arena.guard(k, rest, body, dead);
    }
    SyncAutomaton::from_parts(
        tapes.to_vec(),
        Repr::Loose,
        arena,
        vec![start, body, dead],
        vec![false, true, false],
    )
}

// per-tape canonicality checker states
const C_START: u8 = 0;
const C_OK: u8 = 1; // accepting: "+" alone, or last digit 1
const C_OPEN: u8 = 2; // "-" alone, or last digit 0
const C_PADDED: u8 = 3;
const C_BAD: u8 = 4;

fn canon_step(kind: TapeKind, st: u8, code: u8) -> u8 {
    match (kind, st, code) {
        (TapeKind::Int, C_START, SYM_PLUS) => C_OK,
        (TapeKind::Int, C_START, SYM_MINUS) => C_OPEN,
        (TapeKind::Int, C_OK | C_OPEN, SYM_ONE) => C_OK,
        (TapeKind::Int, C_OK | C_OPEN, SYM_ZERO) => C_OPEN,
        (TapeKind::Int, C_OK | C_PADDED, SYM_PAD) => C_PADDED,
        (TapeKind::Bit, C_START, SYM_ZERO | SYM_ONE) => C_PADDED,
        (TapeKind::Bit, C_PADDED, SYM_PAD) => C_PADDED,
        _ => C_BAD,
    }
}

struct Canon<'a> {
    tapes: &'a [TapeKind],
    arena: Arena,
    ids: FxHashMap<Vec<u8>, u32>,
    states: Vec<Vec<u8>>,
}

impl Canon<'_> {
    fn intern(&mut self, key: Vec<u8>) -> u32 {
        if let Some(&i) = self.ids.get(&key) {
            return i;
        }
        let i = self.states.len() as u32;
        self.ids.insert(key.clone(), i);
        self.states.push(key);
        i
    }

    fn build(&mut self, st: &[u8], k: usize, prefix: &mut Vec<u8>, dead: u32) -> NodeId {
        if k == self.tapes.len() {
            return NodeId::leaf(self.intern(prefix.clone()));
        }
        let mut t = [NodeId::leaf(dead); 8];
        let mut cache: FxHashMap<u8, NodeId> = FxHashMap::default();
        for code in [SYM_ZERO, SYM_ONE, SYM_PAD, SYM_PLUS, SYM_MINUS] {
            let next = canon_step(self.tapes[k], st[k], code);
            if next == C_BAD {
                continue;
            }
            t[code as usize] = match cache.get(&next) {
                Some(&n) => n,
                None => {
                    prefix.push(next);
                    let n = self.build(st, k + 1, prefix, dead);
                    prefix.pop();
                    cache.insert(next, n);
                    n
                }
            };
        }
        self.arena.tape_switch(k, &t)
    }
}

fn canonical_domain(tapes: &[TapeKind]) -> SyncAutomaton {
    let mut c = Canon {
        tapes,
        arena: Arena::new(),
        ids: FxHashMap::default(),
        states: Vec::new(),
    };
    let dead_key = vec![C_BAD];
    c.intern(vec![C_START; tapes.len()]);
    let dead = c.intern(dead_key.clone());
    let mut roots = Vec::new();
    let mut i = 0;
    while i < c.states.len() {
        let st = c.states[i].clone();
        let root = if st == dead_key {
            NodeId::leaf(dead)
        } else {
            c.build(&st, 0, &mut Vec::new(), dead)
        };
        roots.push(root);
        i += 1;
    }
    let accepting = c
        .states
        .iter()
        .map(|st| *st != dead_key && st.iter().all(|&s| s == C_OK || s == C_PADDED))
        .collect();
    SyncAutomaton::from_parts(tapes.to_vec(), Repr::Canonical, c.arena, roots, accepting)
        .minimize()
}

fn int_tapes(n: usize) -> Vec<TapeKind> {
    vec![TapeKind::Int; n]
}

/// Restricts a loose, representation-invariant automaton to canonical tuples.
pub fn canonicalize(a: &SyncAutomaton) -> SyncAutomaton {
    let dom = canonical_domain(a.tapes());
    dom.product(&a.clone().with_repr(Repr::Canonical), BoolOp::And, &Limits::default())
        .expect("canonical restriction stays within default limits")
        .minimize()
}

fn linear_canonical(coeffs: &[i128], rel: Rel, c: i128) -> SyncAutomaton {
    let kinds = int_tapes(coeffs.len());
    let a = linear_automaton(&kinds, coeffs, rel, c, &Limits::default())
        .expect("small linear automaton");
    canonicalize(&a)
}

/// `x = y`.
pub fn eq_auto() -> SyncAutomaton {
    linear_canonical(&[1, -1], Rel::Eq, 0)
}

/// `x + y = z`.
pub fn add_auto() -> SyncAutomaton {
    linear_canonical(&[1, 1, -1], Rel::Eq, 0)
}

/// `x < y`.
pub fn lt_auto() -> SyncAutomaton {
    linear_canonical(&[1, -1], Rel::Lt, 0)
}

/// Loose single-tape automaton for the constant `c`, read digit by digit.
pub(crate) fn const_loose(c: &BigInt) -> SyncAutomaton {
    let w = encode_int(c);
    // states: 0 start, 1..=len digit positions, len+1 tail (accepting), len+2 dead
    let len = w.bits.len();
    let tail = (len + 1) as u32;
    let dead = NodeId::leaf(tail + 1);
    let mut arena = Arena::new();
    let mut roots = Vec::with_capacity(len + 3);
    let sign = if c.is_zero() {
        SIGN
    } else if w.negative {
        mask(&[SYM_MINUS])
    } else {
        mask(&[SYM_PLUS])
    };
    roots.push(arena.guard(0, sign, NodeId::leaf(1), dead));
    for (j, &b) in w.bits.iter().enumerate() {
        let allowed = if b { mask(&[SYM_ONE]) } else { ZERO_OR_PAD };
        roots.push(arena.guard(0, allowed, NodeId::leaf(j as u32 + 2), dead));
    }
    roots.push(arena.guard(0, ZERO_OR_PAD, NodeId::leaf(tail), dead));
    roots.push(dead);
    let mut accepting = vec![false; len + 3];
    accepting[len + 1] = true;
    SyncAutomaton::from_parts(int_tapes(1), Repr::Loose, arena, roots, accepting).minimize()
}

/// `x = c`.
pub fn const_auto(c: &BigInt) -> SyncAutomaton {
    canonicalize(&const_loose(c))
}

/// `y = x + d`.
pub fn offset_auto(d: &BigInt) -> SyncAutomaton {
    if let Some(d) = d.to_i128().filter(|v| v.unsigned_abs() < (1u128 << 120)) {
        return linear_canonical(&[-1, 1], Rel::Eq, d);
    }
    // beyond machine range: ∃t (x + t = y ∧ t = d)
    let add = linear_automaton(&int_tapes(3), &[1, 1, -1], Rel::Eq, 0, &Limits::default())
        .expect("small linear automaton");
    let pin = const_loose(d).remap(int_tapes(3), &[1]);
    let joined = add
        .product(&pin, BoolOp::And, &Limits::default())
        .expect("offset product")
        .minimize();
    canonicalize(&joined.project(1).expect("tape 1 exists"))
}

/// Loose automaton accepting exactly the given tuple of values.
pub(crate) fn point_loose(tapes: &[TapeKind], values: &[BigInt]) -> Result<SyncAutomaton, AutomataError> {
    let limits = Limits::default();
    let mut acc = format_domain(tapes, Repr::Loose);
    for (t, (&kind, v)) in tapes.iter().zip(values).enumerate() {
        let single = match kind {
            TapeKind::Int => const_loose(v),
            TapeKind::Bit => {
                let b = v.to_i128().filter(|b| *b == 0 || *b == 1).ok_or_else(|| {
                    AutomataError::Malformed(format!("bit tape {t} holds {v}"))
                })?;
                linear_automaton(&[TapeKind::Bit], &[1], Rel::Eq, b, &limits)?
            }
        };
        acc = acc
            .product(&single.remap(tapes.to_vec(), &[t]), BoolOp::And, &limits)?
            .minimize();
    }
    Ok(acc)
}
