//! Automata for linear constraints `Σ aᵢ·xᵢ ⋈ c` read least-significant digit first.
//!
//! After the sign column the automaton tracks the residual `r` such that the
//! constraint on the still-unread high parts `X'` reads `X' ⋈ r`. Each digit column
//! contributes `D = Σ aᵢ·sᵢ·dᵢ` and the residual becomes `(r − D)/2` (exactly, for
//! equalities; rounded down, for `≤`). Padding reads as a zero digit.

use std::fmt;

use num_bigint::BigInt;
use rustc_hash::FxHashMap;

use super::bdd::{Arena, NodeId, SYM_MINUS, SYM_ONE, SYM_PAD, SYM_PLUS, SYM_ZERO};
use super::dfa::{Limits, Repr, SyncAutomaton};
use super::word::TapeKind;
use super::AutomataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Lt => Rel::Ge,
            Rel::Ge => Rel::Lt,
        }
    }

    pub fn holds<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Rel::Eq => lhs == rhs,
            Rel::Ne => lhs != rhs,
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `Σ coef·tape ⋈ c` over tape indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Linear {
    pub terms: Vec<(usize, i128)>,
    pub rel: Rel,
    pub c: i128,
}

impl Linear {
    /// Merges repeated tapes, drops zero coefficients and sorts by tape.
    pub fn new(terms: impl IntoIterator<Item = (usize, i128)>, rel: Rel, c: i128) -> Self {
        let mut acc: Vec<(usize, i128)> = Vec::new();
        for (t, a) in terms {
            match acc.iter_mut().find(|(u, _)| *u == t) {
                Some(e) => e.1 += a,
                None => acc.push((t, a)),
            }
        }
        acc.retain(|&(_, a)| a != 0);
        acc.sort_unstable();
        Linear { terms: acc, rel, c }
    }

    pub fn negate(&self) -> Linear {
        Linear {
            terms: self.terms.clone(),
            rel: self.rel.negate(),
            c: self.c,
        }
    }

    pub fn eval(&self, values: &[BigInt]) -> bool {
        let lhs: BigInt = self
            .terms
            .iter()
            .map(|&(t, a)| BigInt::from(a) * &values[t])
            .sum();
        self.rel.holds(&lhs, &BigInt::from(self.c))
    }

    pub fn tapes(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|&(t, _)| t)
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        for (i, &(t, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(if a < 0 { " - " } else { " + " })?;
            } else if a < 0 {
                f.write_str("-")?;
            }
            match a.unsigned_abs() {
                1 => write!(f, "t{t}")?,
                m => write!(f, "{m}*t{t}")?,
            }
        }
        write!(f, " {} {}", self.rel.symbol(), self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum St {
    Dead,
    Sat,
    Start,
    Body(u64, i128),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Eq,
    Ne,
    Le,
}

/// Loose automaton over `kinds` for `Σ coeffs[i]·xᵢ ⋈ c`.
pub fn linear_automaton(
    kinds: &[TapeKind],
    coeffs: &[i128],
    rel: Rel,
    c: i128,
    limits: &Limits,
) -> Result<SyncAutomaton, AutomataError> {
    assert_eq!(kinds.len(), coeffs.len());
    assert!(kinds.len() <= 64, "linear atom over more than 64 tapes");
    let overflow = || AutomataError::Malformed("linear constant out of range".into());
    let neg: Vec<i128> = coeffs.iter().map(|a| -a).collect();
    let (kind, coeffs, c): (Kind, &[i128], i128) = match rel {
        Rel::Eq => (Kind::Eq, coeffs, c),
        Rel::Ne => (Kind::Ne, coeffs, c),
        Rel::Le => (Kind::Le, coeffs, c),
        Rel::Lt => (Kind::Le, coeffs, c.checked_sub(1).ok_or_else(overflow)?),
        Rel::Ge => (Kind::Le, &neg, c.checked_neg().ok_or_else(overflow)?),
        Rel::Gt => (
            Kind::Le,
            &neg,
            c.checked_neg()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(overflow)?,
        ),
    };
    let mut b = Builder {
        kinds,
        coeffs,
        kind,
        arena: Arena::new(),
        ids: FxHashMap::default(),
        states: Vec::new(),
        limits,
    };
    b.id(St::Start)?;
    let mut roots = Vec::new();
    let mut i = 0;
    while i < b.states.len() {
        let root = match b.states[i] {
            St::Dead => NodeId::leaf(i as u32),
            St::Sat => b.sat_root(i as u32)?,
            St::Start => {
                let mut memo = FxHashMap::default();
                b.start(0, 0, c, &mut memo)?
            }
            St::Body(mask, r) => {
                let mut memo = FxHashMap::default();
                b.body(0, 0, mask, r, &mut memo)?
            }
        };
        roots.push(root);
        i += 1;
    }
    let accepting = b
        .states
        .iter()
        .map(|st| match (kind, st) {
            (_, St::Dead | St::Start) => false,
            (Kind::Ne, St::Sat) => true,
            (_, St::Sat) => false,
            (Kind::Eq, St::Body(_, r)) => *r == 0,
            (Kind::Ne, St::Body(_, r)) => *r != 0,
            (Kind::Le, St::Body(_, r)) => *r >= 0,
        })
        .collect();
    Ok(SyncAutomaton::from_parts(kinds.to_vec(), Repr::Loose, b.arena, roots, accepting).minimize())
}

struct Builder<'a> {
    kinds: &'a [TapeKind],
    coeffs: &'a [i128],
    kind: Kind,
    arena: Arena,
    ids: FxHashMap<St, u32>,
    states: Vec<St>,
    limits: &'a Limits,
}

const DIGIT: u8 = (1 << SYM_ZERO) | (1 << SYM_PAD);

impl Builder<'_> {
    fn id(&mut self, st: St) -> Result<u32, AutomataError> {
        if let Some(&i) = self.ids.get(&st) {
            return Ok(i);
        }
        let i = self.states.len() as u32;
        self.ids.insert(st, i);
        self.states.push(st);
        if self.states.len() > self.limits.max_states {
            return Err(AutomataError::StateBudget {
                limit: self.limits.max_states,
            });
        }
        Ok(i)
    }

    fn dead(&mut self) -> Result<NodeId, AutomataError> {
        Ok(NodeId::leaf(self.id(St::Dead)?))
    }

    fn sat_root(&mut self, me: u32) -> Result<NodeId, AutomataError> {
        let dead = self.dead()?;
        let mut node = NodeId::leaf(me);
        for k in (0..self.kinds.len()).rev() {
            let allowed = match self.kinds[k] {
                TapeKind::Int => DIGIT | (1 << SYM_ONE),
                TapeKind::Bit => 1 << SYM_PAD,
            };
            node = self.arena.guard(k, allowed, node, dead);
        }
        Ok(node)
    }

    fn start(
        &mut self,
        k: usize,
        mask: u64,
        r: i128,
        memo: &mut FxHashMap<(usize, u64, i128), NodeId>,
    ) -> Result<NodeId, AutomataError> {
        if k == self.kinds.len() {
            return Ok(NodeId::leaf(self.id(St::Body(mask, r))?));
        }
        if let Some(&n) = memo.get(&(k, mask, r)) {
            return Ok(n);
        }
        let dead = self.dead()?;
        let a = self.coeffs[k];
        let mut t = [dead; 8];
        match self.kinds[k] {
            TapeKind::Int => {
                t[SYM_PLUS as usize] = self.start(k + 1, mask, r, memo)?;
                let m = if a != 0 { mask | (1 << k) } else { mask };
                t[SYM_MINUS as usize] = self.start(k + 1, m, r, memo)?;
            }
            TapeKind::Bit => {
                t[SYM_ZERO as usize] = self.start(k + 1, mask, r, memo)?;
                let r1 = r
                    .checked_sub(a)
                    .ok_or_else(|| AutomataError::Malformed("linear overflow".into()))?;
                t[SYM_ONE as usize] = self.start(k + 1, mask, r1, memo)?;
            }
        }
        let n = self.arena.tape_switch(k, &t);
        memo.insert((k, mask, r), n);
        Ok(n)
    }

    fn body(
        &mut self,
        k: usize,
        s: i128,
        mask: u64,
        r: i128,
        memo: &mut FxHashMap<(usize, i128), NodeId>,
    ) -> Result<NodeId, AutomataError> {
        if k == self.kinds.len() {
            let t = r - s;
            let next = match self.kind {
                Kind::Eq if t % 2 != 0 => St::Dead,
                Kind::Ne if t % 2 != 0 => St::Sat,
                Kind::Eq | Kind::Ne => St::Body(mask, t / 2),
                Kind::Le => St::Body(mask, t.div_euclid(2)),
            };
            return Ok(NodeId::leaf(self.id(next)?));
        }
        if let Some(&n) = memo.get(&(k, s)) {
            return Ok(n);
        }
        let dead = self.dead()?;
        let mut t = [dead; 8];
        match self.kinds[k] {
            TapeKind::Int => {
                let zero = self.body(k + 1, s, mask, r, memo)?;
                t[SYM_ZERO as usize] = zero;
                t[SYM_PAD as usize] = zero;
                let eff = if mask & (1 << k) != 0 {
                    -self.coeffs[k]
                } else {
                    self.coeffs[k]
                };
                t[SYM_ONE as usize] = self.body(k + 1, s + eff, mask, r, memo)?;
            }
            TapeKind::Bit => {
                t[SYM_PAD as usize] = self.body(k + 1, s, mask, r, memo)?;
            }
        }
        let n = self.arena.tape_switch(k, &t);
        memo.insert((k, s), n);
        if self.arena.len() > self.limits.max_nodes {
            return Err(AutomataError::NodeBudget {
                limit: self.limits.max_nodes,
            });
        }
        Ok(n)
    }
}
