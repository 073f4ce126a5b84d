//! Quantifier-free linear formulas over tapes and their compilation.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rustc_hash::FxHashMap;

use super::dfa::{BoolOp, Limits, Repr, SyncAutomaton};
use super::linear::{linear_automaton, Linear, Rel};
use super::relations::format_domain;
use super::word::{PaddedTuple, TapeKind};
use super::AutomataError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Qf {
    True,
    False,
    Atom(Linear),
    And(Vec<Qf>),
    Or(Vec<Qf>),
    Not(Box<Qf>),
}

impl Qf {
    pub fn atom(terms: impl IntoIterator<Item = (usize, i128)>, rel: Rel, c: i128) -> Qf {
        Qf::Atom(Linear::new(terms, rel, c))
    }

    /// `a = b + d`.
    pub fn eq_off(a: usize, b: usize, d: i128) -> Qf {
        Qf::atom([(a, 1), (b, -1)], Rel::Eq, d)
    }

    pub fn eq(a: usize, b: usize) -> Qf {
        Qf::eq_off(a, b, 0)
    }

    pub fn is_const(a: usize, c: i128) -> Qf {
        Qf::atom([(a, 1)], Rel::Eq, c)
    }

    /// `a < b`.
    pub fn lt(a: usize, b: usize) -> Qf {
        Qf::atom([(a, 1), (b, -1)], Rel::Lt, 0)
    }

    pub fn and(parts: impl IntoIterator<Item = Qf>) -> Qf {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Qf::True => {}
                Qf::False => return Qf::False,
                Qf::And(inner) => v.extend(inner),
                other => v.push(other),
            }
        }
        match v.len() {
            0 => Qf::True,
            1 => v.pop().unwrap(),
            _ => Qf::And(v),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Qf>) -> Qf {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Qf::False => {}
                Qf::True => return Qf::True,
                Qf::Or(inner) => v.extend(inner),
                other => v.push(other),
            }
        }
        match v.len() {
            0 => Qf::False,
            1 => v.pop().unwrap(),
            _ => Qf::Or(v),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Qf) -> Qf {
        match f {
            Qf::True => Qf::False,
            Qf::False => Qf::True,
            Qf::Not(inner) => *inner,
            other => Qf::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Qf, b: Qf) -> Qf {
        Qf::or([Qf::not(a), b])
    }

    pub fn eval(&self, values: &[BigInt]) -> bool {
        match self {
            Qf::True => true,
            Qf::False => false,
            Qf::Atom(l) => l.eval(values),
            Qf::And(v) => v.iter().all(|f| f.eval(values)),
            Qf::Or(v) => v.iter().any(|f| f.eval(values)),
            Qf::Not(f) => !f.eval(values),
        }
    }

    /// Negation normal form: negations pushed into the atoms.
    pub fn nnf(&self) -> Qf {
        self.nnf_signed(false)
    }

    fn nnf_signed(&self, neg: bool) -> Qf {
        match (self, neg) {
            (Qf::True, false) | (Qf::False, true) => Qf::True,
            (Qf::True, true) | (Qf::False, false) => Qf::False,
            (Qf::Atom(l), false) => Qf::Atom(l.clone()),
            (Qf::Atom(l), true) => Qf::Atom(l.negate()),
            (Qf::Not(f), _) => f.nnf_signed(!neg),
            (Qf::And(v), false) | (Qf::Or(v), true) => {
                Qf::and(v.iter().map(|f| f.nnf_signed(neg)))
            }
            (Qf::Or(v), false) | (Qf::And(v), true) => {
                Qf::or(v.iter().map(|f| f.nnf_signed(neg)))
            }
        }
    }

    /// Replaces the tapes with known values by those values and simplifies.
    pub fn substitute(&self, fixed: &[Option<i128>]) -> Qf {
        match self {
            Qf::True | Qf::False => self.clone(),
            Qf::Atom(l) => {
                let mut c = Some(l.c);
                let mut rest = Vec::new();
                for &(t, a) in &l.terms {
                    match fixed.get(t).copied().flatten() {
                        Some(v) => c = c.and_then(|c| c.checked_sub(a.checked_mul(v)?)),
                        None => rest.push((t, a)),
                    }
                }
                match c {
                    None => self.clone(),
                    Some(c) if rest.is_empty() => {
                        if l.rel.holds(&0, &c) {
                            Qf::True
                        } else {
                            Qf::False
                        }
                    }
                    Some(c) => Qf::Atom(Linear::new(rest, l.rel, c)),
                }
            }
            Qf::And(v) => Qf::and(v.iter().map(|f| f.substitute(fixed))),
            Qf::Or(v) => Qf::or(v.iter().map(|f| f.substitute(fixed))),
            Qf::Not(f) => Qf::not(f.substitute(fixed)),
        }
    }

    /// The tapes mentioned, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_support(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_support(&self, out: &mut Vec<usize>) {
        match self {
            Qf::True | Qf::False => {}
            Qf::Atom(l) => out.extend(l.tapes()),
            Qf::And(v) | Qf::Or(v) => v.iter().for_each(|f| f.collect_support(out)),
            Qf::Not(f) => f.collect_support(out),
        }
    }

    /// Renames tape `t` to `index[t]`.
    pub fn rename(&self, index: &[usize]) -> Qf {
        match self {
            Qf::True | Qf::False => self.clone(),
            Qf::Atom(l) => Qf::Atom(Linear::new(
                l.terms.iter().map(|&(t, a)| (index[t], a)),
                l.rel,
                l.c,
            )),
            Qf::And(v) => Qf::And(v.iter().map(|f| f.rename(index)).collect()),
            Qf::Or(v) => Qf::Or(v.iter().map(|f| f.rename(index)).collect()),
            Qf::Not(f) => Qf::Not(Box::new(f.rename(index))),
        }
    }

    fn collect_tapes(&self, out: &mut Vec<bool>) {
        match self {
            Qf::True | Qf::False => {}
            Qf::Atom(l) => l.tapes().for_each(|t| out[t] = true),
            Qf::And(v) | Qf::Or(v) => v.iter().for_each(|f| f.collect_tapes(out)),
            Qf::Not(f) => f.collect_tapes(out),
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Qf::True | Qf::False => 0,
            Qf::Atom(_) => 1,
            Qf::And(v) | Qf::Or(v) => v.iter().map(Qf::atom_count).sum(),
            Qf::Not(f) => f.atom_count(),
        }
    }
}

/// Compiles `f` to a loose, well-formed automaton over `tapes`.
pub fn compile_qf(
    tapes: &[TapeKind],
    f: &Qf,
    limits: &Limits,
) -> Result<SyncAutomaton, AutomataError> {
    let mut c = QfCompiler {
        tapes,
        limits,
        atoms: FxHashMap::default(),
        domain: format_domain(tapes, Repr::Loose),
    };
    c.build(&f.nnf())
}

struct QfCompiler<'a> {
    tapes: &'a [TapeKind],
    limits: &'a Limits,
    atoms: FxHashMap<Linear, SyncAutomaton>,
    domain: SyncAutomaton,
}

impl QfCompiler<'_> {
    fn build(&mut self, f: &Qf) -> Result<SyncAutomaton, AutomataError> {
        match f {
            Qf::True => Ok(self.domain.clone()),
            Qf::False => Ok(SyncAutomaton::empty(self.tapes.to_vec(), Repr::Loose)),
            Qf::Atom(l) => self.atom(l),
            Qf::Not(_) => unreachable!("input is in negation normal form"),
            Qf::And(parts) => self.fold(parts, BoolOp::And),
            Qf::Or(parts) => self.fold(parts, BoolOp::Or),
        }
    }

    fn fold(&mut self, parts: &[Qf], op: BoolOp) -> Result<SyncAutomaton, AutomataError> {
        let mut built = parts
            .iter()
            .map(|p| self.build(p))
            .collect::<Result<Vec<_>, _>>()?;
        built.sort_by_key(|a| a.state_count());
        let mut it = built.into_iter();
        let mut acc = it.next().expect("connectives have at least two operands");
        for next in it {
            acc = acc.product(&next, op, self.limits)?.minimize();
            if op == BoolOp::And && acc.state_count() == 1 && !acc.is_accepting(0) {
                break;
            }
        }
        Ok(acc)
    }

    fn atom(&mut self, l: &Linear) -> Result<SyncAutomaton, AutomataError> {
        if let Some(a) = self.atoms.get(l) {
            return Ok(a.clone());
        }
        let a = if l.terms.is_empty() {
            if l.rel.holds(&0, &l.c) {
                self.domain.clone()
            } else {
                SyncAutomaton::empty(self.tapes.to_vec(), Repr::Loose)
            }
        } else {
            let map: Vec<usize> = l.tapes().collect();
            let kinds: Vec<TapeKind> = map.iter().map(|&t| self.tapes[t]).collect();
            let coeffs: Vec<i128> = l.terms.iter().map(|&(_, a)| a).collect();
            // keeping every intermediate language inside the format domain stops
            // disjunctions from tracking which operands still see well-formed tapes
            let local = linear_automaton(&kinds, &coeffs, l.rel, l.c, self.limits)?
                .remap(self.tapes.to_vec(), &map);
            self.domain
                .product(&local, BoolOp::And, self.limits)?
                .minimize()
        };
        self.atoms.insert(l.clone(), a.clone());
        Ok(a)
    }
}

fn local_atom(
    tapes: &[TapeKind],
    l: &Linear,
    limits: &Limits,
) -> Result<(Vec<usize>, SyncAutomaton), AutomataError> {
    let map: Vec<usize> = l.tapes().collect();
    let kinds: Vec<TapeKind> = map.iter().map(|&t| tapes[t]).collect();
    let coeffs: Vec<i128> = l.terms.iter().map(|&(_, a)| a).collect();
    Ok((map, linear_automaton(&kinds, &coeffs, l.rel, l.c, limits)?))
}

/// Subformulas with at most this many tapes are compiled in isolation.
const LOCAL_TAPES: usize = 6;

/// Compiles formulas intersected with a context language.
///
/// Conjuncts are applied one after another to the running context, so every
/// intermediate automaton stays inside it; when the context is small (a handful of
/// concrete positions and their successors) this avoids building the unrestricted
/// relation at all. Atom automata are cached across calls.
pub struct QfRestrictor {
    tapes: Vec<TapeKind>,
    limits: Limits,
    locals: FxHashMap<Qf, SyncAutomaton>,
}

impl QfRestrictor {
    pub fn new(tapes: Vec<TapeKind>, limits: Limits) -> Self {
        QfRestrictor {
            tapes,
            limits,
            locals: FxHashMap::default(),
        }
    }

    pub fn tapes(&self) -> &[TapeKind] {
        &self.tapes
    }

    fn apply_local(&mut self, f: &Qf, ctx: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        if !self.locals.contains_key(f) {
            let local = self.local(f)?;
            self.locals.insert(f.clone(), local);
        }
        Ok(ctx
            .product(&self.locals[f], BoolOp::And, &self.limits)?
            .minimize())
    }

    /// `f` compiled over its own tapes, then spread over all of them.
    fn local(&self, f: &Qf) -> Result<SyncAutomaton, AutomataError> {
        let support = f.support();
        let kinds: Vec<TapeKind> = support.iter().map(|&t| self.tapes[t]).collect();
        let mut index = vec![usize::MAX; self.tapes.len()];
        for (i, &t) in support.iter().enumerate() {
            index[t] = i;
        }
        let local = compile_qf(&kinds, &f.rename(&index), &self.limits)?;
        Ok(local.remap(self.tapes.clone(), &support))
    }

    /// The language of `f` intersected with `ctx`, a loose well-formed automaton over
    /// the same tapes.
    pub fn restrict(&mut self, f: &Qf, ctx: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        if ctx.tapes() != self.tapes.as_slice() || ctx.repr() != Repr::Loose {
            return Err(AutomataError::Incompatible);
        }
        // tapes the context pins to one value are folded into the formula, which
        // usually decides most atoms outright
        let mut used = vec![false; self.tapes.len()];
        f.collect_tapes(&mut used);
        let mut fixed = vec![None; self.tapes.len()];
        let pinned = ctx.fixed_tapes();
        if pinned.iter().zip(&used).any(|(&p, &u)| p && u) {
            let w = ctx.witness().expect("non-empty when some tape is pinned");
            for t in 0..self.tapes.len() {
                if pinned[t] && used[t] {
                    fixed[t] = w[t].to_i128();
                }
            }
        }
        self.build(&f.substitute(&fixed).nnf(), ctx)
    }

    fn build(&mut self, f: &Qf, ctx: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        if ctx.is_minimal_empty() {
            return Ok(ctx.clone());
        }
        match f {
            Qf::True => Ok(ctx.clone()),
            Qf::False => Ok(SyncAutomaton::empty(self.tapes.clone(), Repr::Loose)),
            Qf::Not(_) => unreachable!("input is in negation normal form"),
            Qf::Atom(l) if l.terms.is_empty() => Ok(if l.rel.holds(&0, &l.c) {
                ctx.clone()
            } else {
                SyncAutomaton::empty(self.tapes.clone(), Repr::Loose)
            }),
            // a subformula over a few tapes is cheaper to compile on its own and
            // intersect once than to apply atom by atom
            Qf::Atom(_) => self.apply_local(f, ctx),
            f if f.support().len() <= LOCAL_TAPES => self.apply_local(f, ctx),
            Qf::And(parts) => {
                // atoms narrow cheaply, so they go first
                let mut order: Vec<&Qf> = parts.iter().collect();
                order.sort_by_key(|p| match p {
                    Qf::Atom(_) => (0, 0),
                    other => (1, other.atom_count()),
                });
                let mut acc = ctx.clone();
                for p in order {
                    acc = self.build(p, &acc)?;
                    if acc.is_minimal_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Qf::Or(parts) => {
                let mut acc: Option<SyncAutomaton> = None;
                for p in parts {
                    let r = self.build(p, ctx)?;
                    acc = Some(match acc {
                        None => r,
                        Some(a) => a.product(&r, BoolOp::Or, &self.limits)?.minimize(),
                    });
                }
                Ok(acc.unwrap_or_else(|| SyncAutomaton::empty(self.tapes.clone(), Repr::Loose)))
            }
        }
    }
}

/// The synchronous product of a formula's atom automata, explored on the fly.
///
/// Every atom automaton reads its own tapes of each column; after the last column the
/// formula is evaluated on the atoms' acceptance. This is the same automaton the
/// product construction would produce, without materializing or minimizing it, and is
/// what membership falls back to when a relation is too large to build explicitly.
#[derive(Debug, Clone)]
pub struct LazyProduct {
    tapes: Vec<TapeKind>,
    formula: Qf,
    atoms: Vec<(Vec<usize>, SyncAutomaton)>,
    index: FxHashMap<Linear, usize>,
    domain: SyncAutomaton,
}

impl LazyProduct {
    pub fn new(tapes: &[TapeKind], f: &Qf, limits: &Limits) -> Result<Self, AutomataError> {
        let formula = f.nnf();
        let mut lp = LazyProduct {
            tapes: tapes.to_vec(),
            formula: Qf::True,
            atoms: Vec::new(),
            index: FxHashMap::default(),
            domain: format_domain(tapes, Repr::Loose),
        };
        lp.collect(&formula, limits)?;
        lp.formula = formula;
        Ok(lp)
    }

    fn collect(&mut self, f: &Qf, limits: &Limits) -> Result<(), AutomataError> {
        match f {
            Qf::True | Qf::False => Ok(()),
            Qf::Atom(l) => {
                if !l.terms.is_empty() && !self.index.contains_key(l) {
                    let atom = local_atom(&self.tapes, l, limits)?;
                    self.index.insert(l.clone(), self.atoms.len());
                    self.atoms.push(atom);
                }
                Ok(())
            }
            Qf::Not(g) => self.collect(g, limits),
            Qf::And(v) | Qf::Or(v) => v.iter().try_for_each(|g| self.collect(g, limits)),
        }
    }

    pub fn arity(&self) -> usize {
        self.tapes.len()
    }

    /// Number of component automata.
    pub fn component_count(&self) -> usize {
        self.atoms.len()
    }

    /// Upper bound on the states of the explicit product.
    pub fn component_states(&self) -> Vec<usize> {
        self.atoms.iter().map(|(_, a)| a.state_count()).collect()
    }

    pub fn accepts(&self, t: &PaddedTuple) -> Result<bool, AutomataError> {
        if t.arity() != self.arity() {
            return Err(AutomataError::ArityMismatch {
                expected: self.arity(),
                found: t.arity(),
            });
        }
        if t.is_empty() || t.rows.iter().any(|r| r.len() != t.len()) {
            return Err(AutomataError::Malformed(
                "rows must be non-empty and of equal length".into(),
            ));
        }
        let mut dom = 0;
        let mut states = vec![0u32; self.atoms.len()];
        let mut local = Vec::new();
        for j in 0..t.len() {
            let col = t.column(j);
            dom = self.domain.step(dom, &col);
            for ((map, a), s) in self.atoms.iter().zip(states.iter_mut()) {
                local.clear();
                local.extend(map.iter().map(|&k| col[k]));
                *s = a.step(*s, &local);
            }
        }
        if !self.domain.is_accepting(dom) {
            return Ok(false);
        }
        Ok(self.eval(&self.formula, &states))
    }

    fn eval(&self, f: &Qf, states: &[u32]) -> bool {
        match f {
            Qf::True => true,
            Qf::False => false,
            Qf::Atom(l) => match self.index.get(l) {
                Some(&i) => self.atoms[i].1.is_accepting(states[i]),
                None => l.rel.holds(&0, &l.c),
            },
            Qf::Not(g) => !self.eval(g, states),
            Qf::And(v) => v.iter().all(|g| self.eval(g, states)),
            Qf::Or(v) => v.iter().any(|g| self.eval(g, states)),
        }
    }
}
