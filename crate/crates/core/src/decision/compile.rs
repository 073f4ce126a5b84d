use rustc_hash::FxHashMap;

use crate::automata::{
    format_domain, point_loose, BoolOp, Limits, Qf, QfRestrictor, Repr,
    SyncAutomaton, TapeKind,
};
use crate::chess_automata::relations::{color_bit, domain_qf, in_check_qf, one_move_qf};
use crate::chess_automata::{position_domain_qf, Layout, PositionCoding};
use crate::model::{PieceSpec, Position};

use super::formula::{Formula, Var};
use super::DecisionError;

/// Counters describing one compilation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompileStats {
    /// Largest automaton produced for a subformula.
    pub max_states: usize,
    pub subformulas: usize,
    pub cache_hits: usize,
}

type CacheKey = (Formula, usize, u64);

/// Structural compiler from formulas to automata.
///
/// Every subformula is compiled *relative to a context*: an automaton over the
/// positions of the variables in scope that over-approximates the assignments under
/// which the subformula will be consulted. The result is the subformula's language
/// intersected with the context. With the context "all well-formed positions" this is
/// the plain compilation; with a single concrete position it decides that position
/// without building the unrestricted relations.
///
/// Scope slots use the interleaved [`Layout`]; a quantifier appends a slot, and a
/// subformula that mentions only some of the scope is compiled over those slots alone
/// with the context projected onto them.
pub struct Compiler {
    spec: PieceSpec,
    limits: Limits,
    restrictors: FxHashMap<usize, QfRestrictor>,
    cache: FxHashMap<CacheKey, Vec<(SyncAutomaton, SyncAutomaton)>>,
    stats: CompileStats,
}

impl Compiler {
    pub fn new(spec: PieceSpec, limits: Limits) -> Self {
        Compiler {
            spec,
            limits,
            restrictors: FxHashMap::default(),
            cache: FxHashMap::default(),
            stats: CompileStats::default(),
        }
    }

    pub fn spec(&self) -> &PieceSpec {
        &self.spec
    }

    pub fn stats(&self) -> &CompileStats {
        &self.stats
    }

    pub fn layout(&self, slots: usize) -> Layout {
        Layout::new(self.spec.len(), slots, 0)
    }

    fn kinds(&self, slots: usize) -> Vec<TapeKind> {
        self.layout(slots).kinds()
    }

    fn restrictor(&mut self, slots: usize) -> &mut QfRestrictor {
        let kinds = self.kinds(slots);
        let limits = self.limits;
        self.restrictors
            .entry(slots)
            .or_insert_with(|| QfRestrictor::new(kinds, limits))
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    /// `ctx` restricted by a quantifier-free formula over the tapes of `slots` slots.
    pub fn restrict_qf(&mut self, slots: usize, f: &Qf, ctx: &SyncAutomaton) -> Result<SyncAutomaton, DecisionError> {
        Ok(self.restrictor(slots).restrict(f, ctx)?)
    }

    /// Well-formed positions in every one of `slots` slots (loose).
    pub fn domain(&mut self, slots: usize) -> Result<SyncAutomaton, DecisionError> {
        let l = self.layout(slots);
        let fmt = format_domain(&l.kinds(), Repr::Loose);
        self.restrict_qf(slots, &position_domain_qf(&l), &fmt)
    }

    /// The single tuple of the given positions, one per slot.
    pub fn point(&self, positions: &[&Position]) -> Result<SyncAutomaton, DecisionError> {
        let coding = PositionCoding::new(self.spec.clone());
        let values = coding.values(positions, &[])?;
        Ok(point_loose(&self.kinds(positions.len()), &values)?)
    }

    /// Plain compilation: the automaton of `f` over its free variables in increasing
    /// order (interleaved layout), restricted to well-formed positions.
    pub fn compile(&mut self, f: &Formula) -> Result<(Vec<Var>, SyncAutomaton), DecisionError> {
        let mut free: Vec<Var> = f.free_vars().into_iter().collect();
        if free.is_empty() {
            // a sentence: evaluate it under a dummy position variable
            free.push(Var(u32::MAX));
        }
        let ctx = self.domain(free.len())?;
        let a = self.compile_in(f, &free, &ctx)?;
        Ok((free, a))
    }

    /// The language of `f` intersected with `ctx`, over the slots of `scope`.
    pub fn compile_in(
        &mut self,
        f: &Formula,
        scope: &[Var],
        ctx: &SyncAutomaton,
    ) -> Result<SyncAutomaton, DecisionError> {
        if ctx.is_minimal_empty() {
            return Ok(ctx.clone());
        }
        let free = f.free_vars();
        if let Some(v) = free.iter().find(|v| !scope.contains(v)) {
            return Err(DecisionError::Scope(format!("variable {v} is not bound")));
        }
        let k = scope.len();
        let needed: Vec<usize> = (0..k).filter(|&s| free.contains(&scope[s])).collect();
        if !needed.is_empty() && needed.len() < k {
            let l = self.layout(k);
            let erase: Vec<usize> = (0..k)
                .filter(|s| !needed.contains(s))
                .flat_map(|s| l.slot_tapes(s))
                .collect();
            let small_ctx = ctx.project_many(&erase, &self.limits)?;
            let small_scope: Vec<Var> = needed.iter().map(|&s| scope[s]).collect();
            let r = self.compile_in(f, &small_scope, &small_ctx)?;
            let small = self.layout(needed.len());
            let mut map = vec![0; small.tape_count()];
            for field in 0..l.fields() {
                for (i, &s) in needed.iter().enumerate() {
                    map[small.tape(i, field)] = l.tape(s, field);
                }
            }
            let lifted = r.lift(l.kinds(), &map, &self.limits)?;
            return self.and(ctx, &lifted);
        }

        let key = (
            f.normalized(
                &|v| Var(scope.iter().position(|&s| s == v).unwrap_or(0) as u32),
                k as u32,
            ),
            k,
            ctx.fingerprint(),
        );
        if let Some(hit) = self
            .cache
            .get(&key)
            .and_then(|v| v.iter().find(|(c, _)| c == ctx))
        {
            self.stats.cache_hits += 1;
            return Ok(hit.1.clone());
        }

        let r = self.build(f, scope, ctx)?;
        self.stats.subformulas += 1;
        self.stats.max_states = self.stats.max_states.max(r.state_count());
        self.cache
            .entry(key)
            .or_default()
            .push((ctx.clone(), r.clone()));
        Ok(r)
    }

    fn and(&self, a: &SyncAutomaton, b: &SyncAutomaton) -> Result<SyncAutomaton, DecisionError> {
        Ok(a.product(b, BoolOp::And, &self.limits)?.minimize())
    }

    fn build(
        &mut self,
        f: &Formula,
        scope: &[Var],
        ctx: &SyncAutomaton,
    ) -> Result<SyncAutomaton, DecisionError> {
        let k = scope.len();
        let l = self.layout(k);
        let slot = |v: &Var| scope.iter().position(|s| s == v).expect("checked in scope");
        match f {
            Formula::True => Ok(ctx.clone()),
            Formula::False => Ok(SyncAutomaton::empty(l.kinds(), Repr::Loose)),
            Formula::ToPlay(c, v) => {
                let qf = Qf::is_const(l.turn(slot(v)), color_bit(*c));
                self.restrict_qf(k, &qf, ctx)
            }
            Formula::InCheck(c, v) => {
                let qf = in_check_qf(&self.spec, &l, slot(v), *c);
                self.restrict_qf(k, &qf, ctx)
            }
            Formula::OneMove(a, b) => {
                let qf = one_move_qf(&self.spec, &l, slot(a), slot(b));
                self.restrict_qf(k, &qf, ctx)
            }
            Formula::PosEq(a, b) => {
                let (sa, sb) = (slot(a), slot(b));
                let qf = Qf::and((0..l.fields()).map(|fi| Qf::eq(l.tape(sa, fi), l.tape(sb, fi))));
                self.restrict_qf(k, &qf, ctx)
            }
            Formula::Not(g) => {
                let r = self.compile_in(g, scope, ctx)?;
                Ok(ctx.product(&r, BoolOp::AndNot, &self.limits)?.minimize())
            }
            Formula::And(parts) => {
                let mut order: Vec<&Formula> = parts.iter().collect();
                order.sort_by_key(|g| (g.quantifier_depth(), g.size()));
                let mut acc = ctx.clone();
                for g in order {
                    acc = self.compile_in(g, scope, &acc)?;
                    if acc.is_minimal_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Formula::Or(parts) => {
                // later disjuncts only need to cover what earlier ones left open
                let mut acc = SyncAutomaton::empty(l.kinds(), Repr::Loose);
                let mut rest = ctx.clone();
                for g in parts {
                    let r = self.compile_in(g, scope, &rest)?;
                    if r.is_minimal_empty() {
                        continue;
                    }
                    acc = acc.product(&r, BoolOp::Or, &self.limits)?.minimize();
                    rest = rest.product(&r, BoolOp::AndNot, &self.limits)?.minimize();
                    if rest.is_minimal_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Formula::Exists(v, g) => self.exists(*v, g, scope, ctx),
            Formula::Forall(v, g) => {
                let neg = Formula::not(Formula::exists(*v, push_not(g)));
                self.compile_in(&neg, scope, ctx)
            }
        }
    }

    fn exists(
        &mut self,
        v: Var,
        g: &Formula,
        scope: &[Var],
        ctx: &SyncAutomaton,
    ) -> Result<SyncAutomaton, DecisionError> {
        if scope.contains(&v) {
            return Err(DecisionError::Scope(format!("variable {v} is bound twice")));
        }
        let k = scope.len();
        let l = self.layout(k);
        let wide_layout = self.layout(k + 1);
        let mut map = vec![0; l.tape_count()];
        for field in 0..l.fields() {
            for s in 0..k {
                map[l.tape(s, field)] = wide_layout.tape(s, field);
            }
        }
        let wide = ctx.lift(wide_layout.kinds(), &map, &self.limits)?;
        let mut scope2 = scope.to_vec();
        scope2.push(v);
        let body = match split_guard(g, v, scope) {
            // successors of well-formed positions are well-formed, so the guard
            // stands in for the domain of `v`
            Some((guard, rest)) => {
                let c2 = self.compile_in(&guard, &scope2, &wide)?;
                self.compile_in(&rest, &scope2, &c2)?
            }
            None => {
                let c2 = self.restrict_qf(k + 1, &domain_qf(&wide_layout, k), &wide)?;
                self.compile_in(g, &scope2, &c2)?
            }
        };
        Ok(body.project_many(&wide_layout.slot_tapes(k), &self.limits)?)
    }
}

/// Whether `f` forces `v` to be a well-formed position given that the variables in
/// scope are: `v` is a successor of, or equal to, a scope variable on every branch.
fn bounds(f: &Formula, v: Var, scope: &[Var]) -> bool {
    match f {
        Formula::OneMove(u, w) => *w == v && scope.contains(u),
        Formula::PosEq(a, b) => (*a == v && scope.contains(b)) || (*b == v && scope.contains(a)),
        Formula::And(parts) => parts.iter().any(|g| bounds(g, v, scope)),
        Formula::Or(parts) => parts.iter().all(|g| bounds(g, v, scope)),
        _ => false,
    }
}

/// A conjunct of `g` that bounds `v`, and the remaining conjuncts.
fn split_guard(g: &Formula, v: Var, scope: &[Var]) -> Option<(Formula, Formula)> {
    match g {
        Formula::And(parts) => {
            let i = parts.iter().position(|g| bounds(g, v, scope))?;
            let rest = Formula::and(
                parts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, f)| f.clone()),
            );
            Some((parts[i].clone(), rest))
        }
        f if bounds(f, v, scope) => Some((f.clone(), Formula::True)),
        _ => None,
    }
}

/// Negation pushed through one level of disjunction, so that `∀v (G → φ)` becomes
/// `¬∃v (G ∧ ¬φ)` with the guard exposed.
fn push_not(g: &Formula) -> Formula {
    match g {
        Formula::Or(parts) => Formula::and(parts.iter().map(|p| Formula::not(p.clone()))),
        other => Formula::not(other.clone()),
    }
}
