use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use rustc_hash::{FxHashMap, FxHashSet};

use super::bdd::{self, Arena, Node, NodeId};
use super::word::{decode_row_loose, PaddedTuple, Symbol, TapeKind};
use super::AutomataError;

/// Which words a tape may carry.
///
/// `Canonical` tapes hold exactly the canonical encodings followed by padding. `Loose`
/// integer tapes hold a sign followed by any mix of digits and padding (padding reads
/// as a zero digit); loose bit tapes hold one bit followed by padding. Canonical words
/// are loose words, so a representation-invariant loose relation restricted to
/// canonical tuples is the same relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Repr {
    Canonical,
    Loose,
}

/// Resource ceilings for automaton construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            max_nodes: 60_000_000,
        }
    }
}

impl Limits {
    fn check(&self, states: usize, nodes: usize) -> Result<(), AutomataError> {
        if states > self.max_states {
            return Err(AutomataError::StateBudget {
                limit: self.max_states,
            });
        }
        if nodes > self.max_nodes {
            return Err(AutomataError::NodeBudget {
                limit: self.max_nodes,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    AndNot,
    Xor,
}

impl BoolOp {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BoolOp::And => a && b,
            BoolOp::Or => a || b,
            BoolOp::AndNot => a && !b,
            BoolOp::Xor => a != b,
        }
    }

    // whether a pair of states with these liveness flags can still reach acceptance
    fn could_accept(self, live_a: bool, live_b: bool) -> bool {
        match self {
            BoolOp::And => live_a && live_b,
            BoolOp::Or | BoolOp::Xor => live_a || live_b,
            BoolOp::AndNot => live_a,
        }
    }
}

/// Deterministic synchronous multi-tape automaton.
///
/// Each state's transition function is a decision diagram over the bits of one column;
/// state 0 is initial. All languages built here are closed under appending an
/// all-padding column.
#[derive(Debug, Clone)]
pub struct SyncAutomaton {
    tapes: Vec<TapeKind>,
    repr: Repr,
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
    accepting: Vec<bool>,
}

impl SyncAutomaton {
    pub(crate) fn from_parts(
        tapes: Vec<TapeKind>,
        repr: Repr,
        arena: Arena,
        roots: Vec<NodeId>,
        accepting: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(roots.len(), accepting.len());
        debug_assert!(!roots.is_empty());
        SyncAutomaton {
            tapes,
            repr,
            nodes: arena.into_nodes(),
            roots,
            accepting,
        }
    }

    /// The language containing no tuple.
    pub fn empty(tapes: Vec<TapeKind>, repr: Repr) -> Self {
        Self::from_parts(tapes, repr, Arena::new(), vec![NodeId::leaf(0)], vec![false])
    }

    pub fn arity(&self) -> usize {
        self.tapes.len()
    }

    pub fn tapes(&self) -> &[TapeKind] {
        &self.tapes
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn state_count(&self) -> usize {
        self.roots.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_accepting(&self, s: u32) -> bool {
        self.accepting[s as usize]
    }

    pub(crate) fn with_repr(mut self, repr: Repr) -> Self {
        self.repr = repr;
        self
    }

    pub fn step(&self, s: u32, codes: &[u8]) -> u32 {
        bdd::eval(&self.nodes, self.roots[s as usize], codes)
    }

    pub fn successors(&self, s: u32) -> Vec<u32> {
        bdd::leaves(&self.nodes, self.roots[s as usize])
    }

    fn check_tapes(&self, other: &SyncAutomaton) -> Result<(), AutomataError> {
        if self.tapes.len() != other.tapes.len() {
            return Err(AutomataError::ArityMismatch {
                expected: self.tapes.len(),
                found: other.tapes.len(),
            });
        }
        if self.tapes != other.tapes || self.repr != other.repr {
            return Err(AutomataError::Incompatible);
        }
        Ok(())
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
        let mut s = 0;
        for j in 0..t.len() {
            s = self.step(s, &t.column(j));
        }
        Ok(self.accepting[s as usize])
    }

    /// Membership of integer values (bit tapes take 0/1).
    pub fn accepts_values(&self, values: &[BigInt]) -> Result<bool, AutomataError> {
        if values.len() != self.arity() {
            return Err(AutomataError::ArityMismatch {
                expected: self.arity(),
                found: values.len(),
            });
        }
        let typed: Vec<(TapeKind, BigInt)> = self
            .tapes
            .iter()
            .copied()
            .zip(values.iter().cloned())
            .collect();
        self.accepts(&super::word::convolve_typed(&typed)?)
    }

    /// States from which an accepting state is reachable.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.roots.len();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for s in 0..n as u32 {
            for t in self.successors(s) {
                preds[t as usize].push(s);
            }
        }
        let mut live = self.accepting.clone();
        let mut stack: Vec<u32> = (0..n as u32).filter(|&s| live[s as usize]).collect();
        while let Some(s) = stack.pop() {
            for &p in &preds[s as usize] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        live
    }

    fn reachable(&self) -> Vec<u32> {
        let mut seen = vec![false; self.roots.len()];
        let mut order = vec![0u32];
        seen[0] = true;
        let mut i = 0;
        while i < order.len() {
            for t in self.successors(order[i]) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        order
    }

    pub fn is_empty(&self) -> bool {
        !self.reachable().iter().any(|&s| self.accepting[s as usize])
    }

    /// Synchronous product; the result is not minimized.
    pub fn product(
        &self,
        other: &SyncAutomaton,
        op: BoolOp,
        limits: &Limits,
    ) -> Result<SyncAutomaton, AutomataError> {
        self.check_tapes(other)?;
        let mut p = Product {
            a: self,
            b: other,
            op,
            live_a: self.live_states(),
            live_b: other.live_states(),
            arena: Arena::new(),
            ids: FxHashMap::default(),
            pairs: Vec::new(),
            memo: FxHashMap::default(),
            limits,
        };
        p.state(0, 0)?;
        let mut roots = Vec::new();
        let mut i = 0;
        while i < p.pairs.len() {
            let (sa, sb) = p.pairs[i];
            let root = if sa == SINK {
                NodeId::leaf(i as u32)
            } else {
                p.apply(self.roots[sa as usize], other.roots[sb as usize])?
            };
            roots.push(root);
            i += 1;
        }
        let accepting = p
            .pairs
            .iter()
            .map(|&(sa, sb)| {
                sa != SINK && op.eval(self.accepting[sa as usize], other.accepting[sb as usize])
            })
            .collect();
        Ok(SyncAutomaton::from_parts(
            self.tapes.clone(),
            self.repr,
            p.arena,
            roots,
            accepting,
        ))
    }

    pub fn intersect(&self, other: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        Ok(self.product(other, BoolOp::And, &Limits::default())?.minimize())
    }

    pub fn union(&self, other: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        Ok(self.product(other, BoolOp::Or, &Limits::default())?.minimize())
    }

    pub fn difference(&self, other: &SyncAutomaton) -> Result<SyncAutomaton, AutomataError> {
        Ok(self
            .product(other, BoolOp::AndNot, &Limits::default())?
            .minimize())
    }

    /// Complement relative to the well-formed tuples of this automaton's tapes.
    pub fn complement(&self) -> SyncAutomaton {
        let dom = super::relations::format_domain(&self.tapes, self.repr);
        dom.product(self, BoolOp::AndNot, &Limits::default())
            .expect("complement of a deterministic automaton cannot exceed its size bound")
            .minimize()
    }

    pub fn equivalent(&self, other: &SyncAutomaton) -> Result<bool, AutomataError> {
        Ok(self
            .product(other, BoolOp::Xor, &Limits::default())?
            .is_empty())
    }

    /// Language inclusion `self ⊆ other`.
    pub fn is_subset_of(&self, other: &SyncAutomaton) -> Result<bool, AutomataError> {
        Ok(self
            .product(other, BoolOp::AndNot, &Limits::default())?
            .is_empty())
    }

    /// Minimal equivalent automaton (Moore partition refinement over reachable states).
    pub fn minimize(&self) -> SyncAutomaton {
        let order = self.reachable();
        let mut compact = vec![u32::MAX; self.roots.len()];
        for (i, &s) in order.iter().enumerate() {
            compact[s as usize] = i as u32;
        }
        let n = order.len();
        let mut class: Vec<u32> = {
            let mut ids = FxHashMap::default();
            order
                .iter()
                .map(|&s| {
                    let k = ids.len() as u32;
                    *ids.entry(self.accepting[s as usize]).or_insert(k)
                })
                .collect()
        };
        let mut count = class.iter().copied().max().map_or(0, |m| m + 1) as usize;
        loop {
            let mut arena = Arena::new();
            let mut memo = vec![None; self.nodes.len()];
            let mut ids: FxHashMap<(u32, NodeId), u32> = FxHashMap::default();
            let next: Vec<u32> = order
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let sig = relabel(&self.nodes, self.roots[s as usize], &mut arena, &mut memo, &|t| {
                        class[compact[t as usize] as usize]
                    });
                    let k = ids.len() as u32;
                    *ids.entry((class[i], sig)).or_insert(k)
                })
                .collect();
            let new_count = ids.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut rep = vec![usize::MAX; count];
        for i in 0..n {
            if rep[class[i] as usize] == usize::MAX {
                rep[class[i] as usize] = i;
            }
        }
        // BFS over classes for a deterministic numbering
        let mut perm = vec![u32::MAX; count];
        let mut queue = VecDeque::new();
        perm[class[0] as usize] = 0;
        queue.push_back(class[0]);
        let mut next_id = 1u32;
        let mut bfs = Vec::with_capacity(count);
        while let Some(c) = queue.pop_front() {
            bfs.push(c);
            let s = order[rep[c as usize]];
            for t in self.successors(s) {
                let ct = class[compact[t as usize] as usize];
                if perm[ct as usize] == u32::MAX {
                    perm[ct as usize] = next_id;
                    next_id += 1;
                    queue.push_back(ct);
                }
            }
        }
        let mut arena = Arena::new();
        let mut memo = vec![None; self.nodes.len()];
        let mut roots = Vec::with_capacity(count);
        let mut accepting = Vec::with_capacity(count);
        for &c in &bfs {
            let s = order[rep[c as usize]];
            roots.push(relabel(
                &self.nodes,
                self.roots[s as usize],
                &mut arena,
                &mut memo,
                &|t| perm[class[compact[t as usize] as usize] as usize],
            ));
            accepting.push(self.accepting[s as usize]);
        }
        SyncAutomaton::from_parts(self.tapes.clone(), self.repr, arena, roots, accepting)
    }

    /// Renames tapes along a strictly increasing map into a wider tape list. New tapes
    /// are unconstrained, so the result is generally not well-formed on its own.
    pub(crate) fn remap(&self, tapes: Vec<TapeKind>, map: &[usize]) -> SyncAutomaton {
        debug_assert_eq!(map.len(), self.arity());
        debug_assert!(map.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(map.iter().zip(&self.tapes).all(|(&m, &k)| tapes[m] == k));
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                var: 3 * map[(n.var / 3) as usize] as u32 + n.var % 3,
                ..*n
            })
            .collect();
        SyncAutomaton {
            tapes,
            repr: self.repr,
            nodes,
            roots: self.roots.clone(),
            accepting: self.accepting.clone(),
        }
    }

    /// Inserts an unconstrained tape at position `at`.
    pub fn cylindrify(&self, at: usize, kind: TapeKind) -> Result<SyncAutomaton, AutomataError> {
        if at > self.arity() {
            return Err(AutomataError::TapeOutOfRange {
                tape: at,
                arity: self.arity(),
            });
        }
        let mut tapes = self.tapes.clone();
        tapes.insert(at, kind);
        let map: Vec<usize> = (0..self.arity()).map(|t| t + usize::from(t >= at)).collect();
        let wide = self.remap(tapes.clone(), &map);
        let dom = super::relations::format_domain(&tapes, self.repr);
        Ok(dom.product(&wide, BoolOp::And, &Limits::default())?.minimize())
    }

    /// Existential projection erasing one tape.
    pub fn project(&self, tape: usize) -> Result<SyncAutomaton, AutomataError> {
        self.project_many(&[tape], &Limits::default())
    }

    /// Existential projection erasing several tapes at once.
    pub fn project_many(
        &self,
        erase: &[usize],
        limits: &Limits,
    ) -> Result<SyncAutomaton, AutomataError> {
        let mut removed = vec![false; self.arity()];
        for &t in erase {
            if t >= self.arity() {
                return Err(AutomataError::TapeOutOfRange {
                    tape: t,
                    arity: self.arity(),
                });
            }
            removed[t] = true;
        }
        let mut new_index = vec![usize::MAX; self.arity()];
        let mut tapes = Vec::new();
        for (t, &k) in self.tapes.iter().enumerate() {
            if !removed[t] {
                new_index[t] = tapes.len();
                tapes.push(k);
            }
        }
        let live = self.live_states();
        let mut sub = Subset {
            src: self,
            removed: &removed,
            new_index: &new_index,
            live: &live,
            arena: Arena::new(),
            ids: FxHashMap::default(),
            sets: Vec::new(),
            memo: FxHashMap::default(),
            limits,
        };
        let init = if live[0] { vec![0] } else { vec![] };
        sub.state(init)?;
        let mut roots = Vec::new();
        let mut i = 0;
        while i < sub.sets.len() {
            let set: Vec<NodeId> = {
                let mut v: Vec<NodeId> = sub.sets[i]
                    .iter()
                    .map(|&s| self.roots[s as usize])
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            roots.push(sub.rec(set)?);
            i += 1;
        }
        let mut accepting: Vec<bool> = sub
            .sets
            .iter()
            .map(|set| set.iter().any(|&s| self.accepting[s as usize]))
            .collect();
        let pad = vec![bdd::SYM_PAD; tapes.len()];
        let arena = sub.arena;
        // close under trailing padding on the remaining tapes
        let pad_succ: Vec<u32> = roots
            .iter()
            .map(|&r| bdd::eval(&arena.nodes, r, &pad))
            .collect();
        loop {
            let mut changed = false;
            for s in 0..roots.len() {
                if !accepting[s] && accepting[pad_succ[s] as usize] {
                    accepting[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(SyncAutomaton::from_parts(tapes, self.repr, arena, roots, accepting).minimize())
    }

    /// Shortest accepted tuple, least in column-lexicographic order among those.
    pub fn witness_tuple(&self) -> Option<PaddedTuple> {
        let n = self.roots.len();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for s in 0..n as u32 {
            for t in self.successors(s) {
                preds[t as usize].push(s);
            }
        }
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            if self.accepting[s] {
                dist[s] = 0;
                queue.push_back(s as u32);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s as usize] {
                if dist[p as usize] == u32::MAX {
                    dist[p as usize] = dist[s as usize] + 1;
                    queue.push_back(p);
                }
            }
        }
        if dist[0] == u32::MAX || dist[0] == 0 {
            // a zero-length word is not a tuple; the initial state never accepts in
            // automata built here
            return if dist[0] == 0 { self.first_column_witness(&dist) } else { None };
        }
        let mut rows = vec![Vec::new(); self.arity()];
        let mut cur = 0u32;
        while dist[cur as usize] > 0 {
            let want = dist[cur as usize] - 1;
            let (codes, next) = self.lex_min_step(cur, |t| dist[t as usize] == want)?;
            for (row, c) in rows.iter_mut().zip(codes) {
                row.push(Symbol::from_code(c).unwrap_or(Symbol::Pad));
            }
            cur = next;
        }
        Some(PaddedTuple { rows })
    }

    fn first_column_witness(&self, dist: &[u32]) -> Option<PaddedTuple> {
        let (codes, _) = self.lex_min_step(0, |t| dist[t as usize] == 0)?;
        Some(PaddedTuple {
            rows: codes
                .into_iter()
                .map(|c| vec![Symbol::from_code(c).unwrap_or(Symbol::Pad)])
                .collect(),
        })
    }

    /// Lex-least column leading from `s` to a state satisfying `ok`.
    fn lex_min_step(&self, s: u32, ok: impl Fn(u32) -> bool) -> Option<(Vec<u8>, u32)> {
        let mut bits = vec![false; 3 * self.arity()];
        let mut dead = FxHashSet::default();
        let target = self.dfs_lex(self.roots[s as usize], &ok, &mut bits, &mut dead)?;
        let codes = (0..self.arity())
            .map(|t| (u8::from(bits[3 * t]) << 2) | (u8::from(bits[3 * t + 1]) << 1) | u8::from(bits[3 * t + 2]))
            .collect();
        Some((codes, target))
    }

    fn dfs_lex(
        &self,
        id: NodeId,
        ok: &impl Fn(u32) -> bool,
        bits: &mut [bool],
        dead: &mut FxHashSet<NodeId>,
    ) -> Option<u32> {
        if id.is_leaf() {
            return ok(id.state()).then_some(id.state());
        }
        if dead.contains(&id) {
            return None;
        }
        let n = self.nodes[id.index()];
        bits[n.var as usize] = false;
        if let Some(t) = self.dfs_lex(n.lo, ok, bits, dead) {
            return Some(t);
        }
        bits[n.var as usize] = true;
        if let Some(t) = self.dfs_lex(n.hi, ok, bits, dead) {
            return Some(t);
        }
        bits[n.var as usize] = false;
        dead.insert(id);
        None
    }

    /// Decoded shortest witness, one integer per tape.
    pub fn witness(&self) -> Option<Vec<BigInt>> {
        let t = self.witness_tuple()?;
        Some(
            t.rows
                .iter()
                .zip(&self.tapes)
                .map(|(r, &k)| decode_row_loose(r, k))
                .collect(),
        )
    }

    /// Line-based debug dump: header, accepting set, then one edge per diagram path.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kinds: Vec<&str> = self
            .tapes
            .iter()
            .map(|k| match k {
                TapeKind::Int => "int",
                TapeKind::Bit => "bit",
            })
            .collect();
        let _ = writeln!(out, "tapes {}", kinds.join(","));
        let _ = writeln!(
            out,
            "repr {}",
            match self.repr {
                Repr::Canonical => "canonical",
                Repr::Loose => "loose",
            }
        );
        let _ = writeln!(out, "states {}", self.roots.len());
        let _ = writeln!(out, "initial 0");
        let acc: Vec<String> = (0..self.roots.len())
            .filter(|&s| self.accepting[s])
            .map(|s| s.to_string())
            .collect();
        let _ = writeln!(out, "accepting {}", acc.join(" "));
        for s in 0..self.roots.len() {
            let mut constraint = vec![None; 3 * self.arity()];
            self.dump_paths(s, self.roots[s], &mut constraint, &mut out);
        }
        out
    }

    fn dump_paths(&self, s: usize, id: NodeId, c: &mut [Option<bool>], out: &mut String) {
        if !id.is_leaf() {
            let n = self.nodes[id.index()];
            c[n.var as usize] = Some(false);
            self.dump_paths(s, n.lo, c, out);
            c[n.var as usize] = Some(true);
            self.dump_paths(s, n.hi, c, out);
            c[n.var as usize] = None;
            return;
        }
        let mut label = Vec::new();
        for t in 0..self.arity() {
            let allowed: String = Symbol::ALL
                .iter()
                .filter(|sym| {
                    (0..3).all(|b| {
                        c[3 * t + b].is_none_or(|v| v == ((sym.code() >> (2 - b)) & 1 == 1))
                    })
                })
                .map(|sym| sym.as_char())
                .collect();
            if allowed.is_empty() {
                return;
            }
            if allowed.chars().count() < Symbol::ALL.len() {
                label.push(format!("t{t}:{allowed}"));
            }
        }
        let _ = writeln!(out, "{s} -> {} [{}]", id.state(), label.join(" "));
    }
}

/// Structural equality. Minimized automata are canonical, so for them this is language
/// equality.
impl PartialEq for SyncAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.tapes == other.tapes
            && self.repr == other.repr
            && self.accepting == other.accepting
            && self.roots == other.roots
            && self.nodes == other.nodes
    }
}

impl Eq for SyncAutomaton {}

impl SyncAutomaton {
    /// Hash of the structure, consistent with `==`.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = rustc_hash::FxHasher::default();
        self.tapes.hash(&mut h);
        self.repr.hash(&mut h);
        self.accepting.hash(&mut h);
        self.roots.hash(&mut h);
        self.nodes.hash(&mut h);
        h.finish()
    }

    /// [`remap`](Self::remap) followed by restriction to well-formed tuples.
    pub(crate) fn lift(
        &self,
        tapes: Vec<TapeKind>,
        map: &[usize],
        limits: &Limits,
    ) -> Result<SyncAutomaton, AutomataError> {
        let wide = self.remap(tapes.clone(), map);
        let dom = super::relations::format_domain(&tapes, self.repr);
        Ok(dom.product(&wide, BoolOp::And, limits)?.minimize())
    }

    /// Whether the language is empty, for automata that are already minimal.
    pub(crate) fn is_minimal_empty(&self) -> bool {
        self.roots.len() == 1 && !self.accepting[0]
    }

    /// Tapes that carry the same value in every accepted tuple (false for all tapes of
    /// an empty language).
    ///
    /// The value of a tape is determined by the last code bit of its column symbols
    /// (sign first, then digits, padding reading as zero), so a tape is fixed when at
    /// every column depth all live transitions agree on that bit, and words ending at
    /// that depth agree with a zero bit. A zero written with a minus sign counts as a
    /// different value; the answer is then conservative.
    pub(crate) fn fixed_tapes(&self) -> Vec<bool> {
        let arity = self.arity();
        let live = self.live_states();
        if !live[0] {
            return vec![false; arity];
        }
        let mut memo: FxHashMap<NodeId, Option<Vec<u8>>> = FxHashMap::default();
        let mut state_masks: FxHashMap<u32, Vec<u8>> = FxHashMap::default();
        let mut fixed = vec![true; arity];
        let mut seen: FxHashSet<Vec<u32>> = FxHashSet::default();
        let mut layer = vec![0u32];
        while seen.insert(layer.clone()) {
            if seen.len() > 4096 {
                return vec![false; arity];
            }
            let mut masks = vec![0u8; arity];
            if layer.iter().any(|&s| self.accepting[s as usize]) {
                masks.iter_mut().for_each(|m| *m |= 1);
            }
            let mut next = Vec::new();
            for &s in &layer {
                let m = state_masks.entry(s).or_insert_with(|| {
                    let root = self.roots[s as usize];
                    let mut m = lsb_masks(&self.nodes, root, &live, arity, &mut memo)
                        .unwrap_or_else(|| vec![0; arity]);
                    let top = if root.is_leaf() { u32::MAX } else { self.nodes[root.index()].var };
                    for (t, mt) in m.iter_mut().enumerate() {
                        if (3 * t as u32 + 2) < top {
                            *mt = 3;
                        }
                    }
                    m
                });
                for (a, b) in masks.iter_mut().zip(m.iter()) {
                    *a |= b;
                }
                next.extend(self.successors(s).into_iter().filter(|&t| live[t as usize]));
            }
            for (f, m) in fixed.iter_mut().zip(&masks) {
                if *m == 3 {
                    *f = false;
                }
            }
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        fixed
    }
}

/// Per tape, which values (bit 0 → 1, bit 1 → 2) the last code bit takes on the paths
/// from `id` to live terminals; tapes tested above `id` are left at 0.
fn lsb_masks(
    nodes: &[Node],
    id: NodeId,
    live: &[bool],
    arity: usize,
    memo: &mut FxHashMap<NodeId, Option<Vec<u8>>>,
) -> Option<Vec<u8>> {
    if id.is_leaf() {
        return live[id.state() as usize].then(|| vec![0; arity]);
    }
    if let Some(m) = memo.get(&id) {
        return m.clone();
    }
    let n = nodes[id.index()];
    let mut acc: Option<Vec<u8>> = None;
    for (child, bit) in [(n.lo, 1u8), (n.hi, 2u8)] {
        let Some(mut m) = lsb_masks(nodes, child, live, arity, memo) else {
            continue;
        };
        let below = if child.is_leaf() { u32::MAX } else { nodes[child.index()].var };
        for (t, mt) in m.iter_mut().enumerate() {
            let v = 3 * t as u32 + 2;
            if v == n.var {
                *mt = bit;
            } else if v > n.var && v < below {
                *mt = 3;
            }
        }
        match &mut acc {
            None => acc = Some(m),
            Some(a) => a.iter_mut().zip(&m).for_each(|(x, y)| *x |= y),
        }
    }
    memo.insert(id, acc.clone());
    acc
}

const SINK: u32 = u32::MAX;

struct Product<'a> {
    a: &'a SyncAutomaton,
    b: &'a SyncAutomaton,
    op: BoolOp,
    live_a: Vec<bool>,
    live_b: Vec<bool>,
    arena: Arena,
    ids: FxHashMap<(u32, u32), u32>,
    pairs: Vec<(u32, u32)>,
    memo: FxHashMap<(NodeId, NodeId), NodeId>,
    limits: &'a Limits,
}

impl Product<'_> {
    fn state(&mut self, sa: u32, sb: u32) -> Result<u32, AutomataError> {
        let key = if self
            .op
            .could_accept(self.live_a[sa as usize], self.live_b[sb as usize])
        {
            (sa, sb)
        } else {
            (SINK, SINK)
        };
        if let Some(&id) = self.ids.get(&key) {
            return Ok(id);
        }
        let id = self.pairs.len() as u32;
        self.ids.insert(key, id);
        self.pairs.push(key);
        self.limits.check(self.pairs.len(), self.arena.len())?;
        Ok(id)
    }

    fn apply(&mut self, x: NodeId, y: NodeId) -> Result<NodeId, AutomataError> {
        if x.is_leaf() && y.is_leaf() {
            return Ok(NodeId::leaf(self.state(x.state(), y.state())?));
        }
        if let Some(&r) = self.memo.get(&(x, y)) {
            return Ok(r);
        }
        let vx = if x.is_leaf() {
            u32::MAX
        } else {
            self.a.nodes[x.index()].var
        };
        let vy = if y.is_leaf() {
            u32::MAX
        } else {
            self.b.nodes[y.index()].var
        };
        let v = vx.min(vy);
        let (x0, x1) = if vx == v {
            let n = self.a.nodes[x.index()];
            (n.lo, n.hi)
        } else {
            (x, x)
        };
        let (y0, y1) = if vy == v {
            let n = self.b.nodes[y.index()];
            (n.lo, n.hi)
        } else {
            (y, y)
        };
        let lo = self.apply(x0, y0)?;
        let hi = self.apply(x1, y1)?;
        let r = self.arena.mk(v, lo, hi);
        self.limits.check(self.pairs.len(), self.arena.len())?;
        self.memo.insert((x, y), r);
        Ok(r)
    }
}

struct Subset<'a> {
    src: &'a SyncAutomaton,
    removed: &'a [bool],
    new_index: &'a [usize],
    live: &'a [bool],
    arena: Arena,
    ids: FxHashMap<Vec<u32>, u32>,
    sets: Vec<Vec<u32>>,
    memo: FxHashMap<Vec<NodeId>, NodeId>,
    limits: &'a Limits,
}

impl Subset<'_> {
    fn state(&mut self, set: Vec<u32>) -> Result<u32, AutomataError> {
        if let Some(&id) = self.ids.get(&set) {
            return Ok(id);
        }
        let id = self.sets.len() as u32;
        self.ids.insert(set.clone(), id);
        self.sets.push(set);
        self.limits.check(self.sets.len(), self.arena.len())?;
        Ok(id)
    }

    // `set` is sorted and duplicate-free
    fn rec(&mut self, set: Vec<NodeId>) -> Result<NodeId, AutomataError> {
        if let Some(&r) = self.memo.get(&set) {
            return Ok(r);
        }
        let nodes = &self.src.nodes;
        let v = set
            .iter()
            .filter(|id| !id.is_leaf())
            .map(|id| nodes[id.index()].var)
            .min();
        let r = match v {
            None => {
                let mut states: Vec<u32> = set
                    .iter()
                    .map(|id| id.state())
                    .filter(|&s| self.live[s as usize])
                    .collect();
                states.sort_unstable();
                states.dedup();
                NodeId::leaf(self.state(states)?)
            }
            Some(v) => {
                let split = |pick_hi: Option<bool>| -> Vec<NodeId> {
                    let mut out = Vec::with_capacity(set.len() * 2);
                    for &id in &set {
                        if !id.is_leaf() && nodes[id.index()].var == v {
                            let n = nodes[id.index()];
                            match pick_hi {
                                None => {
                                    out.push(n.lo);
                                    out.push(n.hi);
                                }
                                Some(false) => out.push(n.lo),
                                Some(true) => out.push(n.hi),
                            }
                        } else {
                            out.push(id);
                        }
                    }
                    out.sort_unstable();
                    out.dedup();
                    out
                };
                let tape = (v / 3) as usize;
                if self.removed[tape] {
                    let both = split(None);
                    self.rec(both)?
                } else {
                    let lo_set = split(Some(false));
                    let hi_set = split(Some(true));
                    let lo = self.rec(lo_set)?;
                    let hi = self.rec(hi_set)?;
                    let nv = 3 * self.new_index[tape] as u32 + v % 3;
                    self.arena.mk(nv, lo, hi)
                }
            }
        };
        self.limits.check(self.sets.len(), self.arena.len())?;
        self.memo.insert(set, r);
        Ok(r)
    }
}

fn relabel(
    nodes: &[Node],
    id: NodeId,
    arena: &mut Arena,
    memo: &mut [Option<NodeId>],
    f: &impl Fn(u32) -> u32,
) -> NodeId {
    if id.is_leaf() {
        return NodeId::leaf(f(id.state()));
    }
    if let Some(r) = memo[id.index()] {
        return r;
    }
    let n = nodes[id.index()];
    let lo = relabel(nodes, n.lo, arena, memo, f);
    let hi = relabel(nodes, n.hi, arena, memo, f);
    let r = arena.mk(n.var, lo, hi);
    memo[id.index()] = Some(r);
    r
}
