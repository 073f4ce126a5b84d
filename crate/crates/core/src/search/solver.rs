//! Depth-bounded proof-number search (df-pn) over canonical moves.

use rustc_hash::FxHashMap;

use super::board::{Board, BoardMove};
use super::{Goal, SearchConfig};
use crate::model::{Color, PieceType};

pub(crate) const INF: u32 = u32::MAX / 4;

/// Open (unsolved) entries kept before the table is flushed.
const OPEN_CAP: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Proven,
    Disproven,
    Open(u32, u32),
}

#[derive(Debug, Clone, Copy)]
struct Solved {
    /// Smallest depth at which the node is known to be won.
    proven: u16,
    /// Largest depth at which the node is known to be lost, or -1.
    disproven: i32,
}

/// Budget exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct OutOfNodes;

pub(crate) struct Solver<'a> {
    pub cfg: &'a SearchConfig,
    pub attacker: Color,
    pub goal: Goal,
    pub nodes: u64,
    pub limit: u64,
    /// Whether a position whose kings are far apart can be disproven outright.
    pub distance_prune: bool,
    offsets: Vec<i64>,
    solved: FxHashMap<u64, Solved>,
    open: FxHashMap<(u64, u16), (u32, u32)>,
}

fn add(a: u32, b: u32) -> u32 {
    a.saturating_add(b).min(INF)
}

impl<'a> Solver<'a> {
    pub fn new(cfg: &'a SearchConfig, attacker: Color, goal: Goal) -> Self {
        Solver {
            cfg,
            attacker,
            goal,
            nodes: 0,
            limit: cfg.max_nodes,
            distance_prune: false,
            offsets: cfg.offsets(),
            solved: FxHashMap::default(),
            open: FxHashMap::default(),
        }
    }

    fn lookup(&self, key: u64, m: u16) -> Status {
        if let Some(s) = self.solved.get(&key) {
            if s.proven <= m {
                return Status::Proven;
            }
            if s.disproven >= m as i32 {
                return Status::Disproven;
            }
        }
        match self.open.get(&(key, m)) {
            Some(&(pn, dn)) => Status::Open(pn, dn),
            None => Status::Open(1, 1),
        }
    }

    /// Smallest depth at which `key` is known to be won.
    pub fn proven_depth(&self, key: u64) -> Option<u16> {
        self.solved.get(&key).map(|s| s.proven).filter(|&d| d != u16::MAX)
    }

    fn store(&mut self, key: u64, m: u16, s: Status) {
        match s {
            Status::Proven => {
                let e = self.solved.entry(key).or_insert(Solved { proven: u16::MAX, disproven: -1 });
                e.proven = e.proven.min(m);
                self.open.remove(&(key, m));
            }
            Status::Disproven => {
                let e = self.solved.entry(key).or_insert(Solved { proven: u16::MAX, disproven: -1 });
                e.disproven = e.disproven.max(m as i32);
                self.open.remove(&(key, m));
            }
            Status::Open(pn, dn) => {
                if self.open.len() >= OPEN_CAP {
                    self.open.clear();
                }
                self.open.insert((key, m), (pn, dn));
            }
        }
    }

    fn attacker_node(&self, b: &Board) -> bool {
        b.turn == self.attacker
    }

    /// Verdict that needs no expansion, if any.
    pub fn terminal(&mut self, b: &mut Board, m: u16) -> Option<bool> {
        let defender = self.attacker.opponent();
        if self.attacker_node(b) {
            if b.in_check(defender) {
                return Some(true);
            }
            if m == 0 || self.hopeless(b, m) {
                return Some(false);
            }
            None
        } else {
            let check = b.in_check(defender);
            let moves = b.has_legal_move();
            if !moves {
                let won = if check {
                    !b.in_check(self.attacker)
                } else {
                    self.goal == Goal::Stalemate
                };
                return Some(won);
            }
            if m == 0 {
                return Some(false);
            }
            None
        }
    }

    /// Mate needs the kings within two squares of each other (see
    /// [`super::lone_king_needs_support`]); each side closes at most one square a move.
    fn hopeless(&self, b: &Board, m: u16) -> bool {
        if !self.distance_prune || self.goal != Goal::Mate {
            return false;
        }
        let defender = self.attacker.opponent();
        let lone = b.pieces.iter().all(|p| !p.alive || p.color != defender || p.kind == PieceType::King);
        match b.king_distance() {
            Some(d) if lone => d > 2 * m as i64 + 1,
            _ => false,
        }
    }

    /// Moves of the side to move, in search order: checks, captures, king approaches,
    /// the rest; stable within each class.
    pub fn ordered_moves(&self, b: &mut Board) -> Vec<BoardMove> {
        let moves = b.canonical_moves(self.cfg.region_radius as i64, &self.offsets);
        let dk = b.king(self.attacker.opponent()).map(|k| (b.pieces[k].x, b.pieces[k].y));
        let mut keyed: Vec<(u8, BoardMove)> = moves
            .into_iter()
            .map(|m| {
                let class = if b.gives_check(&m) {
                    0
                } else if b.occupant(m.x, m.y).is_some() {
                    1
                } else {
                    let p = &b.pieces[m.piece as usize];
                    match dk {
                        Some((x, y)) if p.kind == PieceType::King => {
                            let before = (p.x - x).abs().max((p.y - y).abs());
                            let after = (m.x - x).abs().max((m.y - y).abs());
                            if after < before {
                                2
                            } else {
                                3
                            }
                        }
                        _ => 3,
                    }
                };
                (class, m)
            })
            .collect();
        keyed.sort_by_key(|&(c, _)| c);
        keyed.into_iter().map(|(_, m)| m).collect()
    }

    fn child_depth(&self, b: &Board, m: u16) -> u16 {
        if self.attacker_node(b) {
            m - 1
        } else {
            m
        }
    }

    /// Proves or disproves the node, or runs out of nodes.
    pub fn solve(&mut self, b: &mut Board, m: u16) -> Result<bool, OutOfNodes> {
        if !self.cfg.use_transposition_table {
            return self.dfs(b, m);
        }
        let key = b.hash_key();
        loop {
            match self.lookup(key, m) {
                Status::Proven => return Ok(true),
                Status::Disproven => return Ok(false),
                Status::Open(..) => {}
            }
            self.mid(b, m, INF, INF)?;
        }
    }

    fn mid(&mut self, b: &mut Board, m: u16, th_pn: u32, th_dn: u32) -> Result<(), OutOfNodes> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(OutOfNodes);
        }
        let key = b.hash_key();
        if let Some(v) = self.terminal(b, m) {
            self.store(key, m, if v { Status::Proven } else { Status::Disproven });
            return Ok(());
        }
        let or = self.attacker_node(b);
        let moves = self.ordered_moves(b);
        if moves.is_empty() {
            // only reachable at attacker nodes: no canonical move
            self.store(key, m, Status::Disproven);
            return Ok(());
        }
        let cm = self.child_depth(b, m);
        let keys: Vec<u64> = moves
            .iter()
            .map(|mv| {
                let u = b.make(mv);
                let k = b.hash_key();
                b.unmake(mv, u);
                k
            })
            .collect();
        // new attacker-move children start with their reply count as proof number,
        // which favours checks
        if or {
            for (mv, &k) in moves.iter().zip(&keys) {
                if self.solved.contains_key(&k) || self.open.contains_key(&(k, cm)) {
                    continue;
                }
                let u = b.make(mv);
                let replies = b.exact_legal_moves().len().max(1) as u32;
                b.unmake(mv, u);
                self.store(k, cm, Status::Open(replies, 1));
            }
        }
        loop {
            let (mut pn, mut dn) = if or { (INF, 0) } else { (0, INF) };
            let mut best = usize::MAX;
            let mut best_v = INF + 1;
            let mut second = INF;
            let mut best_other = 0;
            for (i, &k) in keys.iter().enumerate() {
                let (cpn, cdn) = match self.lookup(k, cm) {
                    Status::Proven => (0, INF),
                    Status::Disproven => (INF, 0),
                    Status::Open(p, d) => (p, d),
                };
                let (sel, other) = if or { (cpn, cdn) } else { (cdn, cpn) };
                if or {
                    pn = pn.min(cpn);
                    dn = add(dn, cdn);
                } else {
                    pn = add(pn, cpn);
                    dn = dn.min(cdn);
                }
                if sel < best_v {
                    second = best_v;
                    best_v = sel;
                    best = i;
                    best_other = other;
                } else if sel < second {
                    second = sel;
                }
            }
            second = second.min(INF);
            if pn == 0 {
                self.store(key, m, Status::Proven);
                return Ok(());
            }
            if dn == 0 {
                self.store(key, m, Status::Disproven);
                return Ok(());
            }
            if pn >= th_pn || dn >= th_dn {
                self.store(key, m, Status::Open(pn, dn));
                return Ok(());
            }
            self.store(key, m, Status::Open(pn, dn));
            let (c_pn, c_dn) = if or {
                (th_pn.min(add(second, 1)), th_dn.saturating_sub(dn).saturating_add(best_other).min(INF))
            } else {
                (th_pn.saturating_sub(pn).saturating_add(best_other).min(INF), th_dn.min(add(second, 1)))
            };
            let mv = moves[best];
            let u = b.make(&mv);
            let r = self.mid(b, cm, c_pn, c_dn);
            b.unmake(&mv, u);
            r?;
        }
    }

    fn dfs(&mut self, b: &mut Board, m: u16) -> Result<bool, OutOfNodes> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(OutOfNodes);
        }
        if let Some(v) = self.terminal(b, m) {
            return Ok(v);
        }
        let or = self.attacker_node(b);
        let cm = self.child_depth(b, m);
        let moves = self.ordered_moves(b);
        for mv in &moves {
            let u = b.make(mv);
            let r = self.dfs(b, cm);
            b.unmake(mv, u);
            if r? == or {
                return Ok(or);
            }
        }
        Ok(!or)
    }
}
