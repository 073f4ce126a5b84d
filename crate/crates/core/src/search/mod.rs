//! Bounded-region alternating search.
//!
//! The infinite move set is replaced by [`canonical_moves`]: every legal move into the
//! live pieces' bounding box inflated by a radius, plus a few far representatives per
//! open slider ray. Mate and stalemate queries run a depth-bounded df-pn over that move
//! set; draws run a family-threading depth-first search. True verdicts come with a
//! line that is replayed through [`crate::model`] before it is returned, so they are
//! certified; false verdicts only speak for the canonical move set.

mod board;
mod draw;
mod solver;

#[cfg(test)]
mod tests;

use std::sync::OnceLock;

use parking_lot::Mutex;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::decision::{self, Method, SolveResult};
use crate::model::{self, Color, Move, PieceType, Position};

pub use board::{Board, BoardMove, Frame, Piece};
pub use draw::verify_family;
use solver::{OutOfNodes, Solver};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("live pieces too far apart for the search board")]
    Coordinates,
    #[error("node budget of {0} exhausted")]
    NodeBudget(u64),
    #[error("extracted line failed replay at ply {ply}: {reason}")]
    Replay { ply: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Inflation of the live pieces' bounding box.
    pub region_radius: u32,
    /// Steps past the region edge at which open slider rays get a representative.
    pub far_offsets: Vec<u32>,
    pub max_nodes: u64,
    pub use_transposition_table: bool,
    /// Disprove mate attempts whose kings cannot meet in time, when the attacker's
    /// other pieces are known unable to mate a lone king on their own.
    pub king_distance_pruning: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            region_radius: 8,
            far_offsets: vec![1, 2],
            max_nodes: 100_000_000,
            use_transposition_table: true,
            king_distance_pruning: true,
        }
    }
}

impl SearchConfig {
    pub fn with_radius(radius: u32) -> Self {
        SearchConfig { region_radius: radius, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.region_radius < 2 {
            return Err(SearchError::InvalidConfig(format!(
                "region radius {} is below 2",
                self.region_radius
            )));
        }
        if self.far_offsets.is_empty() || self.far_offsets.contains(&0) {
            return Err(SearchError::InvalidConfig("far offsets must be nonempty and positive".into()));
        }
        if self.max_nodes == 0 {
            return Err(SearchError::InvalidConfig("node budget must be positive".into()));
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<i64> {
        self.far_offsets.iter().map(|&f| f as i64).collect()
    }
}

/// What the last position of a [`Line`] satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// The opponent is checkmated (or, at a root with the player to move, already in
    /// check).
    Won,
    Stalemate,
    /// The opponent is to move inside the returned family.
    Family,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    /// Alternating moves from the root.
    pub moves: Vec<Move>,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Mate,
    Stalemate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub verdict: bool,
    /// Present exactly when the verdict is true.
    pub line: Option<Line>,
    pub nodes: u64,
    /// The confining positions of a successful draw search.
    pub family: Option<Vec<Position>>,
}

impl SearchOutcome {
    pub fn to_solve_result(&self) -> SolveResult {
        SolveResult {
            verdict: self.verdict,
            method: Method::Search,
            line: self.line.as_ref().map(|l| l.moves.clone()),
            minimal_n: None,
        }
    }
}

pub(crate) fn board_of(p: &Position) -> Result<(Board, Frame), SearchError> {
    if let Err(v) = model::validate_position(p) {
        return Err(SearchError::InvalidPosition(
            v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
        ));
    }
    Board::from_position(p).ok_or(SearchError::Coordinates)
}

/// All legal moves with targets in the inflated region plus the far representatives of
/// open slider rays; duplicate-free, in generation order.
pub fn canonical_moves(p: &Position, cfg: &SearchConfig) -> Result<Vec<Move>, SearchError> {
    cfg.validate()?;
    let (mut b, frame) = board_of(p)?;
    Ok(b.canonical_moves(cfg.region_radius as i64, &cfg.offsets())
        .iter()
        .map(|m| frame.to_move(m))
        .collect())
}

/// Whether the given non-king pieces of one side can never checkmate a lone king.
///
/// Decided once per material by the automata engine: the mate-in-0 language of that
/// material against a lone king must be empty. Only single pieces are tried, since
/// larger materials are slow to compile and some of them do mate: queen and rook on
/// both sides of the king protect each other through the king's own square. Anything
/// not shown empty counts as "can mate" and disables the pruning that relies on this.
pub fn lone_king_needs_support(material: &[PieceType]) -> bool {
    static CACHE: OnceLock<Mutex<FxHashMap<Vec<PieceType>, bool>>> = OnceLock::new();
    let mut key: Vec<PieceType> = material.iter().copied().filter(|&t| t != PieceType::King).collect();
    key.sort_by_key(|t| PieceType::ALL.iter().position(|a| a == t));
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().get(&key) {
        return v;
    }
    let v = key.len() <= 1 && no_unsupported_mate(&key);
    cache.lock().insert(key, v);
    v
}

fn no_unsupported_mate(material: &[PieceType]) -> bool {
    let mut entries: Vec<(PieceType, Color)> = material.iter().map(|&t| (t, Color::White)).collect();
    entries.push((PieceType::King, Color::Black));
    let Ok(spec) = model::PieceSpec::new(entries) else {
        return false;
    };
    let f = decision::Formula::and([
        decision::mate_formula(Color::White, 0),
        decision::Formula::black_to_play(decision::ROOT),
    ]);
    matches!(decision::compile(&f, &spec), Ok(a) if a.is_empty())
}

fn solver_for<'a>(b: &Board, cfg: &'a SearchConfig, player: Color, goal: Goal) -> Solver<'a> {
    let mut s = Solver::new(cfg, player, goal);
    if cfg.king_distance_pruning && goal == Goal::Mate {
        let defender_lone = b
            .pieces
            .iter()
            .all(|p| !p.alive || p.color == player || p.kind == PieceType::King);
        let has_kings = b.king(player).is_some() && b.king(player.opponent()).is_some();
        if defender_lone && has_kings {
            let material: Vec<PieceType> = b
                .pieces
                .iter()
                .filter(|p| p.alive && p.color == player)
                .map(|p| p.kind)
                .collect();
            s.distance_prune = lone_king_needs_support(&material);
        }
    }
    s
}

fn check_query(p: &Position, cfg: &SearchConfig) -> Result<(Board, Frame), SearchError> {
    cfg.validate()?;
    board_of(p)
}

fn root_depth(n: usize) -> Result<u16, SearchError> {
    u16::try_from(n)
        .ok()
        .filter(|&m| m < u16::MAX)
        .ok_or_else(|| SearchError::InvalidQuery(format!("depth {n} too large")))
}

/// Whether `player` forces checkmate within `n` of their own moves, searching the
/// canonical move set.
pub fn solve_mate(p: &Position, player: Color, n: usize, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    solve_goal(p, player, n, cfg, Goal::Mate)
}

/// Whether `player` forces checkmate or stalemate of the opponent within `n` moves.
pub fn solve_stalemate(
    p: &Position,
    player: Color,
    n: usize,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    solve_goal(p, player, n, cfg, Goal::Stalemate)
}

fn solve_goal(p: &Position, player: Color, n: usize, cfg: &SearchConfig, goal: Goal) -> Result<SearchOutcome, SearchError> {
    let (mut b, frame) = check_query(p, cfg)?;
    let m = root_depth(n)?;
    let mut s = solver_for(&b, cfg, player, goal);
    let verdict = s.solve(&mut b, m).map_err(|_| SearchError::NodeBudget(cfg.max_nodes))?;
    let line = if verdict {
        let moves = extract_line(&mut s, &mut b, m).map_err(|_| SearchError::NodeBudget(cfg.max_nodes))?;
        let moves: Vec<Move> = moves.iter().map(|mv| frame.to_move(mv)).collect();
        let end = replay(p, &moves)?;
        let terminal = goal_terminal(&end, player, goal).ok_or_else(|| SearchError::Replay {
            ply: moves.len(),
            reason: "final position does not satisfy the goal".into(),
        })?;
        let mover_moves = mover_moves(p, player, moves.len());
        if mover_moves > n {
            return Err(SearchError::Replay {
                ply: moves.len(),
                reason: format!("{mover_moves} moves by {player}, more than {n}"),
            });
        }
        Some(Line { moves, terminal })
    } else {
        None
    };
    Ok(SearchOutcome { verdict, line, nodes: s.nodes, family: None })
}

/// Moves made by `player` in a line of `plies` plies from `p`.
pub fn mover_moves(p: &Position, player: Color, plies: usize) -> usize {
    if p.turn == player {
        plies.div_ceil(2)
    } else {
        plies / 2
    }
}

fn goal_terminal(end: &Position, player: Color, goal: Goal) -> Option<Terminal> {
    if decision::is_won_by(end, player) {
        Some(Terminal::Won)
    } else if goal == Goal::Stalemate && end.turn != player && model::is_stalemated(end) {
        Some(Terminal::Stalemate)
    } else {
        None
    }
}

/// Applies `moves` through the reference rules, rejecting the first illegal one.
pub fn replay(p: &Position, moves: &[Move]) -> Result<Position, SearchError> {
    let mut cur = p.clone();
    for (ply, m) in moves.iter().enumerate() {
        match model::is_legal_move(&cur, m) {
            Ok(true) => {}
            _ => return Err(SearchError::Replay { ply, reason: format!("illegal move {m}") }),
        }
        cur = model::apply_move(&cur, m).map_err(|e| SearchError::Replay { ply, reason: e.to_string() })?;
    }
    Ok(cur)
}

/// Whether `line` is a legal line from `p` ending in a position that satisfies its
/// terminal claim for `player` within `n` of the player's moves.
pub fn verify_line(p: &Position, player: Color, n: usize, line: &Line) -> bool {
    let Ok(end) = replay(p, &line.moves) else {
        return false;
    };
    let ok = match line.terminal {
        Terminal::Won => decision::is_won_by(&end, player),
        Terminal::Stalemate => end.turn != player && model::is_stalemated(&end),
        Terminal::Family => end.turn != player,
    };
    ok && mover_moves(p, player, line.moves.len()) <= n
}

/// Node budget spent per attempt to shorten a defence estimate during line extraction.
const ESTIMATE_NODES: u64 = 20_000;

/// Walks a proven tree: the player picks the child with the smallest known depth, the
/// opponent the reply whose mate is estimated to take longest.
fn extract_line(s: &mut Solver, b: &mut Board, mut m: u16) -> Result<Vec<BoardMove>, OutOfNodes> {
    let mut line = Vec::new();
    loop {
        if s.terminal(b, m).is_some() {
            return Ok(line);
        }
        let moves = s.ordered_moves(b);
        let attacker = b.turn == s.attacker;
        let mut pick: Option<(BoardMove, u16)> = None;
        for mv in moves {
            let u = b.make(&mv);
            let depth = if attacker { proven_child(s, b, m - 1)? } else { defence_estimate(s, b, m)? };
            b.unmake(&mv, u);
            let Some(d) = depth else { continue };
            let better = match pick {
                None => true,
                Some((_, best)) => {
                    if attacker {
                        d < best
                    } else {
                        d > best
                    }
                }
            };
            if better {
                pick = Some((mv, d));
            }
        }
        let Some((mv, d)) = pick else {
            // unreachable for a proven node; an empty line fails replay verification
            return Ok(line);
        };
        b.make(&mv);
        line.push(mv);
        m = d;
    }
}

/// Smallest depth `≤ m` at which the node is known or shown to be won.
fn proven_child(s: &mut Solver, b: &mut Board, m: u16) -> Result<Option<u16>, OutOfNodes> {
    let key = b.hash_key();
    if let Some(d) = s.proven_depth(key).filter(|&d| d <= m) {
        return Ok(Some(d));
    }
    if s.cfg.use_transposition_table {
        return Ok(None);
    }
    Ok(s.solve(b, m)?.then_some(m))
}

/// How long the player needs after this defence: the proven depth, lowered while
/// cheap re-searches keep succeeding.
fn defence_estimate(s: &mut Solver, b: &mut Board, m: u16) -> Result<Option<u16>, OutOfNodes> {
    let Some(mut d) = proven_child(s, b, m)? else {
        return Ok(None);
    };
    let limit = s.limit;
    while d > 0 {
        s.limit = s.nodes.saturating_add(ESTIMATE_NODES).min(limit);
        let r = s.solve(b, d - 1);
        s.limit = limit;
        match r {
            Ok(true) => d -= 1,
            _ => break,
        }
    }
    Ok(Some(d))
}

/// Smallest `n ≤ max_n` with `player` forcing mate in `n`, if any.
pub fn minimal_value(
    p: &Position,
    player: Color,
    max_n: usize,
    cfg: &SearchConfig,
) -> Result<Option<usize>, SearchError> {
    for n in 0..=max_n {
        if solve_mate(p, player, n, cfg)?.verdict {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// A value-reducing move for `player`, who must be to move: the first move of a
/// mating line for the smallest `n ≤ max_n` that the search proves. Depths whose
/// search runs out of budget are skipped, so the move is value-reducing relative to
/// what the budget can show. `None` when no mate within `max_n` is found.
pub fn best_move(p: &Position, player: Color, max_n: usize, cfg: &SearchConfig) -> Result<Option<Move>, SearchError> {
    if p.turn != player {
        return Err(SearchError::InvalidQuery(format!("{player} is not to move")));
    }
    for n in 1..=max_n {
        match solve_mate(p, player, n, cfg) {
            Ok(out) if out.verdict => return Ok(out.line.and_then(|l| l.moves.into_iter().next())),
            Ok(_) | Err(SearchError::NodeBudget(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// A reply for the opponent of `player` that postpones mate as long as possible,
/// looking up to `max_n`; replies whose value the budget cannot settle count as
/// unbounded. `None` when the opponent has no move.
pub fn delay_move(p: &Position, player: Color, max_n: usize, cfg: &SearchConfig) -> Result<Option<Move>, SearchError> {
    if p.turn == player {
        return Err(SearchError::InvalidQuery(format!("{player} is to move, not the opponent")));
    }
    let mut best: Option<(Move, usize)> = None;
    for m in canonical_moves(p, cfg)? {
        let q = model::apply_move(p, &m).map_err(|e| SearchError::InvalidPosition(e.to_string()))?;
        let mut value = usize::MAX;
        for n in 0..=max_n {
            match solve_mate(&q, player, n, cfg) {
                Ok(out) if out.verdict => {
                    value = n;
                    break;
                }
                Ok(_) => {}
                Err(SearchError::NodeBudget(_)) => break,
                Err(e) => return Err(e),
            }
        }
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((m, value));
        }
    }
    Ok(best.map(|(m, _)| m))
}

pub use draw::solve_draw;

/// One query on which the engines disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub position: Position,
    pub player: Color,
    pub n: usize,
    pub automata: bool,
    pub search: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossReport {
    pub checked: usize,
    /// Queries one of the engines could not finish within its budget.
    pub skipped: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Runs both engines on every sampled position for each `n ≤ n_max`, with `player`
/// as the mating side. `automata` answers the decision-procedure side, normally
/// [`decision::Decider::decide`].
pub fn cross_validate(
    samples: impl IntoIterator<Item = Position>,
    player: Color,
    n_max: usize,
    cfg: &SearchConfig,
    mut automata: impl FnMut(&Position, Color, usize) -> Result<bool, decision::DecisionError>,
) -> CrossReport {
    let mut report = CrossReport::default();
    for p in samples {
        for n in 0..=n_max {
            let a = automata(&p, player, n);
            let s = solve_mate(&p, player, n, cfg);
            match (a, s) {
                (Ok(a), Ok(s)) => {
                    report.checked += 1;
                    if a != s.verdict {
                        report.disagreements.push(Disagreement {
                            position: p.clone(),
                            player,
                            n,
                            automata: a,
                            search: s.verdict,
                        });
                    }
                }
                _ => report.skipped += 1,
            }
        }
    }
    report
}
