//! Mate-in-n, stalemate-in-n and draw-in-n-by-k as first-order formulas over
//! positions, decided by compiling them to synchronous automata.

mod compile;
mod formula;
mod lia;

use std::fmt;

use crate::automata::{AutomataError, BoolOp, Limits, Qf};
use crate::chess_automata::relations::one_move_qf;
use crate::chess_automata::{CodingError, PositionCoding};
use crate::model::{is_mated, move_between, validate_position, Color, Move, PieceSpec, Position};

pub use compile::{CompileStats, Compiler};
pub use formula::*;
pub use lia::export_lia;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecisionError {
    #[error("automaton budget exhausted: {0}")]
    Budget(AutomataError),
    #[error(transparent)]
    Automata(AutomataError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("formula is not well scoped: {0}")]
    Scope(String),
}

impl From<AutomataError> for DecisionError {
    fn from(e: AutomataError) -> Self {
        if e.is_budget() {
            DecisionError::Budget(e)
        } else {
            DecisionError::Automata(e)
        }
    }
}

impl DecisionError {
    pub fn is_budget(&self) -> bool {
        matches!(self, DecisionError::Budget(_))
            || matches!(self, DecisionError::Coding(CodingError::Automata(e)) if e.is_budget())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionConfig {
    pub limits: Limits,
    pub max_n: usize,
    pub max_k: usize,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            limits: Limits::default(),
            max_n: 16,
            max_k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub position: Position,
    pub player: Color,
    pub n: usize,
    pub kind: QueryKind,
}

impl Query {
    pub fn mate(position: Position, player: Color, n: usize) -> Self {
        Query { position, player, n, kind: QueryKind::Mate }
    }

    pub fn validate(&self, config: &DecisionConfig) -> Result<(), DecisionError> {
        validate_position(&self.position).map_err(|v| {
            DecisionError::InvalidQuery(
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            )
        })?;
        if self.n > config.max_n {
            return Err(DecisionError::InvalidQuery(format!(
                "n = {} exceeds the configured maximum {}",
                self.n, config.max_n
            )));
        }
        if let QueryKind::Draw { k } = self.kind {
            if k == 0 || k > config.max_k {
                return Err(DecisionError::InvalidQuery(format!(
                    "k = {k} outside 1..={}",
                    config.max_k
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Automata,
    Search,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Automata => "automata",
            Method::Search => "search",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub verdict: bool,
    pub method: Method,
    pub line: Option<Vec<Move>>,
    pub minimal_n: Option<usize>,
}

/// Automata-based decision procedure with a fixed configuration.
///
/// Queries about a concrete position compile the formula relative to that position
/// (see [`Compiler`]), which is what makes them tractable for specifications whose
/// unrestricted move relation has no affordable automaton.
#[derive(Debug, Clone, Default)]
pub struct Decider {
    pub config: DecisionConfig,
}

impl Decider {
    pub fn new(config: DecisionConfig) -> Self {
        Decider { config }
    }

    fn compiler(&self, spec: &PieceSpec) -> Compiler {
        Compiler::new(spec.clone(), self.config.limits)
    }

    /// Automaton of `f` over its free variables in increasing order.
    pub fn compile(&self, f: &Formula, spec: &PieceSpec) -> Result<crate::automata::SyncAutomaton, DecisionError> {
        Ok(self.compiler(spec).compile(f)?.1)
    }

    /// Whether the formula with free variable [`ROOT`] holds at `p`.
    pub fn holds(&self, f: &Formula, p: &Position) -> Result<bool, DecisionError> {
        let mut c = self.compiler(&spec_of(p)?);
        holds_with(&mut c, f, p)
    }

    pub fn decide(&self, q: &Query) -> Result<SolveResult, DecisionError> {
        q.validate(&self.config)?;
        let f = query_formula(q.kind, q.player, q.n);
        let verdict = self.holds(&f, &q.position)?;
        Ok(SolveResult { verdict, method: Method::Automata, line: None, minimal_n: None })
    }

    /// Least `n ≤ max_n` with `p` mate-in-`n` for `player`.
    pub fn minimal_value(&self, p: &Position, player: Color) -> Result<Option<usize>, DecisionError> {
        let mut c = self.compiler(&spec_of(p)?);
        minimal_with(&mut c, p, player, self.config.max_n)
    }

    /// A move of `player` (who is to move) into a position of strictly smaller value.
    pub fn best_move(&self, p: &Position, player: Color) -> Result<Move, DecisionError> {
        if p.turn != player {
            return Err(DecisionError::Precondition(format!("{player} is not to move")));
        }
        let mut c = self.compiler(&spec_of(p)?);
        let n = minimal_with(&mut c, p, player, self.config.max_n)?.ok_or_else(|| {
            DecisionError::Precondition(format!(
                "not a mate-in-{} position for {player}",
                self.config.max_n
            ))
        })?;
        if n == 0 {
            return Err(DecisionError::Precondition("the game is already won".into()));
        }
        let q = successor_where(&mut c, p, &mate_formula(player, n - 1), false)?
            .ok_or_else(|| DecisionError::Precondition("no value-reducing move".into()))?;
        Ok(move_between(p, &q).expect("successor differs by one move"))
    }

    /// A move of the side to move that postpones `player`'s mate as long as possible:
    /// a successor that is not mate-in-`n` for `player` if there is one, otherwise one of
    /// maximal value. `None` when there is no legal move.
    pub fn delay_move(&self, p: &Position, player: Color, n: usize) -> Result<Option<Move>, DecisionError> {
        if p.turn == player {
            return Err(DecisionError::Precondition(format!("{player} is the attacker, not to move")));
        }
        let mut c = self.compiler(&spec_of(p)?);
        let mut best = successor_where(&mut c, p, &Formula::True, false)?;
        if best.is_none() {
            return Ok(None);
        }
        for j in 0..=n {
            match successor_where(&mut c, p, &mate_formula(player, j), true)? {
                Some(q) => best = Some(q),
                None => break,
            }
        }
        Ok(best.map(|q| move_between(p, &q).expect("successor differs by one move")))
    }
}

fn spec_of(p: &Position) -> Result<PieceSpec, DecisionError> {
    p.spec().map_err(|e| DecisionError::InvalidQuery(e.to_string()))
}

fn holds_with(c: &mut Compiler, f: &Formula, p: &Position) -> Result<bool, DecisionError> {
    let free: Vec<Var> = f.free_vars().into_iter().collect();
    if free.len() > 1 || free.iter().any(|&v| v != ROOT) {
        return Err(DecisionError::Scope(format!(
            "expected a formula free in {ROOT} only, found {free:?}"
        )));
    }
    let ctx = c.point(&[p])?;
    let r = c.compile_in(f, &[ROOT], &ctx)?;
    Ok(!r.is_minimal_empty())
}

fn minimal_with(c: &mut Compiler, p: &Position, player: Color, max_n: usize) -> Result<Option<usize>, DecisionError> {
    for n in 0..=max_n {
        if holds_with(c, &mate_formula(player, n), p)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// The lexicographically least successor `q` of `p` with `f(q)` (or `¬f(q)` when
/// `negate`), `f` being free in [`ROOT`].
fn successor_where(
    c: &mut Compiler,
    p: &Position,
    f: &Formula,
    negate: bool,
) -> Result<Option<Position>, DecisionError> {
    let (vp, vq) = (Var(0), Var(1));
    let body = f.normalized(&|_| vq, 2);
    let body = if negate { Formula::not(body) } else { body };
    let l = c.layout(2);
    let point = c.point(&[p])?;
    let mut map = vec![0; point.arity()];
    let one = c.layout(1);
    for field in 0..l.fields() {
        map[one.tape(0, field)] = l.tape(0, field);
    }
    let limits = *c.limits();
    let wide = point.lift(l.kinds(), &map, &limits)?;
    let spec = c.spec().clone();
    let guard: Qf = one_move_qf(&spec, &l, 0, 1);
    let ctx = c.restrict_qf(2, &guard, &wide)?;
    let r = c.compile_in(&body, &[vp, vq], &ctx)?;
    let r = r.product(&ctx, BoolOp::And, &limits)?.minimize();
    let Some(values) = r.witness() else {
        return Ok(None);
    };
    let coding = PositionCoding::new(spec);
    Ok(Some(coding.from_values(&l, 1, &values)?))
}

/// Automaton of `f` over its free variables in increasing order, with the default
/// configuration.
pub fn compile(f: &Formula, spec: &PieceSpec) -> Result<crate::automata::SyncAutomaton, DecisionError> {
    Decider::default().compile(f, spec)
}

pub fn decide(q: &Query) -> Result<SolveResult, DecisionError> {
    Decider::default().decide(q)
}

pub fn minimal_value(p: &Position, player: Color, max_n: usize) -> Result<Option<usize>, DecisionError> {
    Decider::new(DecisionConfig { max_n, ..Default::default() }).minimal_value(p, player)
}

pub fn best_move(p: &Position, player: Color) -> Result<Move, DecisionError> {
    Decider::default().best_move(p, player)
}

pub fn delay_move(p: &Position, player: Color, n: usize) -> Result<Option<Move>, DecisionError> {
    Decider::default().delay_move(p, player, n)
}

/// The base case of mate-in-`n` for `player`: the opponent is to move, checkmated,
/// and `player` is not in check; or `player` is to move with the opponent in check.
pub fn is_won_by(p: &Position, player: Color) -> bool {
    let opp = player.opponent();
    if p.turn == player {
        crate::model::in_check(p, opp)
    } else {
        is_mated(p) && !crate::model::in_check(p, player)
    }
}
