//! Draw by confinement: reach, within `n` moves, a position of a small family the
//! opponent can be held inside forever.

use super::board::{Board, BoardMove};
use super::{board_of, mover_moves, replay, Line, SearchConfig, SearchError, SearchOutcome, Terminal};
use crate::decision;
use crate::model::{self, Color, PieceType, Position};

struct DrawSearch<'a> {
    cfg: &'a SearchConfig,
    player: Color,
    k: usize,
    nodes: u64,
    family: Vec<Board>,
}

#[derive(Debug)]
struct OutOfNodes;

impl DrawSearch<'_> {
    fn tick(&mut self) -> Result<(), OutOfNodes> {
        self.nodes += 1;
        if self.nodes > self.cfg.max_nodes {
            Err(OutOfNodes)
        } else {
            Ok(())
        }
    }

    fn moves(&self, b: &mut Board) -> Vec<BoardMove> {
        b.canonical_moves(self.cfg.region_radius as i64, &self.cfg.offsets())
    }

    /// Player moves ordered by how few replies they leave, checks first among equals.
    fn player_moves(&self, b: &mut Board) -> Vec<BoardMove> {
        let mut keyed: Vec<(usize, bool, BoardMove)> = self
            .moves(b)
            .into_iter()
            .map(|m| {
                let u = b.make(&m);
                let replies = b.exact_legal_moves().len();
                let check = b.in_check(b.turn);
                b.unmake(&m, u);
                (replies, !check, m)
            })
            .collect();
        keyed.sort_by_key(|&(r, c, _)| (r, c));
        keyed.into_iter().map(|(_, _, m)| m).collect()
    }

    /// Cheap necessary condition for `s` to belong to a family: the opponent has a
    /// move, and when only their king is left, the king's destinations that cannot be
    /// answered by mate number at most `k` (each needs its own member).
    fn admissible(&mut self, s: &mut Board) -> Result<bool, OutOfNodes> {
        let opp = self.player.opponent();
        let moves = s.exact_legal_moves();
        if moves.is_empty() {
            return Ok(false);
        }
        let lone = s.pieces.iter().all(|p| !p.alive || p.color != opp || p.kind == PieceType::King);
        if !lone || moves.len() <= self.k {
            return Ok(true);
        }
        let mut open = 0;
        for q in moves {
            self.tick()?;
            let u = s.make(&q);
            let mut mate = false;
            for r in self.moves(s) {
                let v = s.make(&r);
                mate = self.won(s);
                s.unmake(&r, v);
                if mate {
                    break;
                }
            }
            s.unmake(&q, u);
            if !mate {
                open += 1;
                if open > self.k {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Opponent to move, checkmated.
    fn won(&self, b: &mut Board) -> bool {
        let opp = self.player.opponent();
        b.turn == opp && b.in_check(opp) && !b.in_check(self.player) && !b.has_legal_move()
    }

    fn in_family(&self, b: &Board, extra: &[Board]) -> bool {
        self.family.iter().chain(extra).any(|f| f == b)
    }

    /// Whether every opponent move from `s` has a reply that mates or lands in the
    /// family extended by `extra`. On failure returns the first unanswered move.
    fn closed_at(&mut self, s: &mut Board, extra: &[Board]) -> Result<Option<BoardMove>, OutOfNodes> {
        if !s.has_legal_move() {
            return Ok(s.exact_legal_moves().first().copied());
        }
        for q in self.moves(s) {
            self.tick()?;
            let u = s.make(&q);
            let mut answered = false;
            for r in self.moves(s) {
                let v = s.make(&r);
                answered = self.won(s) || self.in_family(s, extra);
                s.unmake(&r, v);
                if answered {
                    break;
                }
            }
            s.unmake(&q, u);
            if !answered {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    /// Grows a family around `b` within the remaining size; on success the family
    /// is extended.
    fn confine(&mut self, b: &Board) -> Result<bool, OutOfNodes> {
        if self.family.len() >= self.k {
            return Ok(false);
        }
        if !self.admissible(&mut b.clone())? {
            return Ok(false);
        }
        let mut extra = vec![b.clone()];
        self.grow(&mut extra)
    }

    fn grow(&mut self, extra: &mut Vec<Board>) -> Result<bool, OutOfNodes> {
        // the first member not yet closed decides the candidates
        for i in 0..extra.len() {
            let mut s = extra[i].clone();
            if !s.has_legal_move() {
                return Ok(false);
            }
            let Some(q) = self.closed_at(&mut s, extra)? else {
                continue;
            };
            if self.family.len() + extra.len() >= self.k {
                return Ok(false);
            }
            let u = s.make(&q);
            for r in self.moves(&mut s) {
                let v = s.make(&r);
                let cand = s.clone();
                s.unmake(&r, v);
                if self.in_family(&cand, extra) || !self.admissible(&mut cand.clone())? {
                    continue;
                }
                extra.push(cand);
                if self.grow(extra)? {
                    return Ok(true);
                }
                extra.pop();
            }
            s.unmake(&q, u);
            return Ok(false);
        }
        self.family.append(extra);
        Ok(true)
    }

    /// Player forces a win or entry into the family within `m` of their moves. The
    /// family may grow along the way; it is rolled back when a branch fails.
    fn reach(&mut self, b: &mut Board, m: u16, line: &mut Vec<BoardMove>) -> Result<bool, OutOfNodes> {
        self.tick()?;
        let opp = self.player.opponent();
        if b.turn == self.player {
            if b.in_check(opp) {
                return Ok(true);
            }
            if m == 0 {
                return Ok(false);
            }
            let saved = self.family.len();
            for mv in self.player_moves(b) {
                let u = b.make(&mv);
                line.push(mv);
                let mark = line.len();
                let ok = self.reach(b, m - 1, line)?;
                b.unmake(&mv, u);
                if ok {
                    return Ok(true);
                }
                line.truncate(mark - 1);
                self.family.truncate(saved);
            }
            Ok(false)
        } else {
            if self.won(b) || self.in_family(b, &[]) {
                return Ok(true);
            }
            let saved = self.family.len();
            if self.confine(b)? {
                return Ok(true);
            }
            self.family.truncate(saved);
            if m == 0 || !b.has_legal_move() {
                return Ok(false);
            }
            // the principal line follows the first reply only
            let mut first = true;
            for q in self.moves(b) {
                let u = b.make(&q);
                let mut sub = Vec::new();
                let ok = self.reach(b, m, &mut sub)?;
                b.unmake(&q, u);
                if !ok {
                    self.family.truncate(saved);
                    return Ok(false);
                }
                if first {
                    line.push(q);
                    line.extend(sub);
                    first = false;
                }
            }
            Ok(true)
        }
    }
}

/// Whether `player` can, within `n` moves, force a win or entry into a family of at
/// most `k` positions (opponent to move) that the opponent can be held inside forever.
///
/// The search is depth-first and commits to the first family that works for a
/// branch, so a false verdict may miss draws that need the family chosen differently.
/// A found family is re-checked by [`verify_family`] before being reported.
pub fn solve_draw(
    p: &Position,
    player: Color,
    n: usize,
    k: usize,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    if k == 0 {
        return Err(SearchError::InvalidQuery("family size k must be at least 1".into()));
    }
    cfg.validate()?;
    let (mut b, frame) = board_of(p)?;
    let m = super::root_depth(n)?;
    let mut s = DrawSearch { cfg, player, k, nodes: 0, family: Vec::new() };
    let mut moves = Vec::new();
    let verdict = s
        .reach(&mut b, m, &mut moves)
        .map_err(|_| SearchError::NodeBudget(cfg.max_nodes))?;
    if !verdict {
        return Ok(SearchOutcome { verdict, line: None, nodes: s.nodes, family: None });
    }
    let family: Vec<Position> = s.family.iter().map(|f| frame.to_position(f)).collect();
    if !verify_family(&family, player, cfg) {
        return Err(SearchError::Replay { ply: 0, reason: "family failed the closure check".into() });
    }
    let moves: Vec<_> = moves.iter().map(|mv| frame.to_move(mv)).collect();
    let end = replay(p, &moves)?;
    let terminal = if decision::is_won_by(&end, player) {
        Terminal::Won
    } else if family.contains(&end) {
        Terminal::Family
    } else {
        return Err(SearchError::Replay { ply: moves.len(), reason: "line ends outside the family".into() });
    };
    if mover_moves(p, player, moves.len()) > n {
        return Err(SearchError::Replay { ply: moves.len(), reason: "line too long".into() });
    }
    Ok(SearchOutcome {
        verdict,
        line: Some(Line { moves, terminal }),
        nodes: s.nodes,
        family: Some(family),
    })
}

/// Explicit fixed-point check of a family on the reference rules: each member has the
/// opponent to move with at least one legal move, and every opponent move among the
/// model's candidate moves is answered by a legal move into the family or by a
/// canonical move that checkmates.
pub fn verify_family(family: &[Position], player: Color, cfg: &SearchConfig) -> bool {
    let opp = player.opponent();
    family.iter().all(|s| {
        s.turn == opp
            && model::has_legal_move(s)
            && model::legal_candidate_moves(s).iter().all(|q| {
                let Ok(after) = model::apply_move(s, q) else {
                    return false;
                };
                let back = family.iter().any(|t| {
                    model::move_between(&after, t).is_some_and(|r| {
                        model::is_legal_move(&after, &r).unwrap_or(false)
                            && model::apply_move(&after, &r).is_ok_and(|x| &x == t)
                    })
                });
                back || super::canonical_moves(&after, cfg).is_ok_and(|rs| {
                    rs.iter().any(|r| {
                        model::apply_move(&after, r).is_ok_and(|x| decision::is_won_by(&x, player))
                    })
                })
            })
    })
}
