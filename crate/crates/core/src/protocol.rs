//! Line-delimited JSON play/analysis protocol.
//!
//! Every request is one JSON object with an `"op"` field; every response is one JSON
//! object with `"ok"`. A [`Session`] holds one position and changes it only on an
//! accepted `move`. Transport is left to the caller (see the CLI's `serve`).

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::decision::{self, Decider, DecisionConfig, Query, QueryKind};
use crate::model::{self, Color, Move, Position, Square};
use crate::notation::{parse_position, parse_square, print_position};
use crate::search::{self, SearchConfig, SearchError};

/// Largest viewport side accepted by `legalMoves`.
pub const MAX_VIEWPORT: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Automata,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "w")]
    White,
    #[serde(rename = "b")]
    Black,
}

impl From<Side> for Color {
    fn from(s: Side) -> Color {
        match s {
            Side::White => Color::White,
            Side::Black => Color::Black,
        }
    }
}

impl From<Color> for Side {
    fn from(c: Color) -> Side {
        match c {
            Color::White => Side::White,
            Color::Black => Side::Black,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mate,
    Stalemate,
    Draw,
}

/// Inclusive viewport rectangle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveJson {
    pub piece: usize,
    pub to: String,
}

impl MoveJson {
    pub fn from_move(m: &Move) -> Self {
        MoveJson { piece: m.piece, to: m.target.to_string() }
    }

    pub fn to_move(&self) -> Result<Move, String> {
        let to = parse_square(&self.to).map_err(|e| e.to_string())?;
        Ok(Move::new(self.piece, to))
    }
}

/// A slider ray that leaves the viewport with its legal moves continuing beyond it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarRay {
    pub piece: usize,
    /// First square of the ray outside the viewport.
    pub from: String,
    pub direction: (i64, i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", deny_unknown_fields)]
pub enum Request {
    Load {
        position: String,
    },
    // a struct variant so that stray fields are rejected too
    State {},
    LegalMoves {
        region: Region,
    },
    Move {
        piece: usize,
        to: String,
    },
    Query {
        kind: Kind,
        n: usize,
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        player: Option<Side>,
        #[serde(default)]
        engine: Option<Engine>,
    },
    BestMove {
        #[serde(default, rename = "maxN")]
        max_n: Option<usize>,
        #[serde(default)]
        engine: Option<Engine>,
    },
    DelayMove {
        #[serde(default)]
        player: Option<Side>,
        #[serde(default, rename = "maxN")]
        max_n: Option<usize>,
        #[serde(default)]
        engine: Option<Engine>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Payload {
    State {
        position: String,
        turn: Side,
        checkmated: bool,
        stalemated: bool,
    },
    LegalMoves {
        moves: Vec<MoveJson>,
        far: Vec<FarRay>,
    },
    Result {
        verdict: bool,
        method: Engine,
        line: Option<Vec<MoveJson>>,
        #[serde(rename = "minimalN")]
        minimal_n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<Vec<String>>,
    },
    BestMove {
        #[serde(rename = "move")]
        mv: Option<MoveJson>,
    },
    DelayMove {
        #[serde(rename = "move")]
        mv: Option<MoveJson>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorCode {
    /// Malformed JSON or notation.
    Parse,
    /// Well-formed request that cannot be carried out in the current state.
    Invalid,
    Illegal,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Ok {
        ok: True,
        #[serde(flatten)]
        payload: Payload,
    },
    Error {
        ok: False,
        code: ErrorCode,
        error: String,
    },
}

/// Serializes as `true` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct True;

/// Serializes as `false` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct False;

macro_rules! bool_marker {
    ($t:ident, $v:expr) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_bool($v)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                if bool::deserialize(d)? == $v {
                    Ok($t)
                } else {
                    Err(serde::de::Error::custom(concat!("expected ", stringify!($v))))
                }
            }
        }
    };
}
bool_marker!(True, true);
bool_marker!(False, false);

impl Response {
    fn ok(payload: Payload) -> Self {
        Response::Ok { ok: True, payload }
    }

    fn err(code: ErrorCode, error: impl Into<String>) -> Self {
        Response::Error { ok: False, code, error: error.into() }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Response::Ok { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub search: SearchConfig,
    pub decision: DecisionConfig,
    pub engine: Engine,
    /// Depth limit for value searches behind `bestMove` / `delayMove`.
    pub max_n: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            search: SearchConfig::default(),
            decision: DecisionConfig::default(),
            engine: Engine::Search,
            max_n: 4,
        }
    }
}

/// One client's state.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: SessionConfig,
    position: Option<Position>,
}

fn search_err(e: SearchError) -> Response {
    match e {
        SearchError::NodeBudget(_) => Response::err(ErrorCode::Budget, e.to_string()),
        _ => Response::err(ErrorCode::Invalid, e.to_string()),
    }
}

fn decision_err(e: decision::DecisionError) -> Response {
    if e.is_budget() {
        Response::err(ErrorCode::Budget, e.to_string())
    } else {
        Response::err(ErrorCode::Invalid, e.to_string())
    }
}

fn moves_json(moves: &[Move]) -> Vec<MoveJson> {
    moves.iter().map(MoveJson::from_move).collect()
}

impl Session {
    pub fn new(config: SessionConfig) -> Self {
        Session { config, position: None }
    }

    pub fn position(&self) -> Option<&Position> {
        self.position.as_ref()
    }

    /// Handles one request line and returns one response line (without newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let resp = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => Response::err(ErrorCode::Parse, e.to_string()),
        };
        serde_json::to_string(&resp).expect("responses serialize")
    }

    pub fn handle(&mut self, req: Request) -> Response {
        if let Request::Load { position } = &req {
            return match parse_position(position) {
                Ok(p) => {
                    self.position = Some(p);
                    self.state()
                }
                Err(e) => Response::err(ErrorCode::Parse, e.to_string()),
            };
        }
        let Some(p) = self.position.clone() else {
            return Response::err(ErrorCode::Invalid, "no position loaded");
        };
        match req {
            Request::Load { .. } => unreachable!("handled above"),
            Request::State {} => self.state(),
            Request::LegalMoves { region } => legal_moves_in(&p, &region),
            Request::Move { piece, to } => {
                let m = match parse_square(&to) {
                    Ok(sq) => Move::new(piece, sq),
                    Err(e) => return Response::err(ErrorCode::Parse, e.to_string()),
                };
                match model::is_legal_move(&p, &m) {
                    Ok(true) => {
                        let next = model::apply_move(&p, &m).expect("legal move applies");
                        self.position = Some(next);
                        self.state()
                    }
                    Ok(false) => Response::err(ErrorCode::Illegal, format!("illegal move {m}")),
                    Err(e) => Response::err(ErrorCode::Illegal, e.to_string()),
                }
            }
            Request::Query { kind, n, k, player, engine } => {
                let player = player.map_or(p.turn, Color::from);
                let kind = match (kind, k) {
                    (Kind::Mate, _) => QueryKind::Mate,
                    (Kind::Stalemate, _) => QueryKind::Stalemate,
                    (Kind::Draw, Some(k)) => QueryKind::Draw { k },
                    (Kind::Draw, None) => return Response::err(ErrorCode::Invalid, "draw query needs k"),
                };
                self.query(&p, kind, player, n, engine.unwrap_or(self.config.engine))
            }
            Request::BestMove { max_n, engine } => {
                let max_n = max_n.unwrap_or(self.config.max_n);
                let mv = match engine.unwrap_or(self.config.engine) {
                    Engine::Search => search::best_move(&p, p.turn, max_n, &self.config.search).map_err(search_err),
                    Engine::Automata => {
                        let d = Decider::new(DecisionConfig { max_n, ..self.config.decision });
                        match d.minimal_value(&p, p.turn) {
                            Ok(Some(0)) | Ok(None) => Ok(None),
                            Ok(Some(_)) => d.best_move(&p, p.turn).map(Some).map_err(decision_err),
                            Err(e) => Err(decision_err(e)),
                        }
                    }
                };
                match mv {
                    Ok(mv) => Response::ok(Payload::BestMove { mv: mv.as_ref().map(MoveJson::from_move) }),
                    Err(r) => r,
                }
            }
            Request::DelayMove { player, max_n, engine } => {
                let player = player.map_or(p.turn.opponent(), Color::from);
                let max_n = max_n.unwrap_or(self.config.max_n);
                let mv = match engine.unwrap_or(self.config.engine) {
                    Engine::Search => search::delay_move(&p, player, max_n, &self.config.search).map_err(search_err),
                    Engine::Automata => Decider::new(self.config.decision)
                        .delay_move(&p, player, max_n)
                        .map_err(decision_err),
                };
                match mv {
                    Ok(mv) => Response::ok(Payload::DelayMove { mv: mv.as_ref().map(MoveJson::from_move) }),
                    Err(r) => r,
                }
            }
        }
    }

    fn state(&self) -> Response {
        let p = self.position.as_ref().expect("state needs a position");
        Response::ok(Payload::State {
            position: print_position(p),
            turn: p.turn.into(),
            checkmated: model::is_mated(p),
            stalemated: model::is_stalemated(p),
        })
    }

    fn query(&self, p: &Position, kind: QueryKind, player: Color, n: usize, engine: Engine) -> Response {
        match engine {
            Engine::Automata => {
                let q = Query { position: p.clone(), player, n, kind };
                match Decider::new(self.config.decision).decide(&q) {
                    Ok(r) => Response::ok(Payload::Result {
                        verdict: r.verdict,
                        method: Engine::Automata,
                        line: r.line.as_deref().map(moves_json),
                        minimal_n: r.minimal_n,
                        family: None,
                    }),
                    Err(e) => decision_err(e),
                }
            }
            Engine::Search => {
                let cfg = &self.config.search;
                let r = match kind {
                    QueryKind::Mate => search::solve_mate(p, player, n, cfg),
                    QueryKind::Stalemate => search::solve_stalemate(p, player, n, cfg),
                    QueryKind::Draw { k } => search::solve_draw(p, player, n, k, cfg),
                };
                match r {
                    Ok(o) => Response::ok(Payload::Result {
                        verdict: o.verdict,
                        method: Engine::Search,
                        line: o.line.as_ref().map(|l| moves_json(&l.moves)),
                        minimal_n: None,
                        family: o.family.as_ref().map(|f| f.iter().map(print_position).collect()),
                    }),
                    Err(e) => search_err(e),
                }
            }
        }
    }
}

/// Legal moves with targets inside `r`, plus the slider rays whose legal moves run on
/// past its edge.
pub fn legal_moves_in(p: &Position, r: &Region) -> Response {
    if r.x0 > r.x1 || r.y0 > r.y1 {
        return Response::err(ErrorCode::Invalid, "empty region");
    }
    let w = r.x1.abs_diff(r.x0) + 1;
    let h = r.y1.abs_diff(r.y0) + 1;
    if w > MAX_VIEWPORT || h > MAX_VIEWPORT {
        return Response::err(ErrorCode::Invalid, format!("region larger than {MAX_VIEWPORT} squares a side"));
    }
    let inside = |s: &Square| {
        s.x >= BigInt::from(r.x0) && s.x <= BigInt::from(r.x1) && s.y >= BigInt::from(r.y0) && s.y <= BigInt::from(r.y1)
    };
    let mut moves = Vec::new();
    let mut far = Vec::new();
    for (i, d) in p.live_pieces() {
        if d.color != p.turn {
            continue;
        }
        if !d.kind.is_slider() {
            // fixed-offset pieces: the model's candidates are all their moves
            for m in model::candidate_moves(p).into_iter().filter(|m| m.piece == i) {
                if inside(&m.target) && model::is_legal_move(p, &m).unwrap_or(false) {
                    moves.push(m);
                }
            }
            continue;
        }
        for &(dx, dy) in d.kind.ray_directions() {
            let Some((t0, t1)) = ray_window(&d.square, (dx, dy), r) else {
                continue;
            };
            let mut t = t0;
            let mut blocked = false;
            while t <= t1 {
                let sq = Square::new(&d.square.x + &t * dx, &d.square.y + &t * dy);
                blocked = p.occupant(&sq).is_some();
                let m = Move::new(i, sq);
                if model::is_legal_move(p, &m).unwrap_or(false) {
                    moves.push(m);
                }
                if blocked {
                    break;
                }
                t += 1;
            }
            // the ray continues past the viewport if the square after it is reachable
            let next = Square::new(&d.square.x + (&t1 + 1) * dx, &d.square.y + (&t1 + 1) * dy);
            if !blocked && model::is_legal_move(p, &Move::new(i, next.clone())).unwrap_or(false) {
                far.push(FarRay { piece: i, from: next.to_string(), direction: (dx, dy) });
            }
        }
    }
    Response::ok(Payload::LegalMoves { moves: moves_json(&moves), far })
}

/// Step range `[t0, t1]` (with `t0 ≥ 1`) on which the ray from `from` lies inside `r`.
fn ray_window(from: &Square, (dx, dy): (i64, i64), r: &Region) -> Option<(BigInt, BigInt)> {
    let axis = |p: &BigInt, d: i64, lo: i64, hi: i64| -> Option<(Option<BigInt>, Option<BigInt>)> {
        let (lo, hi) = (BigInt::from(lo), BigInt::from(hi));
        match d {
            0 => (p >= &lo && p <= &hi).then_some((None, None)),
            1 => Some((Some(&lo - p), Some(&hi - p))),
            _ => Some((Some(p - &hi), Some(p - &lo))),
        }
    };
    let (ax0, ax1) = axis(&from.x, dx, r.x0, r.x1)?;
    let (ay0, ay1) = axis(&from.y, dy, r.y0, r.y1)?;
    let t0 = [Some(BigInt::from(1)), ax0, ay0].into_iter().flatten().max()?;
    let t1 = [ax1, ay1].into_iter().flatten().min()?;
    (t0 <= t1).then_some((t0, t1))
}
