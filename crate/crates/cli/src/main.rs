//! `infmate`: decide, solve and play mate-in-n problems of infinite chess.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use infmate_core::decision::{self, Decider, DecisionConfig, DecisionError, Query, QueryKind, ROOT};
use infmate_core::notation::{parse_position, NotationError};
use infmate_core::protocol::{Session, SessionConfig};
use infmate_core::search::{self, SearchConfig, SearchError};
use infmate_core::{Color, Move, Position};

#[derive(Parser)]
#[command(name = "infmate", version, about = "Mate-in-n for infinite chess")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum EngineArg {
    Automata,
    Search,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Mate,
    Stalemate,
    Draw,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlayerArg {
    W,
    B,
}

impl From<PlayerArg> for Color {
    fn from(p: PlayerArg) -> Color {
        match p {
            PlayerArg::W => Color::White,
            PlayerArg::B => Color::Black,
        }
    }
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Position in notation, or a file containing it.
    #[arg(long)]
    position: String,
    /// The side trying to win; defaults to the side to move.
    #[arg(long, value_enum)]
    player: Option<PlayerArg>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Mate)]
    kind: KindArg,
    /// Family size for draw queries.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineArg::Automata)]
    engine: EngineArg,
    #[arg(long, default_value_t = 8)]
    radius: u32,
    #[arg(long, default_value_t = 100_000_000)]
    max_nodes: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a mate, stalemate or draw query.
    Decide(Common),
    /// Least n ≤ --n for which the player mates in n.
    Value(Common),
    /// A value-reducing move for the side to move.
    BestMove(Common),
    /// A reply postponing the player's mate as long as possible.
    DelayMove(Common),
    /// Decide with the bounded-region search engine.
    Solve(Common),
    /// Write the query as an SMT-LIB linear integer arithmetic problem.
    ExportLia(Common),
    /// Serve the line-delimited JSON protocol.
    Serve {
        /// TCP port on 127.0.0.1; 0 picks a free port.
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Serve one session on stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
        #[arg(long, default_value_t = 8)]
        radius: u32,
        #[arg(long, default_value_t = 5_000_000)]
        max_nodes: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Notation(#[from] NotationError),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
    #[error("engines disagree: automata {automata}, search {search}")]
    Disagreement { automata: bool, search: bool },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Notation(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Disagreement { .. } => 4,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<DecisionError> for CliError {
    fn from(e: DecisionError) -> Self {
        match e {
            e if e.is_budget() => CliError::Budget(e.to_string()),
            DecisionError::InvalidQuery(m) => CliError::Parse(m),
            e => CliError::Failed(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NodeBudget(_) => CliError::Budget(e.to_string()),
            SearchError::InvalidPosition(_) | SearchError::InvalidQuery(_) | SearchError::InvalidConfig(_) => {
                CliError::Parse(e.to_string())
            }
            e => CliError::Failed(e.to_string()),
        }
    }
}

/// Structured output of every verdict-producing command.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Report {
    method: &'static str,
    verdict: Option<bool>,
    line: Option<Vec<String>>,
    minimal_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(rename = "move", skip_serializing_if = "Option::is_none")]
    mv: Option<Option<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Vec<String>>,
}

impl Report {
    fn new(method: &'static str) -> Self {
        Report { method, verdict: None, line: None, minimal_n: None, note: None, mv: None, family: None }
    }
}

fn load_position(arg: &str) -> Result<Position, CliError> {
    let text = if Path::new(arg).is_file() { fs::read_to_string(arg)? } else { arg.to_string() };
    Ok(parse_position(text.trim())?)
}

struct Ctx {
    position: Position,
    player: Color,
    kind: QueryKind,
    c: Common,
}

impl Ctx {
    fn new(c: Common) -> Result<Self, CliError> {
        let position = load_position(&c.position)?;
        let player = c.player.map_or(position.turn, Color::from);
        let kind = match (c.kind, c.k) {
            (KindArg::Mate, _) => QueryKind::Mate,
            (KindArg::Stalemate, _) => QueryKind::Stalemate,
            (KindArg::Draw, Some(k)) => QueryKind::Draw { k },
            (KindArg::Draw, None) => return Err(CliError::Parse("--kind draw needs --k".into())),
        };
        Ok(Ctx { position, player, kind, c })
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig { max_nodes: self.c.max_nodes, ..SearchConfig::with_radius(self.c.radius) }
    }

    fn decider(&self) -> Decider {
        Decider::new(DecisionConfig { max_n: self.c.n.max(DecisionConfig::default().max_n), ..Default::default() })
    }

    fn automata(&self) -> Result<bool, CliError> {
        let q = Query { position: self.position.clone(), player: self.player, n: self.c.n, kind: self.kind };
        Ok(self.decider().decide(&q)?.verdict)
    }

    fn search(&self) -> Result<search::SearchOutcome, CliError> {
        let cfg = self.search_config();
        let (p, pl, n) = (&self.position, self.player, self.c.n);
        Ok(match self.kind {
            QueryKind::Mate => search::solve_mate(p, pl, n, &cfg)?,
            QueryKind::Stalemate => search::solve_stalemate(p, pl, n, &cfg)?,
            QueryKind::Draw { k } => search::solve_draw(p, pl, n, k, &cfg)?,
        })
    }

    fn search_report(&self) -> Result<Report, CliError> {
        let out = self.search()?;
        let mut r = Report::new("search");
        r.verdict = Some(out.verdict);
        r.line = out.line.map(|l| l.moves.iter().map(Move::to_string).collect());
        r.family = out.family.map(|f| f.iter().map(infmate_core::notation::print_position).collect());
        if !out.verdict {
            r.note = Some(format!("no win within region {}", self.c.radius));
        }
        Ok(r)
    }
}

fn decide(ctx: &Ctx, engine: EngineArg) -> Result<Report, CliError> {
    match engine {
        EngineArg::Automata => {
            let mut r = Report::new("automata");
            r.verdict = Some(ctx.automata()?);
            Ok(r)
        }
        EngineArg::Search => ctx.search_report(),
        EngineArg::Both => {
            let automata = ctx.automata()?;
            let mut r = ctx.search_report()?;
            let search = r.verdict == Some(true);
            if automata != search {
                return Err(CliError::Disagreement { automata, search });
            }
            r.method = "both";
            r.note = None;
            Ok(r)
        }
    }
}

fn value(ctx: &Ctx) -> Result<Report, CliError> {
    let mut r;
    let v = if ctx.c.engine == EngineArg::Search {
        r = Report::new("search");
        search::minimal_value(&ctx.position, ctx.player, ctx.c.n, &ctx.search_config())?
    } else {
        r = Report::new("automata");
        Decider::new(DecisionConfig { max_n: ctx.c.n, ..Default::default() }).minimal_value(&ctx.position, ctx.player)?
    };
    r.verdict = Some(v.is_some());
    r.minimal_n = v;
    Ok(r)
}

fn best_move(ctx: &Ctx) -> Result<Report, CliError> {
    let p = &ctx.position;
    let (mut r, m) = if ctx.c.engine == EngineArg::Search {
        (Report::new("search"), search::best_move(p, p.turn, ctx.c.n, &ctx.search_config())?)
    } else {
        let d = Decider::new(DecisionConfig { max_n: ctx.c.n, ..Default::default() });
        let m = match d.minimal_value(p, p.turn)? {
            Some(v) if v > 0 => Some(d.best_move(p, p.turn)?),
            _ => None,
        };
        (Report::new("automata"), m)
    };
    r.verdict = Some(m.is_some());
    r.mv = Some(m.map(|m| m.to_string()));
    Ok(r)
}

fn delay_move(ctx: &Ctx) -> Result<Report, CliError> {
    let p = &ctx.position;
    let player = ctx.c.player.map_or(p.turn.opponent(), Color::from);
    let (mut r, m) = if ctx.c.engine == EngineArg::Search {
        (Report::new("search"), search::delay_move(p, player, ctx.c.n, &ctx.search_config())?)
    } else {
        (Report::new("automata"), ctx.decider().delay_move(p, player, ctx.c.n)?)
    };
    r.verdict = Some(m.is_some());
    r.mv = Some(m.map(|m| m.to_string()));
    Ok(r)
}

fn export_lia(ctx: &Ctx) -> Result<String, CliError> {
    let f = decision::query_formula(ctx.kind, ctx.player, ctx.c.n);
    let spec = ctx.position.spec().map_err(|e| CliError::Parse(e.to_string()))?;
    let bindings = [(ROOT, ctx.position.clone())].into_iter().collect();
    Ok(decision::export_lia(&f, &spec, &bindings)?)
}

fn print_report(r: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string(r).expect("report serializes")),
        Format::Text => {
            if let Some(m) = &r.mv {
                println!("{}", m.as_deref().unwrap_or("none"));
            } else if let Some(v) = r.minimal_n {
                println!("{v}");
            } else {
                println!("{}", if r.verdict == Some(true) { "true" } else { "false" });
            }
            if let Some(line) = &r.line {
                println!("line: {}", line.join(" "));
            }
            if let Some(f) = &r.family {
                for p in f {
                    println!("family: {p}");
                }
            }
            if let Some(note) = &r.note {
                println!("note: {note}");
            }
        }
    }
}

fn serve_stream(session: &mut Session, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", session.handle_line(&line))?;
        out.flush()?;
    }
    Ok(())
}

fn serve(port: u16, stdio: bool, config: SessionConfig) -> Result<(), CliError> {
    if stdio {
        let mut s = Session::new(config);
        return Ok(serve_stream(&mut s, io::stdin().lock(), io::stdout().lock())?);
    }
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    eprintln!("listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = stream?;
        let config = config.clone();
        thread::spawn(move || {
            let mut s = Session::new(config);
            let reader = BufReader::new(stream.try_clone()?);
            serve_stream(&mut s, reader, stream)
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { port, stdio, radius, max_nodes } => {
            let search = SearchConfig { max_nodes, ..SearchConfig::with_radius(radius) };
            serve(port, stdio, SessionConfig { search, ..Default::default() })
        }
        Command::ExportLia(c) => {
            let ctx = Ctx::new(c)?;
            print!("{}", export_lia(&ctx)?);
            Ok(())
        }
        Command::Decide(c) => report(c, |ctx| decide(ctx, ctx.c.engine)),
        Command::Solve(c) => report(c, |ctx| decide(ctx, EngineArg::Search)),
        Command::Value(c) => report(c, value),
        Command::BestMove(c) => report(c, best_move),
        Command::DelayMove(c) => report(c, delay_move),
    }
}

fn report(c: Common, f: impl FnOnce(&Ctx) -> Result<Report, CliError>) -> Result<(), CliError> {
    let format = c.format;
    let ctx = Ctx::new(c)?;
    print_report(&f(&ctx)?, format);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
