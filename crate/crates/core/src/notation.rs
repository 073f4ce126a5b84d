//! Text form of positions: `w: Q(1,2) R(4,3) K(19,4) k(5,4)`.
//!
//! The order of the entries is the piece specification; a captured piece is written
//! as its letter followed by `!`.

use std::fmt::Write;

use num_bigint::BigInt;

use crate::model::{validate_position, Color, PieceDesignation, PieceType, Position, Square};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NotationError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid position: {0}")]
    Invalid(String),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, NotationError> {
        Err(NotationError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += self.peek().map_or(0, char::len_utf8);
        }
    }

    fn expect(&mut self, c: char) -> Result<(), NotationError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn int(&mut self) -> Result<BigInt, NotationError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some('-' | '+')) {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = start;
            return self.err("expected an integer");
        }
        Ok(self.text[start..self.pos].parse().expect("validated digits"))
    }
}

/// Parses a position and checks it against the position invariants.
pub fn parse_position(text: &str) -> Result<Position, NotationError> {
    let mut c = Cursor { text, pos: 0 };
    c.skip_ws();
    let turn = match c.peek() {
        Some('w') => Color::White,
        Some('b') => Color::Black,
        _ => return c.err("expected side to move 'w' or 'b'"),
    };
    c.pos += 1;
    c.expect(':')?;
    let mut pieces = Vec::new();
    loop {
        c.skip_ws();
        let Some(ch) = c.peek() else { break };
        let Some((kind, color)) = PieceType::from_letter(ch) else {
            return c.err(format!("unknown piece letter '{ch}'"));
        };
        c.pos += ch.len_utf8();
        c.skip_ws();
        if c.peek() == Some('!') {
            c.pos += 1;
            pieces.push(PieceDesignation::captured(kind, color));
            continue;
        }
        c.expect('(')?;
        let x = c.int()?;
        c.expect(',')?;
        let y = c.int()?;
        c.expect(')')?;
        pieces.push(PieceDesignation::live(kind, color, Square { x, y }));
    }
    if pieces.is_empty() {
        return c.err("expected at least one piece");
    }
    let p = Position::new(pieces, turn);
    validate_position(&p).map_err(|v| {
        NotationError::Invalid(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    })?;
    Ok(p)
}

/// Canonical text of a position.
pub fn print_position(p: &Position) -> String {
    let mut out = String::from(match p.turn {
        Color::White => "w:",
        Color::Black => "b:",
    });
    for d in &p.pieces {
        out.push(' ');
        out.push(d.kind.letter(d.color));
        if d.alive {
            let _ = write!(out, "{}", d.square);
        } else {
            out.push('!');
        }
    }
    out
}

/// Parses a square written `(x,y)`.
pub fn parse_square(text: &str) -> Result<Square, NotationError> {
    let mut c = Cursor { text, pos: 0 };
    c.expect('(')?;
    let x = c.int()?;
    c.expect(',')?;
    let y = c.int()?;
    c.expect(')')?;
    c.skip_ws();
    if c.pos != text.len() {
        return c.err("trailing input");
    }
    Ok(Square { x, y })
}
