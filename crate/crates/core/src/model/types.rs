use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceType {
    King,
    Queen,
    Rook,
    Bishop,
    Knight,
    Pawn,
}

impl PieceType {
    pub const ALL: [PieceType; 6] = [
        PieceType::King,
        PieceType::Queen,
        PieceType::Rook,
        PieceType::Bishop,
        PieceType::Knight,
        PieceType::Pawn,
    ];

    pub fn is_slider(self) -> bool {
        matches!(self, PieceType::Queen | PieceType::Rook | PieceType::Bishop)
    }

    /// Unit ray directions for sliders; empty for the other pieces.
    pub fn ray_directions(self) -> &'static [(i64, i64)] {
        const ORTHO: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const DIAG: [(i64, i64); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
        const ALL: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            PieceType::Rook => &ORTHO,
            PieceType::Bishop => &DIAG,
            PieceType::Queen => &ALL,
            _ => &[],
        }
    }

    /// Upper-case letter for white, lower-case for black.
    pub fn letter(self, color: Color) -> char {
        let c = match self {
            PieceType::King => 'K',
            PieceType::Queen => 'Q',
            PieceType::Rook => 'R',
            PieceType::Bishop => 'B',
            PieceType::Knight => 'N',
            PieceType::Pawn => 'P',
        };
        match color {
            Color::White => c,
            Color::Black => c.to_ascii_lowercase(),
        }
    }

    pub fn from_letter(c: char) -> Option<(PieceType, Color)> {
        let color = if c.is_ascii_uppercase() {
            Color::White
        } else {
            Color::Black
        };
        let kind = match c.to_ascii_uppercase() {
            'K' => PieceType::King,
            'Q' => PieceType::Queen,
            'R' => PieceType::Rook,
            'B' => PieceType::Bishop,
            'N' => PieceType::Knight,
            'P' => PieceType::Pawn,
            _ => return None,
        };
        Some((kind, color))
    }
}

pub const KNIGHT_OFFSETS: [(i64, i64); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

pub const KING_OFFSETS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn opponent(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }

    /// Direction of pawn advance along the rank axis.
    pub fn pawn_direction(self) -> i64 {
        match self {
            Color::White => 1,
            Color::Black => -1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::White => "white",
            Color::Black => "black",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square {
    pub x: BigInt,
    pub y: BigInt,
}

impl Square {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        Square {
            x: x.into(),
            y: y.into(),
        }
    }

    /// The square recorded for captured pieces.
    pub fn captured_default() -> Self {
        Square {
            x: BigInt::zero(),
            y: BigInt::zero(),
        }
    }

    pub fn offset(&self, dx: i64, dy: i64) -> Square {
        Square {
            x: &self.x + dx,
            y: &self.y + dy,
        }
    }

    pub fn shifted(&self, dx: &BigInt, dy: &BigInt) -> Square {
        Square {
            x: &self.x + dx,
            y: &self.y + dy,
        }
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PieceDesignation {
    pub kind: PieceType,
    pub color: Color,
    pub alive: bool,
    pub square: Square,
}

impl PieceDesignation {
    pub fn live(kind: PieceType, color: Color, square: Square) -> Self {
        PieceDesignation {
            kind,
            color,
            alive: true,
            square,
        }
    }

    pub fn captured(kind: PieceType, color: Color) -> Self {
        PieceDesignation {
            kind,
            color,
            alive: false,
            square: Square::captured_default(),
        }
    }
}

/// Ordered list of piece types; fixes the component a position lives in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PieceSpec(Vec<(PieceType, Color)>);

impl PieceSpec {
    pub fn new(entries: Vec<(PieceType, Color)>) -> Result<Self, SpecError> {
        if entries.is_empty() {
            return Err(SpecError::Empty);
        }
        for color in [Color::White, Color::Black] {
            let kings = entries
                .iter()
                .filter(|&&(k, c)| k == PieceType::King && c == color)
                .count();
            if kings > 1 {
                return Err(SpecError::DuplicateKing(color));
            }
        }
        Ok(PieceSpec(entries))
    }

    /// Parses a compact letter string such as `"KQk"`.
    pub fn from_letters(s: &str) -> Result<Self, SpecError> {
        let entries = s
            .chars()
            .map(|c| PieceType::from_letter(c).ok_or(SpecError::BadLetter(c)))
            .collect::<Result<Vec<_>, _>>()?;
        PieceSpec::new(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(PieceType, Color)] {
        &self.0
    }

    pub fn get(&self, i: usize) -> (PieceType, Color) {
        self.0[i]
    }

    pub fn king_index(&self, color: Color) -> Option<usize> {
        self.0
            .iter()
            .position(|&(k, c)| k == PieceType::King && c == color)
    }

    pub fn letters(&self) -> String {
        self.0.iter().map(|&(k, c)| k.letter(c)).collect()
    }
}

impl fmt::Display for PieceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.letters())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("piece specification is empty")]
    Empty,
    #[error("more than one {0} king in piece specification")]
    DuplicateKing(Color),
    #[error("unknown piece letter {0:?}")]
    BadLetter(char),
}

/// A finite position: piece designations in specification order plus the side to move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Position {
    pub pieces: Vec<PieceDesignation>,
    pub turn: Color,
}

impl Position {
    pub fn new(pieces: Vec<PieceDesignation>, turn: Color) -> Self {
        Position { pieces, turn }
    }

    /// Piece specification read off the designations. Fails only on duplicate kings.
    pub fn spec(&self) -> Result<PieceSpec, SpecError> {
        PieceSpec::new(self.pieces.iter().map(|p| (p.kind, p.color)).collect())
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn live_pieces(&self) -> impl Iterator<Item = (usize, &PieceDesignation)> {
        self.pieces.iter().enumerate().filter(|(_, p)| p.alive)
    }

    pub fn king(&self, color: Color) -> Option<(usize, &PieceDesignation)> {
        self.pieces
            .iter()
            .enumerate()
            .find(|(_, p)| p.alive && p.kind == PieceType::King && p.color == color)
    }

    /// Index of the live piece standing on `s`, if any.
    pub fn occupant(&self, s: &Square) -> Option<usize> {
        self.pieces
            .iter()
            .position(|p| p.alive && p.square == *s)
    }

    pub fn with_turn(&self, turn: Color) -> Position {
        Position {
            pieces: self.pieces.clone(),
            turn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    pub piece: usize,
    pub target: Square,
}

impl Move {
    pub fn new(piece: usize, target: Square) -> Self {
        Move { piece, target }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}->{}", self.piece, self.target)
    }
}
