use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};

use super::AutomataError;

/// Tape alphabet. Every tape symbol is coded on three BDD variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Zero,
    One,
    Pad,
    Plus,
    Minus,
}

impl Symbol {
    pub const ALL: [Symbol; 5] = [
        Symbol::Zero,
        Symbol::One,
        Symbol::Pad,
        Symbol::Plus,
        Symbol::Minus,
    ];

    /// Three-bit code; the most significant bit is read first.
    pub const fn code(self) -> u8 {
        match self {
            Symbol::Zero => 0b000,
            Symbol::One => 0b001,
            Symbol::Pad => 0b010,
            Symbol::Plus => 0b100,
            Symbol::Minus => 0b101,
        }
    }

    pub fn from_code(c: u8) -> Option<Symbol> {
        Some(match c {
            0b000 => Symbol::Zero,
            0b001 => Symbol::One,
            0b010 => Symbol::Pad,
            0b100 => Symbol::Plus,
            0b101 => Symbol::Minus,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Pad => '□',
            Symbol::Plus => '+',
            Symbol::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        Some(match c {
            '0' => Symbol::Zero,
            '1' => Symbol::One,
            '□' | '_' => Symbol::Pad,
            '+' => Symbol::Plus,
            '-' | '−' => Symbol::Minus,
            _ => return None,
        })
    }
}

/// What a tape carries: a signed integer or a single bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TapeKind {
    Int,
    Bit,
}

/// Canonical signed-binary word: sign plus magnitude bits, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedWord {
    pub negative: bool,
    pub bits: Vec<bool>,
}

impl SignedWord {
    pub fn is_canonical(&self) -> bool {
        match self.bits.last() {
            None => !self.negative,
            Some(&b) => b,
        }
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.bits.len() + 1);
        out.push(if self.negative {
            Symbol::Minus
        } else {
            Symbol::Plus
        });
        out.extend(
            self.bits
                .iter()
                .map(|&b| if b { Symbol::One } else { Symbol::Zero }),
        );
        out
    }
}

impl fmt::Display for SignedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.symbols() {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

pub fn encode_int(v: &BigInt) -> SignedWord {
    let negative = v.sign() == Sign::Minus;
    let mag = v.magnitude();
    let bits = (0..mag.bits()).map(|i| mag.bit(i)).collect();
    SignedWord { negative, bits }
}

pub fn decode_int(w: &SignedWord) -> Result<BigInt, AutomataError> {
    if !w.is_canonical() {
        return Err(AutomataError::NonCanonical(w.to_string()));
    }
    Ok(magnitude_value(&w.bits, w.negative))
}

fn magnitude_value(bits: &[bool], negative: bool) -> BigInt {
    let mut v = BigInt::zero();
    for &b in bits.iter().rev() {
        v <<= 1;
        if b {
            v += BigInt::one();
        }
    }
    if negative {
        -v
    } else {
        v
    }
}

/// Equal-length rows, one per tape, each a word followed by padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PaddedTuple {
    pub rows: Vec<Vec<Symbol>>,
}

impl PaddedTuple {
    pub fn arity(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column `j` as symbol codes, one per tape.
    pub(crate) fn column(&self, j: usize) -> Vec<u8> {
        self.rows.iter().map(|r| r[j].code()).collect()
    }

    fn check_shape(&self) -> Result<(), AutomataError> {
        let n = self.len();
        if n == 0 || self.rows.iter().any(|r| r.len() != n) {
            return Err(AutomataError::Malformed(
                "rows must be non-empty and of equal length".into(),
            ));
        }
        Ok(())
    }

    /// Decodes each row under its tape kind, rejecting anything but word-then-padding.
    pub fn decode(&self, kinds: &[TapeKind]) -> Result<Vec<BigInt>, AutomataError> {
        self.check_shape()?;
        if kinds.len() != self.arity() {
            return Err(AutomataError::ArityMismatch {
                expected: kinds.len(),
                found: self.arity(),
            });
        }
        self.rows
            .iter()
            .zip(kinds)
            .map(|(row, &k)| decode_row(row, k))
            .collect()
    }
}

impl fmt::Display for PaddedTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(" / ")?;
            }
            for s in row {
                write!(f, "{}", s.as_char())?;
            }
        }
        Ok(())
    }
}

fn decode_row(row: &[Symbol], kind: TapeKind) -> Result<BigInt, AutomataError> {
    let bad = || AutomataError::Malformed(format!("bad {kind:?} row {row:?}"));
    let body_len = row
        .iter()
        .position(|&s| s == Symbol::Pad)
        .unwrap_or(row.len());
    if row[body_len..].iter().any(|&s| s != Symbol::Pad) {
        return Err(bad());
    }
    let body = &row[..body_len];
    match kind {
        TapeKind::Bit => match body {
            [Symbol::Zero] => Ok(BigInt::zero()),
            [Symbol::One] => Ok(BigInt::one()),
            _ => Err(bad()),
        },
        TapeKind::Int => {
            let (sign, rest) = body.split_first().ok_or_else(bad)?;
            let negative = match sign {
                Symbol::Plus => false,
                Symbol::Minus => true,
                _ => return Err(bad()),
            };
            let bits = rest
                .iter()
                .map(|&s| match s {
                    Symbol::Zero => Ok(false),
                    Symbol::One => Ok(true),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            decode_int(&SignedWord { negative, bits })
        }
    }
}

/// Loose reading used for witnesses: padding inside a row counts as a zero digit.
pub(crate) fn decode_row_loose(row: &[Symbol], kind: TapeKind) -> BigInt {
    match kind {
        TapeKind::Bit => BigInt::from(u8::from(row.first() == Some(&Symbol::One))),
        TapeKind::Int => {
            let negative = row.first() == Some(&Symbol::Minus);
            let bits: Vec<bool> = row.iter().skip(1).map(|&s| s == Symbol::One).collect();
            magnitude_value(&bits, negative)
        }
    }
}

/// Encodes integer values on integer tapes and pads to a common length.
pub fn convolve(values: &[BigInt]) -> PaddedTuple {
    let rows: Vec<Vec<Symbol>> = values.iter().map(|v| encode_int(v).symbols()).collect();
    pad_rows(rows)
}

/// Like [`convolve`] but with per-tape kinds; bit tapes take 0 or 1.
pub fn convolve_typed(values: &[(TapeKind, BigInt)]) -> Result<PaddedTuple, AutomataError> {
    let rows = values
        .iter()
        .map(|(k, v)| match k {
            TapeKind::Int => Ok(encode_int(v).symbols()),
            TapeKind::Bit if v.is_zero() => Ok(vec![Symbol::Zero]),
            TapeKind::Bit if v.is_one() => Ok(vec![Symbol::One]),
            TapeKind::Bit => Err(AutomataError::Malformed(format!("bit tape value {v}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pad_rows(rows))
}

fn pad_rows(mut rows: Vec<Vec<Symbol>>) -> PaddedTuple {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    for r in &mut rows {
        r.resize(n, Symbol::Pad);
    }
    PaddedTuple { rows }
}
