use crate::automata::TapeKind;

/// Tape numbering for `slots` positions of `n` pieces plus `extra` integer tapes.
///
/// Field `f` of slot `s` lives on tape `f * slots + s`, so the same field of different
/// positions sits on neighbouring tapes; with one slot this is the plain
/// turn / alive / x / y layout. Extra tapes follow all position tapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    pub pieces: usize,
    pub slots: usize,
    pub extra: usize,
}

impl Layout {
    pub fn new(pieces: usize, slots: usize, extra: usize) -> Self {
        Layout {
            pieces,
            slots,
            extra,
        }
    }

    pub fn fields(&self) -> usize {
        3 * self.pieces + 1
    }

    pub fn tape_count(&self) -> usize {
        self.fields() * self.slots + self.extra
    }

    pub fn tape(&self, slot: usize, field: usize) -> usize {
        debug_assert!(slot < self.slots && field < self.fields());
        field * self.slots + slot
    }

    pub fn turn(&self, slot: usize) -> usize {
        self.tape(slot, 0)
    }

    pub fn alive(&self, slot: usize, i: usize) -> usize {
        self.tape(slot, 3 * i + 1)
    }

    pub fn x(&self, slot: usize, i: usize) -> usize {
        self.tape(slot, 3 * i + 2)
    }

    pub fn y(&self, slot: usize, i: usize) -> usize {
        self.tape(slot, 3 * i + 3)
    }

    pub fn extra(&self, j: usize) -> usize {
        debug_assert!(j < self.extra);
        self.fields() * self.slots + j
    }

    pub fn field_kind(field: usize) -> TapeKind {
        if field % 3 == 2 || (field % 3 == 0 && field > 0) {
            TapeKind::Int
        } else {
            TapeKind::Bit
        }
    }

    pub fn kinds(&self) -> Vec<TapeKind> {
        let mut v = Vec::with_capacity(self.tape_count());
        for f in 0..self.fields() {
            v.extend(std::iter::repeat_n(Self::field_kind(f), self.slots));
        }
        v.extend(std::iter::repeat_n(TapeKind::Int, self.extra));
        v
    }

    /// Tapes of one slot, in field order.
    pub fn slot_tapes(&self, slot: usize) -> Vec<usize> {
        (0..self.fields()).map(|f| self.tape(slot, f)).collect()
    }
}
