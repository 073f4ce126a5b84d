//! Multi-terminal decision diagrams over the bits of one column.
//!
//! Variable `3*tape + b` is bit `b` (0 = most significant) of the tape's symbol code.
//! Terminals are automaton states.

use rustc_hash::FxHashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

const LEAF: u32 = 1 << 31;

impl NodeId {
    pub fn leaf(state: u32) -> NodeId {
        debug_assert!(state < LEAF);
        NodeId(state | LEAF)
    }

    pub fn is_leaf(self) -> bool {
        self.0 & LEAF != 0
    }

    /// State of a terminal; meaningless for inner nodes.
    pub fn state(self) -> u32 {
        self.0 & !LEAF
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub var: u32,
    pub lo: NodeId,
    pub hi: NodeId,
}

/// Hash-consing node store.
#[derive(Debug, Default, Clone)]
pub struct Arena {
    pub(crate) nodes: Vec<Node>,
    unique: FxHashMap<Node, NodeId>,
}

impl Arena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        assert!(id.0 < LEAF, "decision diagram arena overflow");
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    /// Multiplexer on the three code bits of `tape`: `targets[code]` is taken for each code.
    pub fn tape_switch(&mut self, tape: usize, targets: &[NodeId; 8]) -> NodeId {
        let v = 3 * tape as u32;
        let mut level2 = [NodeId(0); 4];
        for (i, slot) in level2.iter_mut().enumerate() {
            *slot = self.mk(v + 2, targets[2 * i], targets[2 * i + 1]);
        }
        let a = self.mk(v + 1, level2[0], level2[1]);
        let b = self.mk(v + 1, level2[2], level2[3]);
        self.mk(v, a, b)
    }

    /// `then` when the tape's code is in `allowed` (bit mask over codes), else `otherwise`.
    pub fn guard(&mut self, tape: usize, allowed: u8, then: NodeId, otherwise: NodeId) -> NodeId {
        let mut t = [otherwise; 8];
        for (c, slot) in t.iter_mut().enumerate() {
            if allowed & (1 << c) != 0 {
                *slot = then;
            }
        }
        self.tape_switch(tape, &t)
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }
}

/// Read-only view used by the automaton: follows one column of codes to a terminal.
pub fn eval(nodes: &[Node], mut id: NodeId, codes: &[u8]) -> u32 {
    while !id.is_leaf() {
        let n = nodes[id.index()];
        let tape = (n.var / 3) as usize;
        let bit = 2 - n.var % 3;
        id = if (codes[tape] >> bit) & 1 == 1 {
            n.hi
        } else {
            n.lo
        };
    }
    id.state()
}

/// Distinct terminals reachable from `root`, in first-visit order with lo before hi.
pub fn leaves(nodes: &[Node], root: NodeId) -> Vec<u32> {
    let mut seen = rustc_hash::FxHashSet::default();
    let mut found = rustc_hash::FxHashSet::default();
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if id.is_leaf() {
            if found.insert(id.state()) {
                out.push(id.state());
            }
        } else if seen.insert(id) {
            let n = nodes[id.index()];
            stack.push(n.hi);
            stack.push(n.lo);
        }
    }
    out
}

pub const SYM_ZERO: u8 = 0b000;
pub const SYM_ONE: u8 = 0b001;
pub const SYM_PAD: u8 = 0b010;
pub const SYM_PLUS: u8 = 0b100;
pub const SYM_MINUS: u8 = 0b101;

pub const fn mask(codes: &[u8]) -> u8 {
    let mut m = 0u8;
    let mut i = 0;
    while i < codes.len() {
        m |= 1 << codes[i];
        i += 1;
    }
    m
}
