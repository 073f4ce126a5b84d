use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;

use crate::automata::{Linear, Qf, Rel};
use crate::chess_automata::relations::{color_bit, domain_qf, in_check_qf, one_move_qf};
use crate::chess_automata::{Layout, PositionCoding};
use crate::model::{PieceSpec, Position};

use super::formula::{Formula, Var};
use super::DecisionError;

/// Translation of a formula to an SMT-LIB 2 problem in linear integer arithmetic.
///
/// Every position variable becomes `3N + 1` integer constants named
/// `p_<var>_turn`, `p_<var>_<piece>_alive`, `p_<var>_<piece>_x`, `p_<var>_<piece>_y`.
/// Variables in `bindings` are replaced by the coordinates of their position; the
/// remaining free variables are declared and constrained to well-formed positions, so
/// the problem is satisfiable iff the formula holds for some such assignment.
pub fn export_lia(
    f: &Formula,
    spec: &PieceSpec,
    bindings: &BTreeMap<Var, Position>,
) -> Result<String, DecisionError> {
    let mut vars: Vec<Var> = Vec::new();
    collect_vars(f, &mut vars);
    for v in bindings.keys() {
        if !vars.contains(v) {
            vars.push(*v);
        }
    }
    let layout = Layout::new(spec.len(), vars.len().max(1), 0);
    let coding = PositionCoding::new(spec.clone());
    let mut constants = BTreeMap::new();
    for (v, p) in bindings {
        let s = vars.iter().position(|u| u == v).expect("collected");
        let values = coding.values(&[p], &[])?;
        let one = Layout::new(spec.len(), 1, 0);
        for field in 0..layout.fields() {
            constants.insert(layout.tape(s, field), values[one.tape(0, field)].clone());
        }
    }
    let ex = Exporter { spec, layout, vars, constants };

    let free: Vec<Var> = f
        .free_vars()
        .into_iter()
        .filter(|v| !bindings.contains_key(v))
        .collect();
    let mut out = String::new();
    out.push_str("(set-logic LIA)\n");
    for &v in &free {
        for name in ex.names(v) {
            let _ = writeln!(out, "(declare-const {name} Int)");
        }
    }
    let mut body = Vec::new();
    for &v in &free {
        body.push(ex.dom(v));
    }
    body.push(ex.formula(f)?);
    let _ = writeln!(out, "(assert {})", and(body));
    out.push_str("(check-sat)\n");
    Ok(out)
}

fn collect_vars(f: &Formula, out: &mut Vec<Var>) {
    let mut push = |v: &Var| {
        if !out.contains(v) {
            out.push(*v);
        }
    };
    match f {
        Formula::True | Formula::False => {}
        Formula::ToPlay(_, v) | Formula::InCheck(_, v) => push(v),
        Formula::OneMove(a, b) | Formula::PosEq(a, b) => {
            push(a);
            push(b);
        }
        Formula::Not(g) => collect_vars(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_vars(g, out)),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            push(v);
            collect_vars(g, out);
        }
    }
}

struct Exporter<'a> {
    spec: &'a PieceSpec,
    layout: Layout,
    vars: Vec<Var>,
    constants: BTreeMap<usize, BigInt>,
}

impl Exporter<'_> {
    fn slot(&self, v: Var) -> usize {
        self.vars.iter().position(|&u| u == v).expect("collected")
    }

    fn tape_name(&self, tape: usize) -> String {
        let slots = self.layout.slots;
        let (slot, field) = (tape % slots, tape / slots);
        let v = self.vars[slot];
        match field {
            0 => format!("p_{v}_turn"),
            f => {
                let i = (f - 1) / 3;
                let name = ["alive", "x", "y"][(f - 1) % 3];
                format!("p_{v}_{i}_{name}")
            }
        }
    }

    fn names(&self, v: Var) -> Vec<String> {
        self.layout
            .slot_tapes(self.slot(v))
            .into_iter()
            .map(|t| self.tape_name(t))
            .collect()
    }

    /// Bits are 0/1 and the position is well-formed.
    fn dom(&self, v: Var) -> String {
        let s = self.slot(v);
        let mut parts = Vec::new();
        let mut bits = vec![self.layout.turn(s)];
        bits.extend((0..self.spec.len()).map(|i| self.layout.alive(s, i)));
        for t in bits {
            let n = self.tape_name(t);
            parts.push(format!("(<= 0 {n})"));
            parts.push(format!("(<= {n} 1)"));
        }
        parts.push(self.qf(&domain_qf(&self.layout, s)));
        and(parts)
    }

    fn formula(&self, f: &Formula) -> Result<String, DecisionError> {
        let l = &self.layout;
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::ToPlay(c, v) => self.qf(&Qf::is_const(l.turn(self.slot(*v)), color_bit(*c))),
            Formula::InCheck(c, v) => self.qf(&in_check_qf(self.spec, l, self.slot(*v), *c)),
            Formula::OneMove(a, b) => self.qf(&one_move_qf(self.spec, l, self.slot(*a), self.slot(*b))),
            Formula::PosEq(a, b) => {
                let (sa, sb) = (self.slot(*a), self.slot(*b));
                self.qf(&Qf::and(
                    (0..l.fields()).map(|fi| Qf::eq(l.tape(sa, fi), l.tape(sb, fi))),
                ))
            }
            Formula::Not(g) => format!("(not {})", self.formula(g)?),
            Formula::And(gs) => and(gs.iter().map(|g| self.formula(g)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => or(gs.iter().map(|g| self.formula(g)).collect::<Result<_, _>>()?),
            Formula::Exists(v, g) => format!(
                "(exists ({}) {})",
                self.binders(*v),
                and(vec![self.dom(*v), self.formula(g)?])
            ),
            Formula::Forall(v, g) => format!(
                "(forall ({}) (=> {} {}))",
                self.binders(*v),
                self.dom(*v),
                self.formula(g)?
            ),
        })
    }

    fn binders(&self, v: Var) -> String {
        self.names(v)
            .iter()
            .map(|n| format!("({n} Int)"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn qf(&self, f: &Qf) -> String {
        match f {
            Qf::True => "true".into(),
            Qf::False => "false".into(),
            Qf::Atom(l) => self.linear(l),
            Qf::And(gs) => and(gs.iter().map(|g| self.qf(g)).collect()),
            Qf::Or(gs) => or(gs.iter().map(|g| self.qf(g)).collect()),
            Qf::Not(g) => format!("(not {})", self.qf(g)),
        }
    }

    fn linear(&self, l: &Linear) -> String {
        let mut c = BigInt::from(l.c);
        let mut terms = Vec::new();
        for &(t, a) in &l.terms {
            match self.constants.get(&t) {
                Some(value) => c -= value * BigInt::from(a),
                None => {
                    let n = self.tape_name(t);
                    terms.push(match a {
                        1 => n,
                        a => format!("(* {} {n})", numeral(&BigInt::from(a))),
                    });
                }
            }
        }
        let lhs = match terms.len() {
            0 => "0".to_string(),
            1 => terms.pop().expect("one term"),
            _ => format!("(+ {})", terms.join(" ")),
        };
        let rhs = numeral(&c);
        match l.rel {
            Rel::Eq => format!("(= {lhs} {rhs})"),
            Rel::Ne => format!("(not (= {lhs} {rhs}))"),
            Rel::Le => format!("(<= {lhs} {rhs})"),
            Rel::Lt => format!("(< {lhs} {rhs})"),
            Rel::Ge => format!("(>= {lhs} {rhs})"),
            Rel::Gt => format!("(> {lhs} {rhs})"),
        }
    }
}

fn numeral(c: &BigInt) -> String {
    if c.sign() == num_bigint::Sign::Minus {
        format!("(- {})", -c)
    } else {
        c.to_string()
    }
}

fn and(mut parts: Vec<String>) -> String {
    parts.retain(|p| p != "true");
    match parts.len() {
        0 => "true".into(),
        1 => parts.pop().expect("one part"),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or(mut parts: Vec<String>) -> String {
    parts.retain(|p| p != "false");
    match parts.len() {
        0 => "false".into(),
        1 => parts.pop().expect("one part"),
        _ => format!("(or {})", parts.join(" ")),
    }
}
