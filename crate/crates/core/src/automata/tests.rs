use num_bigint::BigInt;
use proptest::prelude::*;

use super::*;

fn b(v: i64) -> BigInt {
    BigInt::from(v)
}

fn acc(a: &SyncAutomaton, vals: &[i64]) -> bool {
    let v: Vec<BigInt> = vals.iter().map(|&x| b(x)).collect();
    a.accepts_values(&v).unwrap()
}

#[test]
fn encode_examples() {
    let w = encode_int(&b(0));
    assert!(!w.negative && w.bits.is_empty());
    assert_eq!(encode_int(&b(6)).bits, vec![false, true, true]);
    let w = encode_int(&b(-1));
    assert!(w.negative);
    assert_eq!(w.bits, vec![true]);
    assert_eq!(encode_int(&b(6)).to_string(), "+011");
    let bad = SignedWord {
        negative: false,
        bits: vec![true, false],
    };
    assert!(matches!(decode_int(&bad), Err(AutomataError::NonCanonical(_))));
    let minus_zero = SignedWord {
        negative: true,
        bits: vec![],
    };
    assert!(decode_int(&minus_zero).is_err());
}

#[test]
fn convolve_examples() {
    assert_eq!(convolve(&[b(0), b(0)]).to_string(), "+ / +");
    let t = convolve(&[b(6), b(-1)]);
    assert_eq!(t.len(), 4);
    assert_eq!(t.to_string(), "+011 / -1□□");
    assert_eq!(
        t.decode(&[TapeKind::Int, TapeKind::Int]).unwrap(),
        vec![b(6), b(-1)]
    );
}

#[test]
fn base_relation_examples() {
    let add = add_auto();
    assert!(acc(&add, &[1, 2, 3]));
    assert!(acc(&add, &[-1, 1, 0]));
    assert!(acc(&add, &[0, 0, 0]));
    assert!(acc(&add, &[2, 3, 5]));
    assert!(!acc(&add, &[2, 3, 6]));
    let lt = lt_auto();
    assert!(acc(&lt, &[-2, 3]));
    assert!(!acc(&lt, &[3, 3]));
    assert!(!acc(&lt, &[5, 2]));
    assert_eq!(const_auto(&b(-7)).witness(), Some(vec![b(-7)]));
    assert!(acc(&offset_auto(&b(4)), &[-3, 1]));
    assert!(!acc(&offset_auto(&b(4)), &[-3, 2]));
}

#[test]
fn base_relations_exhaustive_small() {
    let (eq, add, lt) = (eq_auto(), add_auto(), lt_auto());
    let offs: Vec<(i64, SyncAutomaton)> = (-3..=3).map(|d| (d, offset_auto(&b(d)))).collect();
    for x in -16i64..=16 {
        assert!(acc(&const_auto(&b(x)), &[x]));
        assert!(!acc(&const_auto(&b(x)), &[x + 1]));
        for y in -16i64..=16 {
            assert_eq!(acc(&eq, &[x, y]), x == y);
            assert_eq!(acc(&lt, &[x, y]), x < y);
            for (d, o) in &offs {
                assert_eq!(acc(o, &[x, y]), y == x + d);
            }
            for z in [x + y, x + y + 1, x - y, 0] {
                assert_eq!(acc(&add, &[x, y, z]), x + y == z);
            }
        }
    }
}

#[test]
fn huge_offset_and_constant() {
    let d: BigInt = BigInt::from(1u8) << 200usize;
    let o = offset_auto(&d);
    let x = -(BigInt::from(3u8) << 150usize);
    assert!(o.accepts_values(&[x.clone(), &x + &d]).unwrap());
    assert!(!o.accepts_values(&[x.clone(), &x + &d + 1]).unwrap());
    let c = const_auto(&-&d);
    assert_eq!(c.witness(), Some(vec![-d]));
}

#[test]
fn non_canonical_tuples_rejected() {
    let eq = eq_auto();
    let t = PaddedTuple {
        rows: vec![
            vec![Symbol::Plus, Symbol::One, Symbol::Zero],
            vec![Symbol::Plus, Symbol::One, Symbol::Pad],
        ],
    };
    assert!(!eq.accepts(&t).unwrap());
    let t = PaddedTuple {
        rows: vec![
            vec![Symbol::Plus, Symbol::One, Symbol::Pad],
            vec![Symbol::Plus, Symbol::One, Symbol::Pad],
        ],
    };
    assert!(eq.accepts(&t).unwrap());
    let ragged = PaddedTuple {
        rows: vec![vec![Symbol::Plus], vec![Symbol::Plus, Symbol::Pad]],
    };
    assert!(matches!(eq.accepts(&ragged), Err(AutomataError::Malformed(_))));
    assert!(matches!(
        eq.accepts(&convolve(&[b(1)])),
        Err(AutomataError::ArityMismatch { .. })
    ));
}

#[test]
fn boolean_laws() {
    let lt = lt_auto();
    let eq = eq_auto();
    let uni = format_domain(&[TapeKind::Int; 2], Repr::Canonical);
    assert!(lt.intersect(&uni).unwrap().equivalent(&lt).unwrap());
    assert!(lt.complement().complement().equivalent(&lt).unwrap());
    assert!(lt.union(&lt.complement()).unwrap().equivalent(&uni).unwrap());
    assert!(lt.intersect(&lt.complement()).unwrap().is_empty());
    // De Morgan
    let lhs = lt.union(&eq).unwrap().complement();
    let rhs = lt.complement().intersect(&eq.complement()).unwrap();
    assert!(lhs.equivalent(&rhs).unwrap());
    assert!(matches!(
        lt.intersect(&add_auto()),
        Err(AutomataError::ArityMismatch { .. })
    ));
}

#[test]
fn projection_examples() {
    let eq = eq_auto();
    let uni1 = format_domain(&[TapeKind::Int], Repr::Canonical);
    assert!(eq.project(0).unwrap().equivalent(&uni1).unwrap());
    // ∃y (x + y = 3 ∧ y = 1) is {2}
    let add = add_auto();
    let y1 = const_auto(&b(1))
        .cylindrify(0, TapeKind::Int)
        .unwrap()
        .cylindrify(2, TapeKind::Int)
        .unwrap();
    let z3 = const_auto(&b(3))
        .cylindrify(0, TapeKind::Int)
        .unwrap()
        .cylindrify(0, TapeKind::Int)
        .unwrap();
    let sys = add.intersect(&y1).unwrap().intersect(&z3).unwrap();
    let x = sys.project(2).unwrap().project(1).unwrap();
    assert!(acc(&x, &[2]));
    for v in [0, 1, 3] {
        assert!(!acc(&x, &[v]));
    }
    assert!(x.equivalent(&const_auto(&b(2))).unwrap());
    // weakening
    let back = eq.project(1).unwrap().cylindrify(1, TapeKind::Int).unwrap();
    assert!(eq.is_subset_of(&back).unwrap());
    assert!(matches!(
        eq.project(5),
        Err(AutomataError::TapeOutOfRange { .. })
    ));
}

#[test]
fn projection_needs_longer_witness() {
    // ∃y: y = x + 2^40 — the witness is much longer than x itself
    let d = BigInt::from(1u64 << 40);
    let o = offset_auto(&d);
    let p = o.project(1).unwrap();
    assert!(acc(&p, &[0]));
    assert!(acc(&p, &[-5]));
}

#[test]
fn addition_yields_subtraction() {
    let add = add_auto();
    for c in -3i64..=3 {
        let pin = const_auto(&b(c))
            .cylindrify(0, TapeKind::Int)
            .unwrap()
            .cylindrify(2, TapeKind::Int)
            .unwrap();
        let xz = add.intersect(&pin).unwrap().project(1).unwrap();
        assert!(xz.equivalent(&offset_auto(&b(c))).unwrap(), "c = {c}");
    }
}

#[test]
fn projection_distributes_over_union() {
    let lt = lt_auto().cylindrify(2, TapeKind::Int).unwrap();
    let add = add_auto();
    let lhs = lt.union(&add).unwrap().project(1).unwrap();
    let rhs = lt.project(1).unwrap().union(&add.project(1).unwrap()).unwrap();
    assert!(lhs.equivalent(&rhs).unwrap());
}

#[test]
fn minimize_properties() {
    let a = add_auto().union(&lt_auto().cylindrify(1, TapeKind::Int).unwrap()).unwrap();
    let m = a.minimize();
    assert_eq!(m.minimize().state_count(), m.state_count());
    assert!(m.equivalent(&a).unwrap());
    assert!(a.union(&a).unwrap().equivalent(&m).unwrap());
    assert_eq!(a.union(&a).unwrap().state_count(), m.state_count());
}

#[test]
fn witness_and_emptiness() {
    assert_eq!(lt_auto().witness(), Some(vec![b(0), b(1)]));
    let none = lt_auto().intersect(&lt_auto().complement()).unwrap();
    assert!(none.is_empty());
    assert_eq!(none.witness(), None);
    let w = add_auto().witness().unwrap();
    assert_eq!(&w[0] + &w[1], w[2]);
}

#[test]
fn text_dump_is_line_based() {
    let t = const_auto(&b(2)).to_text();
    assert!(t.starts_with("tapes int\nrepr canonical\n"));
    assert!(t.lines().any(|l| l.starts_with("accepting")));
    assert!(t.lines().any(|l| l.contains("t0:+")));
}

#[test]
fn qf_compile_matches_eval() {
    use TapeKind::{Bit, Int};
    let tapes = [Bit, Int, Int, Int];
    let f = Qf::or([
        Qf::and([Qf::is_const(0, 1), Qf::eq_off(1, 2, 3)]),
        Qf::and([
            Qf::not(Qf::is_const(0, 1)),
            Qf::lt(2, 3),
            Qf::not(Qf::eq(1, 3)),
        ]),
    ]);
    let a = compile_qf(&tapes, &f, &Limits::default()).unwrap();
    for bit in 0..2i64 {
        for x in -5i64..=5 {
            for y in -5i64..=5 {
                for z in [-2i64, 0, 3] {
                    let v = [b(bit), b(x), b(y), b(z)];
                    assert_eq!(a.accepts_values(&v).unwrap(), f.eval(&v), "{v:?}");
                }
            }
        }
    }
}

#[test]
fn budgets_are_reported() {
    let tight = Limits {
        max_states: 2,
        max_nodes: 1_000_000,
    };
    let r = add_auto().product(&add_auto().complement(), BoolOp::Or, &tight);
    assert!(matches!(r, Err(AutomataError::StateBudget { limit: 2 })));
    assert!(r.unwrap_err().is_budget());
}

fn wide() -> impl Strategy<Value = BigInt> {
    (any::<bool>(), any::<u64>(), 0u32..66).prop_map(|(neg, m, shift)| {
        let v = BigInt::from(m) >> (64 - shift.min(64));
        if neg {
            -v
        } else {
            v
        }
    })
}

proptest! {
    #[test]
    fn encode_decode_roundtrip(v in wide()) {
        let w = encode_int(&v);
        prop_assert!(w.is_canonical());
        prop_assert_eq!(decode_int(&w).unwrap(), v);
    }

    #[test]
    fn convolve_decode_roundtrip(vs in proptest::collection::vec(wide(), 1..5)) {
        let t = convolve(&vs);
        prop_assert!(t.rows.iter().any(|r| r.last() != Some(&Symbol::Pad)));
        prop_assert_eq!(t.decode(&vec![TapeKind::Int; vs.len()]).unwrap(), vs);
    }

    #[test]
    fn add_and_lt_agree_with_bigint(x in wide(), y in wide(), d in -2i64..3) {
        let z = &x + &y + d;
        prop_assert_eq!(
            add_auto().accepts_values(&[x.clone(), y.clone(), z]).unwrap(),
            d == 0
        );
        prop_assert_eq!(lt_auto().accepts_values(&[x.clone(), y.clone()]).unwrap(), x < y);
    }

    #[test]
    fn linear_atoms_agree(
        a in -3i128..4, c2 in -3i128..4, k in -20i128..20,
        rel in prop_oneof![Just(Rel::Eq), Just(Rel::Ne), Just(Rel::Le), Just(Rel::Lt), Just(Rel::Ge), Just(Rel::Gt)],
        x in -40i64..40, y in -40i64..40,
    ) {
        let l = Linear::new([(0, a), (1, c2)], rel, k);
        let f = Qf::Atom(l.clone());
        let auto = compile_qf(&[TapeKind::Int, TapeKind::Int], &f, &Limits::default()).unwrap();
        let v = [b(x), b(y)];
        prop_assert_eq!(auto.accepts_values(&v).unwrap(), l.eval(&v));
    }
}
