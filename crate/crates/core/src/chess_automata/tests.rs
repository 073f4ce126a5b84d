use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{Limits, TapeKind};
use crate::model::{
    apply_move, attacks, in_check, is_legal_move, legal_candidate_moves, move_between,
    PieceType, KING_OFFSETS,
};

fn spec(s: &str) -> PieceSpec {
    PieceSpec::from_letters(s).unwrap()
}

fn position(spec: &PieceSpec, squares: &[Option<(i64, i64)>], turn: Color) -> Position {
    let pieces = spec
        .entries()
        .iter()
        .zip(squares)
        .map(|(&(k, c), s)| match s {
            Some((x, y)) => PieceDesignation::live(k, c, Square::new(*x, *y)),
            None => PieceDesignation::captured(k, c),
        })
        .collect();
    Position::new(pieces, turn)
}

fn random_position(rng: &mut ChaCha8Rng, spec: &PieceSpec, base: i64, spread: i64) -> Position {
    loop {
        let (bx, by) = (rng.gen_range(-base..=base), rng.gen_range(-base..=base));
        let squares: Vec<Option<(i64, i64)>> = spec
            .entries()
            .iter()
            .map(|&(k, _)| {
                if k != PieceType::King && rng.gen_ratio(1, 8) {
                    None
                } else {
                    Some((bx + rng.gen_range(-spread..=spread), by + rng.gen_range(-spread..=spread)))
                }
            })
            .collect();
        let turn = if rng.gen_bool(0.5) { Color::White } else { Color::Black };
        let p = position(spec, &squares, turn);
        if validate_position(&p).is_ok() {
            return p;
        }
    }
}

/// `q` follows `p` by one legal move, straight from the reference rules.
fn one_move_oracle(p: &Position, q: &Position) -> bool {
    match move_between(p, q) {
        Some(m) => is_legal_move(p, &m).unwrap() && apply_move(p, &m).unwrap() == *q,
        None => false,
    }
}

/// Successor candidates of `p`: every legal successor, plus near misses.
fn successors_and_misses(rng: &mut ChaCha8Rng, p: &Position) -> Vec<Position> {
    let mut out: Vec<Position> = legal_candidate_moves(p)
        .iter()
        .map(|m| apply_move(p, m).unwrap())
        .collect();
    for _ in 0..4 {
        let live: Vec<usize> = p.live_pieces().map(|(i, _)| i).collect();
        let i = live[rng.gen_range(0..live.len())];
        let (dx, dy) = KING_OFFSETS[rng.gen_range(0..8)];
        let mut q = p.with_turn(p.turn.opponent());
        q.pieces[i].square = p.pieces[i].square.offset(dx * rng.gen_range(1..4), dy);
        if validate_position(&q).is_ok() {
            out.push(q.clone());
            // same relocation without the turn change is never a move
            out.push(q.with_turn(p.turn));
        }
    }
    out
}

fn cache() -> &'static RelationCache {
    // small enough that every relation is ready in seconds; larger ones run lazily
    static CACHE: OnceLock<RelationCache> = OnceLock::new();
    CACHE.get_or_init(|| {
        RelationCache::new(Limits {
            max_states: 20_000,
            max_nodes: 2_000_000,
        })
    })
}

#[test]
fn encode_decode_examples() {
    let s = spec("KQk");
    let p = position(&s, &[Some((19, 4)), None, Some((-5, 4))], Color::Black);
    let c = PositionCoding::new(s.clone());
    let t = c.encode(&p).unwrap();
    assert_eq!(t.arity(), 10);
    assert_eq!(c.decode(&t).unwrap(), p);
    assert_eq!(encode_position(&p).unwrap(), t);
    let v = c.values(&[&p], &[]).unwrap();
    assert_eq!(v[0], BigInt::from(1)); // black to play
    assert_eq!(v[4], BigInt::from(0)); // captured queen
    assert_eq!(v[9], BigInt::from(4));

    let other = position(&spec("KRk"), &[Some((0, 0)), Some((1, 1)), Some((5, 5))], Color::White);
    assert_eq!(c.encode(&other), Err(CodingError::SpecMismatch));
    let stacked = position(&s, &[Some((0, 0)), Some((0, 0)), Some((5, 5))], Color::White);
    assert!(matches!(c.encode(&stacked), Err(CodingError::Invalid(_))));
}

#[test]
fn layout_interleaves_slots() {
    let l = Layout::new(2, 3, 1);
    assert_eq!(l.tape_count(), 7 * 3 + 1);
    assert_eq!(l.turn(2), 2);
    assert_eq!(l.alive(0, 1), 12);
    assert_eq!(l.x(1, 0), 7);
    assert_eq!(l.extra(0), 21);
    let kinds = l.kinds();
    assert_eq!(kinds[l.turn(1)], TapeKind::Bit);
    assert_eq!(kinds[l.y(2, 1)], TapeKind::Int);
    assert_eq!(l.slot_tapes(1), (0..7).map(|f| 3 * f + 1).collect::<Vec<_>>());
}

#[test]
fn domain_rejects_malformed_positions() {
    let s = spec("KRk");
    let d = domain_auto(&s).unwrap();
    let c = PositionCoding::new(s.clone());
    let p = position(&s, &[Some((0, 0)), None, Some((3, -2))], Color::White);
    assert!(d.accepts(&c.encode(&p).unwrap()).unwrap());
    let mut v = c.values(&[&p], &[]).unwrap();
    // captured rook off the default square
    v[l1(&s).x(0, 1)] = BigInt::from(7);
    assert!(!d.accepts_values(&v).unwrap());
    // two live pieces on one square
    let mut v = c.values(&[&p], &[]).unwrap();
    v[l1(&s).y(0, 2)] = BigInt::from(0);
    v[l1(&s).x(0, 2)] = BigInt::from(0);
    assert!(!d.accepts_values(&v).unwrap());
}

fn l1(s: &PieceSpec) -> Layout {
    Layout::new(s.len(), 1, 0)
}

#[test]
fn kk_exhaustive_in_small_window() {
    let s = spec("Kk");
    let c = cache();
    let attack: Vec<_> = (0..2).map(|i| c.attack(&s, i).unwrap()).collect();
    let check: Vec<_> = [Color::White, Color::Black]
        .map(|col| c.in_check(&s, col).unwrap())
        .into();
    let one = c.one_move(&s, false).unwrap();
    assert!(one.is_explicit());
    let mut positions = Vec::new();
    for turn in [Color::White, Color::Black] {
        for a in 0..9i64 {
            for b in 0..9i64 {
                if a != b {
                    let sq = |k: i64| Some((k % 3 - 1, k / 3 - 1));
                    positions.push(position(&s, &[sq(a), sq(b)], turn));
                }
            }
        }
    }
    for p in &positions {
        for (i, h) in attack.iter().enumerate() {
            for tx in -2..=2i64 {
                for ty in -2..=2i64 {
                    let t = Square::new(tx, ty);
                    let extra = [BigInt::from(tx), BigInt::from(ty)];
                    assert_eq!(h.accepts(&[p], &extra).unwrap(), attacks(p, i, &t).unwrap());
                }
            }
        }
        for (h, col) in check.iter().zip([Color::White, Color::Black]) {
            assert_eq!(h.accepts(&[p], &[]).unwrap(), in_check(p, col));
        }
        for q in &positions {
            assert_eq!(one.accepts(&[p, q], &[]).unwrap(), one_move_oracle(p, q), "{p:?} -> {q:?}");
        }
    }
}

fn agree_on_samples(letters: &str, samples: usize, seed: u64) {
    let s = spec(letters);
    let c = cache();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = c.one_move(&s, false).unwrap();
    for _ in 0..samples {
        let p = random_position(&mut rng, &s, 1 << 16, 4);
        for col in [Color::White, Color::Black] {
            let h = c.in_check(&s, col).unwrap();
            assert_eq!(h.accepts(&[&p], &[]).unwrap(), in_check(&p, col), "{p:?}");
        }
        let i = rng.gen_range(0..s.len());
        let h = c.attack(&s, i).unwrap();
        let (dx, dy) = (rng.gen_range(-5..=5i64), rng.gen_range(-5..=5i64));
        let base = if p.pieces[i].alive { &p.pieces[i].square } else { &p.pieces[0].square };
        let t = base.offset(dx, dy);
        assert_eq!(
            h.accepts(&[&p], &[t.x.clone(), t.y.clone()]).unwrap(),
            attacks(&p, i, &t).unwrap(),
            "{p:?} piece {i} to {t:?}"
        );
        for q in successors_and_misses(&mut rng, &p) {
            assert_eq!(one.accepts(&[&p, &q], &[]).unwrap(), one_move_oracle(&p, &q), "{p:?} -> {q:?}");
        }
    }
}

#[test]
fn relations_agree_with_rules_knight() {
    agree_on_samples("KNk", 60, 1);
}

#[test]
fn relations_agree_with_rules_pawn() {
    agree_on_samples("KPk", 60, 2);
}

#[test]
fn relations_agree_with_rules_rook() {
    agree_on_samples("KRk", 60, 3);
}

#[test]
fn no_successor_from_stalemate() {
    // the trapped king of the Figure-1 stalemate line
    let p = crate::notation::parse_position("b: Q(4,6) R(7,3) K(7,4) k(5,4)").unwrap();
    assert!(crate::model::is_stalemated(&p));
    let s = p.spec().unwrap();
    let one = cache().one_move(&s, false).unwrap();
    for i in 0..s.len() {
        for dx in -3..=3i64 {
            for dy in -3..=3i64 {
                let mut q = p.with_turn(Color::White);
                q.pieces[i].square = p.pieces[i].square.offset(dx, dy);
                if validate_position(&q).is_ok() {
                    assert!(!one.accepts(&[&p, &q], &[]).unwrap(), "{q:?}");
                }
            }
        }
    }
}

#[test]
fn one_move_flips_the_turn() {
    let s = spec("Kk");
    let c = cache();
    let one = c.one_move(&s, false).unwrap();
    let a = one.automaton().unwrap();
    let l = one.layout;
    let flip = compile_qf(&l.kinds(), &Qf::atom([(l.turn(0), 1), (l.turn(1), 1)], crate::automata::Rel::Eq, 1), &Limits::default()).unwrap();
    assert!(a.is_subset_of(&flip).unwrap());
    // restricted to white to play it is the union over white pieces only
    let white = compile_qf(&l.kinds(), &Qf::is_const(l.turn(0), 0), &Limits::default()).unwrap();
    let restricted = a.intersect(&white).unwrap().minimize();
    let own = c.one_move_piece(&s, 0, false).unwrap();
    let own = own.automaton().unwrap().intersect(&white).unwrap().minimize();
    assert!(restricted.equivalent(&own).unwrap());
}

#[test]
fn relations_stay_in_the_domain() {
    let c = cache();
    for letters in ["Kk", "KNk"] {
        let s = spec(letters);
        let d = c.domain(&s, 1).unwrap();
        let d = d.automaton().unwrap();
        for col in [Color::White, Color::Black] {
            let check = c.in_check(&s, col).unwrap();
            assert!(check.automaton().unwrap().is_subset_of(d).unwrap());
        }
    }
    let s = spec("Kk");
    let one = c.one_move(&s, false).unwrap();
    let d2 = c.domain(&s, 2).unwrap();
    assert!(one.automaton().unwrap().is_subset_of(d2.automaton().unwrap()).unwrap());
}

#[test]
fn cache_returns_shared_handles() {
    let s = spec("Kk");
    let a = cache().attack(&s, 0).unwrap();
    let b = cache().attack(&s, 0).unwrap();
    assert!(Arc::ptr_eq(&a, &b));
    let handles: Vec<_> = std::thread::scope(|sc| {
        let js: Vec<_> = (0..3)
            .map(|_| sc.spawn(|| cache().in_check(&s, Color::White).unwrap()))
            .collect();
        js.into_iter().map(|j| j.join().unwrap()).collect()
    });
    assert!(handles.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1])));
}

#[test]
fn lazy_and_explicit_representations_agree() {
    let s = spec("KRk");
    let l = Layout::new(s.len(), 1, 0);
    let f = in_check_qf(&s, &l, 0, Color::Black);
    let explicit = compile_qf(&l.kinds(), &f, &Limits::default()).unwrap();
    let lazy = LazyProduct::new(&l.kinds(), &f, &Limits::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let p = random_position(&mut rng, &s, 1000, 3);
        let t = PositionCoding::new(s.clone()).encode(&p).unwrap();
        assert_eq!(explicit.accepts(&t).unwrap(), lazy.accepts(&t).unwrap());
        assert_eq!(lazy.accepts(&t).unwrap(), in_check(&p, Color::Black));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_roundtrip(seed in any::<u64>(), base in 0i64..1 << 40) {
        let s = spec("KQRk");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_position(&mut rng, &s, base, 6);
        let c = PositionCoding::new(s);
        prop_assert_eq!(c.decode(&c.encode(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn formulas_agree_with_rules(seed in any::<u64>()) {
        let s = spec("KBk");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_position(&mut rng, &s, 50, 4);
        let l = Layout::new(s.len(), 2, 0);
        for col in [Color::White, Color::Black] {
            let v = PositionCoding::new(s.clone()).values(&[&p], &[]).unwrap();
            prop_assert_eq!(in_check_qf(&s, &l1(&s), 0, col).eval(&v), in_check(&p, col));
        }
        for q in successors_and_misses(&mut rng, &p) {
            let v = PositionCoding::new(s.clone()).values(&[&p, &q], &[]).unwrap();
            prop_assert_eq!(one_move_qf(&s, &l, 0, 1).eval(&v), one_move_oracle(&p, &q));
        }
    }
}
