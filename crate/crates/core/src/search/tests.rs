use proptest::prelude::*;

use super::*;
use crate::model::{PieceDesignation, Square};
use crate::notation::parse_position;

fn pos(s: &str) -> Position {
    parse_position(s).unwrap()
}

fn quick(radius: u32) -> SearchConfig {
    SearchConfig { max_nodes: 2_000_000, ..SearchConfig::with_radius(radius) }
}

#[test]
fn config_validation() {
    assert!(SearchConfig::default().validate().is_ok());
    assert!(SearchConfig::with_radius(1).validate().is_err());
    let cfg = SearchConfig { far_offsets: vec![], ..SearchConfig::default() };
    assert!(matches!(cfg.validate(), Err(SearchError::InvalidConfig(_))));
    let cfg = SearchConfig { far_offsets: vec![0], ..SearchConfig::default() };
    assert!(cfg.validate().is_err());
}

#[test]
fn lone_king_moves() {
    let p = pos("w: K(0,0)");
    let moves = canonical_moves(&p, &SearchConfig::default()).unwrap();
    assert_eq!(moves.len(), 8);
    // next to the enemy king some squares drop out
    let p = pos("w: K(0,0) k(2,0)");
    assert_eq!(canonical_moves(&p, &SearchConfig::default()).unwrap().len(), 5);
}

#[test]
fn lone_rook_count() {
    let p = pos("w: R(0,0)");
    let moves = canonical_moves(&p, &SearchConfig::with_radius(2)).unwrap();
    // two squares per ray inside the region plus two far representatives
    assert_eq!(moves.len(), 4 * (2 + 2));
    assert!(moves.iter().any(|m| m.target == Square::new(4, 0)));
    assert!(moves.iter().any(|m| m.target == Square::new(0, -3)));
}

#[test]
fn blocked_ray_has_no_far_representative() {
    let p = pos("w: R(0,0) k(0,1)");
    let moves = canonical_moves(&p, &SearchConfig::with_radius(2)).unwrap();
    assert!(moves.iter().all(|m| m.target.x != BigInt::from(0) || m.target.y < BigInt::from(0)));
}

use num_bigint::BigInt;

#[test]
fn mate_in_zero_derived() {
    let p = pos("b: k(0,0) Q(0,2) R(1,9) R(-1,9)");
    assert!(model::is_mated(&p));
    let out = solve_mate(&p, Color::White, 0, &quick(4)).unwrap();
    assert!(out.verdict);
    assert_eq!(out.line.unwrap().moves.len(), 0);
}

#[test]
fn mate_in_one_derived() {
    let p = pos("w: k(0,0) R(1,9) R(-1,9) Q(3,5)");
    let cfg = quick(4);
    assert!(!solve_mate(&p, Color::White, 0, &cfg).unwrap().verdict);
    let out = solve_mate(&p, Color::White, 1, &cfg).unwrap();
    assert!(out.verdict);
    let line = out.line.unwrap();
    assert_eq!(line.moves.len(), 1);
    assert_eq!(line.moves[0].piece, 3);
    assert!(verify_line(&p, Color::White, 1, &line));
    // the defender's view of the same question
    let q = model::apply_move(&p, &line.moves[0]).unwrap();
    assert!(solve_mate(&q, Color::White, 0, &cfg).unwrap().verdict);
}

#[test]
fn queen_removed_has_no_quick_mate() {
    let p = pos("w: k(0,0) R(1,9) R(-1,9) Q!");
    for n in 0..=2 {
        assert!(!solve_mate(&p, Color::White, n, &quick(4)).unwrap().verdict, "n = {n}");
    }
}

#[test]
fn already_checking_side_to_move_has_won() {
    let p = pos("w: K(5,5) R(0,3) k(0,0)");
    let out = solve_mate(&p, Color::White, 0, &quick(2)).unwrap();
    assert!(out.verdict);
    assert_eq!(out.line.unwrap().terminal, Terminal::Won);
}

#[test]
fn budget_is_not_a_verdict() {
    let p = pos("w: Q(1,2) R(4,3) K(19,4) k(5,4)");
    let cfg = SearchConfig { max_nodes: 50, ..SearchConfig::default() };
    assert_eq!(solve_mate(&p, Color::White, 5, &cfg), Err(SearchError::NodeBudget(50)));
}

#[test]
fn draw_rejects_empty_family() {
    let p = pos("w: Q(1,2) R(4,3) K(19,4) k(5,4)");
    assert!(matches!(
        solve_draw(&p, Color::White, 3, 0, &SearchConfig::default()),
        Err(SearchError::InvalidQuery(_))
    ));
}

#[test]
fn stalemate_goal_accepts_stalemate() {
    // black king boxed in without check
    let p = pos("b: Q(4,6) R(7,3) K(7,4) k(5,4)");
    assert!(model::is_stalemated(&p));
    assert!(!solve_mate(&p, Color::White, 0, &quick(3)).unwrap().verdict);
    let out = solve_stalemate(&p, Color::White, 0, &quick(3)).unwrap();
    assert!(out.verdict);
    assert_eq!(out.line.unwrap().terminal, Terminal::Stalemate);
}

#[test]
fn mover_move_count() {
    let w = pos("w: K(0,0) k(5,5)");
    assert_eq!(mover_moves(&w, Color::White, 3), 2);
    assert_eq!(mover_moves(&w.with_turn(Color::Black), Color::White, 3), 1);
}

#[test]
fn replay_rejects_illegal_line() {
    let p = pos("w: K(0,0) k(5,5)");
    let bad = Line { moves: vec![Move::new(0, Square::new(3, 3))], terminal: Terminal::Won };
    assert!(!verify_line(&p, Color::White, 1, &bad));
}

fn small_position() -> impl Strategy<Value = Position> {
    let piece = prop_oneof![
        Just((PieceType::Queen, Color::White)),
        Just((PieceType::Rook, Color::White)),
        Just((PieceType::Bishop, Color::White)),
        Just((PieceType::Knight, Color::White)),
        Just((PieceType::Pawn, Color::White)),
        Just((PieceType::Rook, Color::Black)),
        Just((PieceType::Pawn, Color::Black)),
    ];
    (
        proptest::collection::vec((piece, -4i64..=4, -4i64..=4), 0..3),
        (-4i64..=4, -4i64..=4, -4i64..=4, -4i64..=4),
        any::<bool>(),
    )
        .prop_filter_map("valid", |(extra, (a, b, c, d), white)| {
            let mut pieces = vec![
                PieceDesignation::live(PieceType::King, Color::White, Square::new(a, b)),
                PieceDesignation::live(PieceType::King, Color::Black, Square::new(c, d)),
            ];
            for ((k, col), x, y) in extra {
                pieces.push(PieceDesignation::live(k, col, Square::new(x, y)));
            }
            let p = Position::new(pieces, if white { Color::White } else { Color::Black });
            model::validate_position(&p).is_ok().then_some(p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_moves_legal_and_distinct(p in small_position(), r in 2u32..5) {
        let moves = canonical_moves(&p, &SearchConfig::with_radius(r)).unwrap();
        for (i, m) in moves.iter().enumerate() {
            prop_assert!(model::is_legal_move(&p, m).unwrap(), "{}", m);
            prop_assert!(!moves[..i].contains(m));
        }
    }

    #[test]
    fn board_agrees_with_model(p in small_position()) {
        let (mut b, frame) = Board::from_position(&p).unwrap();
        prop_assert_eq!(frame.to_position(&b), p.clone());
        prop_assert_eq!(b.in_check(Color::White), model::in_check(&p, Color::White));
        prop_assert_eq!(b.in_check(Color::Black), model::in_check(&p, Color::Black));
        prop_assert_eq!(b.has_legal_move(), model::has_legal_move(&p));
        let ours: Vec<Move> = b.exact_legal_moves().iter().map(|m| frame.to_move(m)).collect();
        prop_assert_eq!(ours, model::legal_candidate_moves(&p));
        let key = b.hash_key();
        for m in b.exact_legal_moves() {
            let u = b.make(&m);
            let after = model::apply_move(&p, &frame.to_move(&m)).unwrap();
            prop_assert_eq!(frame.to_position(&b), after);
            b.unmake(&m, u);
        }
        prop_assert_eq!(b.hash_key(), key);
    }

    #[test]
    fn depth_zero_is_the_base_predicate(p in small_position()) {
        for player in [Color::White, Color::Black] {
            let out = solve_mate(&p, player, 0, &quick(2)).unwrap();
            prop_assert_eq!(out.verdict, decision::is_won_by(&p, player));
        }
    }

    #[test]
    fn proof_numbers_agree_with_plain_search(p in small_position()) {
        let tt = quick(2);
        let plain = SearchConfig { use_transposition_table: false, ..quick(2) };
        for n in 0..=1 {
            let a = solve_mate(&p, Color::White, n, &tt).unwrap();
            let b = solve_mate(&p, Color::White, n, &plain).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            if let Some(line) = &a.line {
                prop_assert!(verify_line(&p, Color::White, n, line));
            }
        }
    }

    #[test]
    fn mate_is_monotone_in_depth(p in small_position()) {
        let cfg = quick(2);
        let v0 = solve_mate(&p, Color::White, 0, &cfg).unwrap().verdict;
        let v1 = solve_mate(&p, Color::White, 1, &cfg).unwrap().verdict;
        prop_assert!(!v0 || v1);
    }
}
