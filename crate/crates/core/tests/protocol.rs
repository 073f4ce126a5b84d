use infmate_core::protocol::{Request, Response, Session, SessionConfig};
use infmate_core::search::SearchConfig;
use proptest::prelude::*;
use serde_json::{json, Value};

const MATE1: &str = "w: k(0,0) R(1,9) R(-1,9) Q(3,5)";

fn session() -> Session {
    let search = SearchConfig { max_nodes: 200_000, ..SearchConfig::with_radius(4) };
    Session::new(SessionConfig { search, max_n: 2, ..Default::default() })
}

fn send(s: &mut Session, req: Value) -> Value {
    serde_json::from_str(&s.handle_line(&req.to_string())).unwrap()
}

#[test]
fn load_echoes_canonical_notation() {
    let mut s = session();
    let r = send(&mut s, json!({"op": "load", "position": "w:k( 0,0)R(1,9) R(-1, 9) Q(3,5)"}));
    assert_eq!(r, json!({"ok": true, "op": "state", "position": MATE1, "turn": "w", "checkmated": false, "stalemated": false}));
}

#[test]
fn requests_before_load_are_errors() {
    let mut s = session();
    let r = send(&mut s, json!({"op": "state"}));
    assert_eq!(r["ok"], false);
    assert_eq!(r["code"], "invalid");
}

#[test]
fn unknown_fields_and_ops_rejected() {
    let mut s = session();
    send(&mut s, json!({"op": "load", "position": MATE1}));
    for bad in [
        json!({"op": "state", "extra": 1}),
        json!({"op": "fly"}),
        json!({"op": "move", "piece": 3, "to": "(0,2)", "promote": "Q"}),
        json!({"op": "legalMoves", "region": {"x0": 0, "y0": 0, "x1": 1, "y1": 1, "z": 0}}),
    ] {
        let r = send(&mut s, bad);
        assert_eq!(r["ok"], false);
        assert_eq!(r["code"], "parse");
    }
    assert_eq!(send(&mut s, json!({"op": "state"}))["position"], MATE1);
}

#[test]
fn illegal_move_leaves_state() {
    let mut s = session();
    send(&mut s, json!({"op": "load", "position": MATE1}));
    let r = send(&mut s, json!({"op": "move", "piece": 0, "to": "(5,5)"}));
    assert_eq!(r["code"], "illegal");
    let r = send(&mut s, json!({"op": "move", "piece": 3, "to": "(0,1)"}));
    assert_eq!(r["code"], "illegal", "queen cannot jump the king's neighbourhood: {r}");
    assert_eq!(send(&mut s, json!({"op": "state"}))["position"], MATE1);
    let r = send(&mut s, json!({"op": "move", "piece": 3, "to": "(0,2)"}));
    assert_eq!(r["checkmated"], true);
    assert_eq!(r["position"], "b: k(0,0) R(1,9) R(-1,9) Q(0,2)");
}

#[test]
fn queries_and_strategies() {
    let mut s = session();
    send(&mut s, json!({"op": "load", "position": MATE1}));
    let r = send(&mut s, json!({"op": "query", "kind": "mate", "n": 1}));
    assert_eq!(r["op"], "result");
    assert_eq!(r["verdict"], true);
    assert_eq!(r["method"], "search");
    let line = r["line"].as_array().unwrap().clone();
    assert_eq!(line.len(), 1);
    assert_eq!(line[0]["piece"], 3);
    let r = send(&mut s, json!({"op": "query", "kind": "mate", "n": 0, "engine": "automata"}));
    assert_eq!(r["verdict"], false);
    assert_eq!(r["method"], "automata");
    let r = send(&mut s, json!({"op": "bestMove"}));
    let best = r["move"].clone();
    assert_eq!(best["piece"], 3);
    // the suggested move really mates
    let mut probe = session();
    send(&mut probe, json!({"op": "load", "position": MATE1}));
    let r = send(&mut probe, json!({"op": "move", "piece": 3, "to": best["to"]}));
    assert_eq!(r["checkmated"], true);
    let r = send(&mut s, json!({"op": "query", "kind": "draw", "n": 1}));
    assert_eq!(r["ok"], false);
    // best moves do not move the session
    assert_eq!(send(&mut s, json!({"op": "state"}))["position"], MATE1);
}

#[test]
fn delay_move_for_the_defender() {
    let mut s = session();
    send(&mut s, json!({"op": "load", "position": "b: k(0,0) R(1,9) R(-1,9) Q(3,5)"}));
    let r = send(&mut s, json!({"op": "delayMove", "player": "w"}));
    assert_eq!(r["op"], "delayMove");
    let m = &r["move"];
    assert_eq!(m["piece"], 0);
    // the reply is legal in the session position
    let r = send(&mut s, json!({"op": "move", "piece": 0, "to": m["to"]}));
    assert_eq!(r["ok"], true);
}

#[test]
fn legal_moves_in_viewport() {
    let mut s = session();
    send(&mut s, json!({"op": "load", "position": "w: R(0,0) K(5,5) k(-5,5)"}));
    let r = send(&mut s, json!({"op": "legalMoves", "region": {"x0": -2, "y0": -2, "x1": 2, "y1": 2}}));
    let moves = r["moves"].as_array().unwrap();
    // rook: two squares per ray inside the box
    assert_eq!(moves.len(), 8);
    let far = r["far"].as_array().unwrap();
    assert_eq!(far.len(), 4);
    assert!(far.contains(&json!({"piece": 0, "from": "(3,0)", "direction": [1, 0]})));
    let r = send(&mut s, json!({"op": "legalMoves", "region": {"x0": 0, "y0": 0, "x1": 5000, "y1": 1}}));
    assert_eq!(r["ok"], false);
}

#[test]
fn responses_round_trip_through_types() {
    let mut s = session();
    for req in [json!({"op": "load", "position": MATE1}), json!({"op": "state"}), json!({"op": "fly"})] {
        let line = s.handle_line(&req.to_string());
        let typed: Response = serde_json::from_str(&line).unwrap();
        assert_eq!(serde_json::to_string(&typed).unwrap(), line);
    }
    let r: Request = serde_json::from_value(json!({"op": "bestMove", "maxN": 3})).unwrap();
    assert_eq!(r, Request::BestMove { max_n: Some(3), engine: None });
}

fn arbitrary_request() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(json!({"op": "state"}).to_string()),
        Just(json!({"op": "load", "position": MATE1}).to_string()),
        Just(json!({"op": "load", "position": "w: K(0,0) K(1,1)"}).to_string()),
        (0usize..5, -3i64..4, -3i64..6)
            .prop_map(|(p, x, y)| json!({"op": "move", "piece": p, "to": format!("({x},{y})")}).to_string()),
        "[ -~]{0,20}",
        Just(json!({"op": "legalMoves", "region": {"x0": -1, "y0": -1, "x1": 1, "y1": 1}}).to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_response_per_request_and_state_moves_only_on_accepted_moves(
        reqs in proptest::collection::vec(arbitrary_request(), 1..12)
    ) {
        let mut s = session();
        for line in reqs {
            let before = s.position().cloned();
            let out = s.handle_line(&line);
            prop_assert!(!out.contains('\n'));
            let v: Value = serde_json::from_str(&out).unwrap();
            let ok = v["ok"].as_bool().unwrap();
            let req: Option<Value> = serde_json::from_str(&line).ok();
            let op = req.as_ref().and_then(|r| r.get("op")).and_then(Value::as_str).map(str::to_owned);
            let changed = s.position() != before.as_ref();
            match op.as_deref() {
                Some("move") if ok => prop_assert!(changed),
                Some("load") if ok => {}
                _ => prop_assert!(!changed),
            }
        }
    }
}
