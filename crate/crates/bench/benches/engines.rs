use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use infmate_bench::{position, MIDDLEGAME, QR_MATE_1, QR_MATE_13};
use infmate_core::chess_automata::RelationCache;
use infmate_core::decision::{DecisionConfig, Decider, Query};
use infmate_core::model::legal_candidate_moves;
use infmate_core::search::{self, SearchConfig};
use infmate_core::{Color, PieceSpec};

fn move_generation(c: &mut Criterion) {
    let p = position(MIDDLEGAME);
    c.bench_function("reference legal moves", |b| b.iter(|| legal_candidate_moves(black_box(&p)).len()));
    let cfg = SearchConfig::default();
    c.bench_function("canonical moves r8", |b| {
        b.iter(|| search::canonical_moves(black_box(&p), &cfg).unwrap().len())
    });
}

fn search_engine(c: &mut Criterion) {
    let cfg = SearchConfig::default();
    let one = position(QR_MATE_1);
    c.bench_function("search mate-in-1", |b| {
        b.iter(|| search::solve_mate(&one, Color::White, 1, &cfg).unwrap().verdict)
    });

    let mut g = c.benchmark_group("slow");
    g.sample_size(10).measurement_time(Duration::from_secs(120));
    let p = position(QR_MATE_13);
    g.bench_function("search mate-in-13", |b| {
        b.iter(|| search::solve_mate(&p, Color::White, 13, &cfg).unwrap().verdict)
    });
    g.finish();
}

fn automata_engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("automata");
    g.sample_size(10);
    let decider = Decider::new(DecisionConfig::default());
    let one = position(QR_MATE_1);
    g.bench_function("decide mate-in-1", |b| {
        b.iter(|| decider.decide(&Query::mate(one.clone(), Color::White, 1)).unwrap().verdict)
    });
    let spec = PieceSpec::from_letters("KRk").unwrap();
    g.bench_function("compile KRk one-move", |b| {
        b.iter(|| RelationCache::new(Default::default()).one_move(&spec, false).unwrap())
    });
    g.finish();
}

criterion_group!(benches, move_generation, search_engine, automata_engine);
criterion_main!(benches);
