use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlcompose::env::EnvConfig;
use tlcompose::learner::{q_learning_train, QMeta};
use tlcompose::logic::robustness;
use tlcompose::{parse_formula_with, product, translate, FsaAugmentedMdp, StateSample, TrainConfig, Trace};

fn grid_formula(text: &str) -> tlcompose::Formula {
    let cfg = EnvConfig::standard_grid();
    parse_formula_with(text, &cfg.features(), &cfg.parsed_macros().unwrap()).unwrap()
}

fn bench_translate(c: &mut Criterion) {
    let phi1 = grid_formula("F a & F b");
    let conj = grid_formula("(F a & F b) & F c");
    let nested = grid_formula("(a U (x > 6)) T (F b | X c)");
    c.bench_function("translate F a & F b", |b| b.iter(|| translate(black_box(&phi1)).unwrap()));
    c.bench_function("translate conjunction", |b| b.iter(|| translate(black_box(&conj)).unwrap()));
    c.bench_function("translate until/then", |b| b.iter(|| translate(black_box(&nested)).unwrap()));
    let (l, r) = (translate(&phi1).unwrap(), translate(&grid_formula("F c")).unwrap());
    c.bench_function("product 4x2", |b| b.iter(|| product(black_box(&l), black_box(&r))));
}

fn bench_robustness(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trace = Trace::new(
        (0..200)
            .map(|_| {
                StateSample::new()
                    .with("x", rng.gen_range(0..10) as f64)
                    .with("y", rng.gen_range(0..8) as f64)
            })
            .collect(),
    )
    .unwrap();
    let conj = grid_formula("(F a & F b) & F c");
    let until = grid_formula("!a U (b & F c)");
    c.bench_function("robustness conjunction, 200 samples", |b| {
        b.iter(|| robustness(black_box(&trace), &conj, 0).unwrap())
    });
    c.bench_function("robustness until, 200 samples", |b| {
        b.iter(|| robustness(black_box(&trace), &until, 0).unwrap())
    });
}

fn bench_learning(c: &mut Criterion) {
    let cfg = EnvConfig::standard_grid();
    let fsa = translate(&grid_formula("F a & F b")).unwrap();
    let env = FsaAugmentedMdp::new(cfg.grid().unwrap(), fsa, 200).unwrap();
    let train = TrainConfig {
        budget: 10_000,
        ..TrainConfig::default()
    };
    c.bench_function("q-learning 10k updates", |b| {
        b.iter_batched(
            QMeta::default,
            |meta| q_learning_train(&env, &train, meta).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_translate, bench_robustness, bench_learning);
criterion_main!(benches);
