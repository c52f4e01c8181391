use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use deplda_bench::scoring_fixture;
use deplda_core::{
    compute_eer, fit_global, local_gradient, score_trialset, LnMode, ScorerConfig, Variant,
};

fn bench_em_fit(c: &mut Criterion) {
    let fixture = scoring_fixture();
    c.bench_function("em_fit_10_iters_100x14x16", |b| {
        b.iter(|| fit_global(black_box(&fixture.train), 10).unwrap())
    });
}

fn bench_score_trials(c: &mut Criterion) {
    let fixture = scoring_fixture();
    let config = ScorerConfig {
        variant: Variant::Plda,
        ln_mode: LnMode::None,
        global: fixture.global.clone(),
        local: None,
        lda: None,
    };
    c.bench_function("score_2000_trials_d16", |b| {
        b.iter(|| {
            score_trialset(
                black_box(&config),
                &fixture.enroll_map,
                &fixture.train,
                &fixture.tests,
                &fixture.trials,
            )
            .unwrap()
        })
    });
}

fn bench_local_gradient(c: &mut Criterion) {
    let fixture = scoring_fixture();
    let projected = fixture.global.project_set(&fixture.train).unwrap();
    let m = vec![1.0; fixture.global.dim];
    c.bench_function("local_gradient_1400x16", |b| {
        b.iter(|| local_gradient(black_box(&fixture.global), &m, &projected).unwrap())
    });
}

fn bench_eer(c: &mut Criterion) {
    let fixture = scoring_fixture();
    let config = ScorerConfig {
        variant: Variant::Plda,
        ln_mode: LnMode::None,
        global: fixture.global.clone(),
        local: None,
        lda: None,
    };
    let scored = score_trialset(
        &config,
        &fixture.enroll_map,
        &fixture.train,
        &fixture.tests,
        &fixture.trials,
    )
    .unwrap();
    c.bench_function("eer_2000_scores", |b| {
        b.iter(|| compute_eer(black_box(&scored)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_em_fit,
    bench_score_trials,
    bench_local_gradient,
    bench_eer
);
criterion_main!(benches);
