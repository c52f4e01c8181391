//! Fixture builders shared by the pipeline benchmarks.

use deplda_core::{
    fit_global, generate, make_trials, EnrollMap, Family, GlobalModel, SynthSpec, TrialList,
    VectorSet,
};

pub struct ScoringFixture {
    pub global: GlobalModel,
    pub train: VectorSet,
    pub enroll_map: EnrollMap,
    pub trials: TrialList,
    pub tests: VectorSet,
}

/// A mid-sized synthetic setup: 100 classes, 16 dimensions, 1000 + 1000
/// trials.
pub fn scoring_fixture() -> ScoringFixture {
    let dim = 16;
    let epsilon: Vec<f64> = deplda_core::log_spaced_epsilon(dim, 0.3, 6.0);
    let train = generate(&SynthSpec {
        classes: 100,
        per_class: 14,
        dim,
        epsilon,
        family: Family::StudentT { nu: 5.0 },
        seed: 42,
    })
    .unwrap();
    let (global, _) = fit_global(&train, 5).unwrap();
    let (enroll_map, trials, tests) = make_trials(&train, 3, 1000, 1000, 9).unwrap();
    ScoringFixture {
        global,
        train,
        enroll_map,
        trials,
        tests,
    }
}
