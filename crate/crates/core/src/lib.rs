//! Backend scoring for open-set verification with a decoupled twist: a
//! simple global linear-Gaussian model handles enrollment and score
//! normalization, while an independently trained local transform sharpens
//! the prediction term. Includes the full pipeline: text corpus formats,
//! preprocessing (centering, length normalization, LDA), EM estimation of
//! the global model, gradient training of the local transform with
//! EER-based early stopping, trial scoring, and EER evaluation, plus a
//! synthetic data generator for end-to-end verification.

pub mod corpus;
pub mod eer;
pub mod error;
mod linalg;
pub mod local;
pub mod model_io;
pub mod numeric;
pub mod plda;
pub mod preprocess;
pub mod scoring;
pub mod synth;

pub use corpus::{
    read_enroll_map, read_scores, read_trials, read_vectors, write_enroll_map, write_scores,
    write_trials, write_vectors, EnrollMap, Label, ScoreEntry, Trial, TrialList, UtteranceRecord,
    VectorSet,
};
pub use eer::{compute_eer, eer_from_scores, roc_points, EerResult, RocPoint};
pub use error::{Error, Result};
pub use local::{
    local_gradient, local_log_likelihood, local_log_likelihood_split, local_log_likelihood_tied,
    maximize_local_likelihood, train_local, EpochStats, LocalModel, LocalTrainConfig, MonitorSpec,
    TrainHistory,
};
pub use plda::{
    fit_global, simultaneous_diagonalize, EmTrace, EnrollPosterior, GlobalModel, EPSILON_FLOOR,
};
pub use preprocess::{
    apply_lda, compute_mean, fit_lda, length_normalize, length_normalize_set, LdaTransform, LnMode,
};
pub use scoring::{
    score_lr_plda, score_nl_deplda, score_nl_plda, score_trialset, ScoredTrial, ScorerConfig,
    Variant,
};
pub use synth::{generate, log_spaced_epsilon, make_trials, Family, SynthSpec};
