//! Trial scoring: likelihood-ratio and normalized-likelihood scores for the
//! vanilla and decoupled scorers, over the full preprocessing pipeline
//! (center -> optional LDA -> optional length normalization -> project).
//!
//! The normalized-likelihood form splits a score into an enrollment
//! posterior, a prediction term, and a normalization term. The decoupled
//! scorer replaces only the prediction term: the test vector passes through
//! the diagonal local transform before being evaluated against the
//! posterior, while enrollment and normalization stay with the global
//! model.

use std::collections::HashMap;

use crate::corpus::{EnrollMap, ScoreEntry, TrialList, VectorSet};
use crate::error::{Error, Result};
use crate::local::LocalModel;
use crate::numeric::{log_normal, LN_2PI};
use crate::plda::{EnrollPosterior, GlobalModel};
use crate::preprocess::{length_normalize, LdaTransform, LnMode};

/// Which scorer produces the trial scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plda,
    Deplda,
}

/// Everything needed to score trials from raw vectors.
#[derive(Debug, Clone)]
pub struct ScorerConfig {
    pub variant: Variant,
    pub ln_mode: LnMode,
    pub global: GlobalModel,
    pub local: Option<LocalModel>,
    pub lda: Option<LdaTransform>,
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        match self.variant {
            Variant::Deplda => {
                let local = self.local.as_ref().ok_or_else(|| {
                    Error::Invalid("the decoupled scorer requires a local model".into())
                })?;
                if local.dim != self.global.dim {
                    return Err(Error::Invalid(format!(
                        "local model dimension {} does not match global dimension {}",
                        local.dim, self.global.dim
                    )));
                }
            }
            Variant::Plda => {
                if self.ln_mode == LnMode::Partial {
                    return Err(Error::Invalid(
                        "partial length normalization requires the decoupled scorer".into(),
                    ));
                }
            }
        }
        if let Some(lda) = &self.lda {
            if lda.dim_out != self.global.dim {
                return Err(Error::Invalid(format!(
                    "LDA output dimension {} does not match global model dimension {}",
                    lda.dim_out, self.global.dim
                )));
            }
        }
        Ok(())
    }
}

/// A trial together with its natural-log normalized-likelihood score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrial {
    pub enroll_id: String,
    pub test_id: String,
    pub label: crate::corpus::Label,
    pub score: f64,
}

impl ScoredTrial {
    pub fn to_entry(&self) -> ScoreEntry {
        ScoreEntry {
            enroll_id: self.enroll_id.clone(),
            test_id: self.test_id.clone(),
            score: self.score,
        }
    }
}

/// Predictive log-density of a projected vector under an enrollment
/// posterior: the sum of `log N(x_j; mean_j, 1 + var_j)`.
fn nl_log_numerator(posterior: &EnrollPosterior, x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(j, &xj)| log_normal(xj, posterior.mean[j], 1.0 + posterior.var[j]))
        .sum()
}

/// Normalized-likelihood score of the vanilla scorer.
pub fn score_nl_plda(global: &GlobalModel, posterior: &EnrollPosterior, x: &[f64]) -> Result<f64> {
    if x.len() != global.dim || posterior.mean.len() != global.dim {
        return Err(Error::Invalid("dimension mismatch in NL scoring".into()));
    }
    Ok(nl_log_numerator(posterior, x) - global.log_marginal(x)?)
}

/// Log-density of stacked same-dimension values under the exchangeable
/// Gaussian with unit within-class variance and between-class variance
/// `eps`: covariance `I + eps * J`.
fn joint_class_logpdf(values: &[f64], eps: f64) -> f64 {
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    let denom = 1.0 + n * eps;
    -0.5 * (n * LN_2PI + denom.ln() + sum_sq - eps * sum * sum / denom)
}

/// Likelihood-ratio score computed directly from joint marginals, without
/// forming the enrollment posterior. Algebraically equivalent to
/// [`score_nl_plda`]; kept as an independent route.
pub fn score_lr_plda<V: AsRef<[f64]>>(
    global: &GlobalModel,
    enroll: &[V],
    x: &[f64],
) -> Result<f64> {
    if enroll.is_empty() {
        return Err(Error::Invalid("LR scoring requires at least one enrollment vector".into()));
    }
    if x.len() != global.dim {
        return Err(Error::Invalid("dimension mismatch in LR scoring".into()));
    }
    for v in enroll {
        if v.as_ref().len() != global.dim {
            return Err(Error::Invalid("dimension mismatch in LR scoring".into()));
        }
    }
    let mut score = 0.0;
    let mut column = Vec::with_capacity(enroll.len() + 1);
    for (j, (&xj, &eps)) in x.iter().zip(&global.epsilon).enumerate() {
        column.clear();
        column.push(xj);
        column.extend(enroll.iter().map(|v| v.as_ref()[j]));
        let joint = joint_class_logpdf(&column, eps);
        let test_alone = joint_class_logpdf(&column[..1], eps);
        let enroll_alone = joint_class_logpdf(&column[1..], eps);
        score += joint - test_alone - enroll_alone;
    }
    Ok(score)
}

/// Normalized-likelihood score of the decoupled scorer. `x_global` feeds
/// the normalization term, `x_local` passes through the local transform
/// into the prediction term; under full length normalization both are the
/// same vector, under partial normalization they differ.
pub fn score_nl_deplda(
    global: &GlobalModel,
    local: &LocalModel,
    posterior: &EnrollPosterior,
    x_global: &[f64],
    x_local: &[f64],
) -> Result<f64> {
    if local.dim != global.dim
        || x_global.len() != global.dim
        || x_local.len() != global.dim
        || posterior.mean.len() != global.dim
    {
        return Err(Error::Invalid("dimension mismatch in decoupled scoring".into()));
    }
    let transformed: Vec<f64> = x_local
        .iter()
        .zip(&local.m_diag)
        .map(|(&xj, &mj)| mj * xj)
        .collect();
    Ok(nl_log_numerator(posterior, &transformed) - global.log_marginal(x_global)?)
}

/// Preprocessed views of one raw vector.
struct Views {
    /// Input to the global components (after LN when the mode asks for it).
    global: Vec<f64>,
    /// Input to the local prediction term (raw pipeline under partial LN).
    local: Vec<f64>,
}

fn prepare_views(config: &ScorerConfig, raw: &[f64], what: &str) -> Result<Views> {
    let staged = match &config.lda {
        Some(lda) => lda.apply(raw)?,
        None => raw.to_vec(),
    };
    let (global_in, local_in) = match config.ln_mode {
        LnMode::None => (staged.clone(), staged),
        LnMode::Full => {
            let normalized = checked_ln(&staged, what)?;
            (normalized.clone(), normalized)
        }
        LnMode::Partial => {
            let normalized = checked_ln(&staged, what)?;
            (normalized, staged)
        }
    };
    Ok(Views {
        global: config.global.project(&global_in)?,
        local: config.global.project(&local_in)?,
    })
}

fn checked_ln(v: &[f64], what: &str) -> Result<Vec<f64>> {
    length_normalize(v).map_err(|_| Error::Invalid(format!("cannot length-normalize {what}")))
}

/// Scores every trial, in trial order. Enrollment posteriors are built
/// once per enrollment id from the mapped utterances.
pub fn score_trialset(
    config: &ScorerConfig,
    enroll_map: &EnrollMap,
    enroll_vectors: &VectorSet,
    test_vectors: &VectorSet,
    trials: &TrialList,
) -> Result<Vec<ScoredTrial>> {
    config.validate()?;
    let mut posteriors: HashMap<&str, EnrollPosterior> = HashMap::new();
    let mut test_views: HashMap<&str, Views> = HashMap::new();
    let mut scored = Vec::with_capacity(trials.len());
    for (line, trial) in trials.entries.iter().enumerate() {
        let trial_no = line + 1;
        if !posteriors.contains_key(trial.enroll_id.as_str()) {
            let utterances = enroll_map.get(&trial.enroll_id).ok_or_else(|| {
                Error::Invalid(format!(
                    "trial {trial_no}: enrollment id '{}' not in the enrollment map",
                    trial.enroll_id
                ))
            })?;
            let mut projected = Vec::with_capacity(utterances.len());
            for utt in utterances {
                let rec = enroll_vectors.get(utt).ok_or_else(|| {
                    Error::Invalid(format!(
                        "trial {trial_no}: enrollment utterance '{utt}' not in the enrollment vectors"
                    ))
                })?;
                let views = prepare_views(config, &rec.values, &format!("utterance '{utt}'"))?;
                projected.push(views.global);
            }
            let posterior = config.global.enroll_posterior(&projected)?;
            posteriors.insert(trial.enroll_id.as_str(), posterior);
        }
        if !test_views.contains_key(trial.test_id.as_str()) {
            let rec = test_vectors.get(&trial.test_id).ok_or_else(|| {
                Error::Invalid(format!(
                    "trial {trial_no}: test utterance '{}' not in the test vectors",
                    trial.test_id
                ))
            })?;
            let views = prepare_views(
                config,
                &rec.values,
                &format!("utterance '{}'", trial.test_id),
            )?;
            test_views.insert(trial.test_id.as_str(), views);
        }
        let posterior = &posteriors[trial.enroll_id.as_str()];
        let views = &test_views[trial.test_id.as_str()];
        let score = match config.variant {
            Variant::Plda => score_nl_plda(&config.global, posterior, &views.global)?,
            Variant::Deplda => score_nl_deplda(
                &config.global,
                config.local.as_ref().expect("validated"),
                posterior,
                &views.global,
                &views.local,
            )?,
        };
        scored.push(ScoredTrial {
            enroll_id: trial.enroll_id.clone(),
            test_id: trial.test_id.clone(),
            label: trial.label,
            score,
        });
    }
    Ok(scored)
}
