//! Synthetic labelled vector sets drawn from the exact generative model
//! (Gaussian class means, unit within-class noise) or from a heavy-tailed
//! variant, plus trial-list construction over a generated set.
//!
//! The heavy-tailed family draws Student-t within-class residuals by
//! scaling each sample's Gaussian noise with a shared chi-square mixing
//! variable, rescaled so that the residual covariance stays the identity:
//! only the tail shape departs from the model.

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::corpus::{EnrollMap, Label, Trial, TrialList, UtteranceRecord, VectorSet};
use crate::error::{Error, Result};

/// Within-class residual family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Student-t residuals with the given degrees of freedom; must exceed 4
    /// so that the kurtosis used by the moment checks is finite.
    StudentT { nu: f64 },
}

/// Generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// True between-class variances, one per dimension.
    pub epsilon: Vec<f64>,
    pub family: Family,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Invalid("need at least two classes".into()));
        }
        if self.per_class < 1 {
            return Err(Error::Invalid("need at least one sample per class".into()));
        }
        if self.dim < 1 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if self.epsilon.len() != self.dim {
            return Err(Error::Invalid(format!(
                "epsilon has {} entries for dimension {}",
                self.epsilon.len(),
                self.dim
            )));
        }
        if self.epsilon.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            return Err(Error::Invalid("epsilon entries must be finite and positive".into()));
        }
        if let Family::StudentT { nu } = self.family {
            if !nu.is_finite() || nu <= 4.0 {
                return Err(Error::Invalid(
                    "student-t degrees of freedom must exceed 4".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Draws a labelled vector set. Deterministic for a fixed spec.
pub fn generate(spec: &SynthSpec) -> Result<VectorSet> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let chi = match spec.family {
        Family::Gaussian => None,
        Family::StudentT { nu } => Some((
            ChiSquared::new(nu).map_err(|e| Error::Invalid(format!("chi-square: {e}")))?,
            nu,
        )),
    };
    let sqrt_eps: Vec<f64> = spec.epsilon.iter().map(|e| e.sqrt()).collect();
    let mut records = Vec::with_capacity(spec.classes * spec.per_class);
    for k in 0..spec.classes {
        let class_id = format!("c{k:04}");
        let mut mu = vec![0.0; spec.dim];
        for (j, m) in mu.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *m = sqrt_eps[j] * z;
        }
        for i in 0..spec.per_class {
            // one mixing draw per sample, shared across dimensions
            let scale = match &chi {
                None => 1.0,
                Some((chi, nu)) => {
                    let g: f64 = chi.sample(&mut rng);
                    ((nu - 2.0) / g).sqrt()
                }
            };
            let mut values = vec![0.0; spec.dim];
            for (j, v) in values.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = mu[j] + scale * z;
            }
            records.push(UtteranceRecord {
                utterance_id: format!("{class_id}_u{i:04}"),
                class_id: Some(class_id.clone()),
                values,
            });
        }
    }
    VectorSet::from_records(records)
}

/// Splits a labelled set into enrollment and test sides and samples trials.
///
/// Per class the first `enroll_per_class` records (in record order) enroll
/// under the class id; the remaining records form the test side. Target
/// trials pair a class with its own held-out utterances, nontarget trials
/// with other classes' held-out utterances, both sampled without
/// replacement.
pub fn make_trials(
    set: &VectorSet,
    enroll_per_class: usize,
    targets: usize,
    nontargets: usize,
    seed: u64,
) -> Result<(EnrollMap, TrialList, VectorSet)> {
    if enroll_per_class == 0 {
        return Err(Error::Invalid("enroll_per_class must be at least 1".into()));
    }
    if !set.fully_labeled() {
        return Err(Error::Invalid("trial construction requires a labelled set".into()));
    }
    if set.num_classes() < 2 {
        return Err(Error::Invalid("trial construction requires at least two classes".into()));
    }
    let mut enroll_map = EnrollMap::new();
    let mut test_indices: Vec<usize> = Vec::new();
    // per class: positions into test_indices of its held-out records
    let mut held_out_by_class: Vec<Vec<usize>> = Vec::new();
    for group in set.classes() {
        if group.members.len() <= enroll_per_class {
            return Err(Error::Invalid(format!(
                "class '{}' has {} records, need more than enroll_per_class = {}",
                group.class_id,
                group.members.len(),
                enroll_per_class
            )));
        }
        let (enrolled, held_out) = group.members.split_at(enroll_per_class);
        enroll_map.insert(
            group.class_id.clone(),
            enrolled
                .iter()
                .map(|&i| set.records()[i].utterance_id.clone())
                .collect(),
        )?;
        let mut positions = Vec::with_capacity(held_out.len());
        for &idx in held_out {
            positions.push(test_indices.len());
            test_indices.push(idx);
        }
        held_out_by_class.push(positions);
    }

    let mut target_pairs: Vec<(usize, usize)> = Vec::new();
    let mut nontarget_pairs: Vec<(usize, usize)> = Vec::new();
    for (class_pos, positions) in held_out_by_class.iter().enumerate() {
        for &test_pos in positions {
            target_pairs.push((class_pos, test_pos));
        }
    }
    for (class_pos, _) in held_out_by_class.iter().enumerate() {
        for (other_pos, positions) in held_out_by_class.iter().enumerate() {
            if other_pos == class_pos {
                continue;
            }
            for &test_pos in positions {
                nontarget_pairs.push((class_pos, test_pos));
            }
        }
    }
    if targets > target_pairs.len() {
        return Err(Error::Invalid(format!(
            "requested {} target trials but only {} pairs exist",
            targets,
            target_pairs.len()
        )));
    }
    if nontargets > nontarget_pairs.len() {
        return Err(Error::Invalid(format!(
            "requested {} nontarget trials but only {} pairs exist",
            nontargets,
            nontarget_pairs.len()
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(targets + nontargets);
    for idx in index_sample(&mut rng, target_pairs.len(), targets) {
        let (class_pos, test_pos) = target_pairs[idx];
        entries.push(Trial {
            enroll_id: set.classes()[class_pos].class_id.clone(),
            test_id: set.records()[test_indices[test_pos]].utterance_id.clone(),
            label: Label::Target,
        });
    }
    for idx in index_sample(&mut rng, nontarget_pairs.len(), nontargets) {
        let (class_pos, test_pos) = nontarget_pairs[idx];
        entries.push(Trial {
            enroll_id: set.classes()[class_pos].class_id.clone(),
            test_id: set.records()[test_indices[test_pos]].utterance_id.clone(),
            label: Label::Nontarget,
        });
    }

    let test_records: Vec<UtteranceRecord> = test_indices
        .iter()
        .map(|&i| set.records()[i].clone())
        .collect();
    let test_set = VectorSet::from_records(test_records)?;
    Ok((enroll_map, TrialList { entries }, test_set))
}

/// Log-spaced epsilon vector, handy for building synthetic setups.
pub fn log_spaced_epsilon(dim: usize, low: f64, high: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![low];
    }
    (0..dim)
        .map(|j| {
            let t = j as f64 / (dim - 1) as f64;
            (low.ln() + t * (high.ln() - low.ln())).exp()
        })
        .collect()
}
