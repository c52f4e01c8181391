//! Equal error rate from labelled scored trials.
//!
//! The decision rule is "accept iff score >= threshold". Rates are
//! evaluated at each distinct score (which handles ties), the resulting
//! ROC polyline is interpolated linearly, and the EER is the point where
//! the miss rate crosses the false-alarm rate.

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scoring::ScoredTrial;

/// EER with the threshold at the crossing and the trial counts it was
/// computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub target_count: usize,
    pub nontarget_count: usize,
}

/// One operating point of the ROC sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_alarm: f64,
    pub miss: f64,
}

/// Operating points at every distinct score, from the all-reject end
/// (threshold `+inf`) to the all-accept end.
pub fn roc_points(targets: &[f64], nontargets: &[f64]) -> Result<Vec<RocPoint>> {
    if targets.is_empty() || nontargets.is_empty() {
        return Err(Error::Invalid(
            "EER requires at least one target and one nontarget trial".into(),
        ));
    }
    if targets.iter().chain(nontargets).any(|s| !s.is_finite()) {
        return Err(Error::Invalid("EER requires finite scores".into()));
    }
    let mut sorted_targets = targets.to_vec();
    sorted_targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sorted_nontargets = nontargets.to_vec();
    sorted_nontargets.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut thresholds: Vec<f64> = sorted_targets
        .iter()
        .chain(&sorted_nontargets)
        .copied()
        .collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    let n_t = sorted_targets.len() as f64;
    let n_n = sorted_nontargets.len() as f64;
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        false_alarm: 0.0,
        miss: 1.0,
    }];
    for t in thresholds {
        // accepted nontargets: score >= t; missed targets: score < t
        let accepted_nt = sorted_nontargets.len() - sorted_nontargets.partition_point(|&s| s < t);
        let missed_t = sorted_targets.partition_point(|&s| s < t);
        points.push(RocPoint {
            threshold: t,
            false_alarm: accepted_nt as f64 / n_n,
            miss: missed_t as f64 / n_t,
        });
    }
    Ok(points)
}

/// EER of two score sets via the interpolated ROC sweep.
pub fn eer_from_scores(targets: &[f64], nontargets: &[f64]) -> Result<EerResult> {
    let points = roc_points(targets, nontargets)?;
    // miss - false_alarm decreases weakly from +1 to -1 along the sweep;
    // find where it crosses zero.
    for i in 0..points.len() {
        let diff = points[i].miss - points[i].false_alarm;
        if diff == 0.0 {
            return Ok(EerResult {
                eer: points[i].false_alarm,
                threshold: points[i].threshold,
                target_count: targets.len(),
                nontarget_count: nontargets.len(),
            });
        }
        if diff < 0.0 {
            let prev = &points[i - 1];
            let cur = &points[i];
            let prev_diff = prev.miss - prev.false_alarm;
            let alpha = prev_diff / (prev_diff - diff);
            let eer = prev.false_alarm + alpha * (cur.false_alarm - prev.false_alarm);
            let threshold = if prev.threshold.is_infinite() {
                cur.threshold
            } else {
                prev.threshold + alpha * (cur.threshold - prev.threshold)
            };
            return Ok(EerResult {
                eer,
                threshold,
                target_count: targets.len(),
                nontarget_count: nontargets.len(),
            });
        }
    }
    unreachable!("the final ROC point has miss 0 and false-alarm 1");
}

/// EER of a scored, fully labelled trial list.
pub fn compute_eer(scored: &[ScoredTrial]) -> Result<EerResult> {
    let mut targets = Vec::new();
    let mut nontargets = Vec::new();
    for trial in scored {
        match trial.label {
            Label::Target => targets.push(trial.score),
            Label::Nontarget => nontargets.push(trial.score),
            Label::Unknown => {
                return Err(Error::Invalid(format!(
                    "trial ({}, {}) has no target/nontarget label",
                    trial.enroll_id, trial.test_id
                )));
            }
        }
    }
    eer_from_scores(&targets, &nontargets)
}
