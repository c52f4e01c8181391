//! Vector preprocessing: centering, length normalization, and LDA.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::corpus::VectorSet;
use crate::error::{Error, Result};
use crate::linalg;

/// Where length normalization is applied in the scoring pipeline.
///
/// `Partial` feeds length-normalized vectors to the global components
/// (enrollment and normalization) while the local prediction input stays
/// raw; it is only meaningful for the decoupled scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LnMode {
    None,
    Full,
    Partial,
}

impl FromStr for LnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LnMode::None),
            "full" => Ok(LnMode::Full),
            "partial" => Ok(LnMode::Partial),
            other => Err(Error::Invalid(format!(
                "invalid ln mode '{other}' (expected none, full, or partial)"
            ))),
        }
    }
}

/// Linear discriminant projection fitted on labelled training vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaTransform {
    pub dim_in: usize,
    pub dim_out: usize,
    /// `dim_out x dim_in`, rows sorted by descending discriminability.
    pub projection: DMatrix<f64>,
    /// Training global mean, subtracted before projecting.
    pub mean: Vec<f64>,
}

/// Arithmetic mean over all records of a set.
pub fn compute_mean(set: &VectorSet) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::Invalid("cannot compute the mean of an empty set".into()));
    }
    Ok(linalg::global_mean(set).as_slice().to_vec())
}

/// Scales `v` to Euclidean norm `sqrt(d)`, which keeps the per-dimension
/// scale near one.
pub fn length_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        return Err(Error::Invalid("cannot length-normalize a zero vector".into()));
    }
    let scale = (v.len() as f64).sqrt() / norm_sq.sqrt();
    Ok(v.iter().map(|x| x * scale).collect())
}

/// Applies [`length_normalize`] to every record of a set.
pub fn length_normalize_set(set: &VectorSet) -> Result<VectorSet> {
    set.map_values(|rec| {
        length_normalize(&rec.values).map_err(|_| {
            Error::Invalid(format!(
                "cannot length-normalize zero vector '{}'",
                rec.utterance_id
            ))
        })
    })
}

/// Fits an LDA projection to `target_dim` dimensions.
///
/// The projection rows are the leading generalized eigenvectors of the
/// between-class scatter against the ridged within-class scatter, sorted by
/// descending eigenvalue. Directions past `min(d, K-1)` carry no
/// between-class variance but are still returned when requested.
pub fn fit_lda(set: &VectorSet, target_dim: usize) -> Result<LdaTransform> {
    let d = set.dim();
    if target_dim == 0 {
        return Err(Error::Invalid("LDA target dimension must be at least 1".into()));
    }
    if target_dim > d {
        return Err(Error::Invalid(format!(
            "LDA target dimension {target_dim} exceeds input dimension {d}"
        )));
    }
    if !set.fully_labeled() {
        return Err(Error::Invalid("LDA requires every record to be labelled".into()));
    }
    if set.num_classes() < 2 {
        return Err(Error::Invalid("LDA requires at least two classes".into()));
    }

    let mean = linalg::global_mean(set);
    let (within, _) = linalg::within_scatter(set, &mean);
    let stats = linalg::class_stats(set, &mean);
    let mut between = DMatrix::zeros(d, d);
    for (count, sum) in stats.counts.iter().zip(&stats.sums) {
        let class_mean = sum / *count as f64;
        between.ger(*count as f64, &class_mean, &class_mean, 1.0);
    }
    between /= stats.total as f64;
    linalg::symmetrize(&mut between);

    let ridged = linalg::add_ridge(&within, linalg::ridge_lambda(&within));
    let (transform, _values) = linalg::simultaneous_diag_impl(&ridged, &between)?;
    let projection = transform.rows(0, target_dim).into_owned();
    Ok(LdaTransform {
        dim_in: d,
        dim_out: target_dim,
        projection,
        mean: mean.as_slice().to_vec(),
    })
}

impl LdaTransform {
    /// Projects a single vector: `projection * (v - mean)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim_in {
            return Err(Error::Invalid(format!(
                "LDA expects dimension {}, got {}",
                self.dim_in,
                v.len()
            )));
        }
        let centered = DVector::from_fn(self.dim_in, |j, _| v[j] - self.mean[j]);
        Ok((&self.projection * centered).as_slice().to_vec())
    }
}

/// Projects every record of a set through an LDA transform.
pub fn apply_lda(transform: &LdaTransform, set: &VectorSet) -> Result<VectorSet> {
    if set.dim() != transform.dim_in {
        return Err(Error::Invalid(format!(
            "LDA expects dimension {}, got set of dimension {}",
            transform.dim_in,
            set.dim()
        )));
    }
    set.map_values(|rec| transform.apply(&rec.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UtteranceRecord;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn set_of(rows: &[(&str, Option<&str>, Vec<f64>)]) -> VectorSet {
        VectorSet::from_records(
            rows.iter()
                .map(|(id, class, values)| UtteranceRecord {
                    utterance_id: (*id).into(),
                    class_id: class.map(Into::into),
                    values: values.clone(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn mean_examples() {
        let set = set_of(&[("a", None, vec![1.0, 1.0]), ("b", None, vec![3.0, 3.0])]);
        assert_eq!(compute_mean(&set).unwrap(), vec![2.0, 2.0]);
        let single = set_of(&[("a", None, vec![5.0])]);
        assert_eq!(compute_mean(&single).unwrap(), vec![5.0]);
    }

    #[test]
    fn length_normalize_three_four_five() {
        let out = length_normalize(&[3.0, 4.0]).unwrap();
        assert!((out[0] - 0.848_528_137_423_857).abs() < 1e-12);
        assert!((out[1] - 1.131_370_849_898_476).abs() < 1e-12);
        let norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn length_normalize_fixed_point_and_zero() {
        // norm already sqrt(d): unchanged
        let v = vec![1.0, -1.0];
        let out = length_normalize(&v).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15 && (out[1] + 1.0).abs() < 1e-15);
        assert!(length_normalize(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn lda_identity_and_selection() {
        let set = set_of(&[
            ("a", Some("c1"), vec![3.0, 7.0]),
            ("b", Some("c2"), vec![-3.0, -7.0]),
        ]);
        let t = LdaTransform {
            dim_in: 2,
            dim_out: 2,
            projection: DMatrix::identity(2, 2),
            mean: vec![0.0, 0.0],
        };
        let out = apply_lda(&t, &set).unwrap();
        assert_eq!(out.records()[0].values, vec![3.0, 7.0]);

        let select = LdaTransform {
            dim_in: 2,
            dim_out: 1,
            projection: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            mean: vec![0.0, 0.0],
        };
        assert_eq!(apply_lda(&select, &set).unwrap().records()[0].values, vec![3.0]);

        let wrong = set_of(&[("a", None, vec![1.0])]);
        assert!(apply_lda(&t, &wrong).is_err());
    }

    #[test]
    fn lda_rejects_degenerate_inputs() {
        let one_class = set_of(&[
            ("a", Some("c"), vec![1.0, 0.0]),
            ("b", Some("c"), vec![0.0, 1.0]),
        ]);
        assert!(fit_lda(&one_class, 1).is_err());
        let two = set_of(&[
            ("a", Some("c1"), vec![1.0, 0.0]),
            ("b", Some("c2"), vec![0.0, 1.0]),
        ]);
        assert!(fit_lda(&two, 0).is_err());
        assert!(fit_lda(&two, 3).is_err());
        let unlabeled = set_of(&[
            ("a", Some("c1"), vec![1.0, 0.0]),
            ("b", None, vec![0.0, 1.0]),
        ]);
        assert!(fit_lda(&unlabeled, 1).is_err());
    }

    #[test]
    fn lda_finds_separating_axis() {
        // Two classes separated along axis 0; the leading direction should
        // align with e1 (Monte-Carlo check, fixed seed).
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let mut rows = Vec::new();
        for k in 0..2 {
            let center = if k == 0 { 1.0 } else { -1.0 };
            for i in 0..500 {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                rows.push(UtteranceRecord {
                    utterance_id: format!("c{k}_u{i}"),
                    class_id: Some(format!("c{k}")),
                    values: vec![center + x, y],
                });
            }
        }
        let set = VectorSet::from_records(rows).unwrap();
        let t = fit_lda(&set, 1).unwrap();
        let row = t.projection.row(0);
        let cos = row[0].abs() / (row[0] * row[0] + row[1] * row[1]).sqrt();
        assert!(cos > 0.99, "leading LDA direction not aligned: cos={cos}");
    }

    #[test]
    fn lda_full_rank_when_p_equals_d() {
        let set = set_of(&[
            ("a", Some("c1"), vec![1.0, 0.2]),
            ("b", Some("c1"), vec![1.2, -0.1]),
            ("c", Some("c2"), vec![-1.0, 0.4]),
            ("d", Some("c2"), vec![-1.3, -0.3]),
            ("e", Some("c3"), vec![0.1, 2.0]),
            ("f", Some("c3"), vec![-0.2, 2.2]),
        ]);
        let t = fit_lda(&set, 2).unwrap();
        // full-rank projection: determinant away from zero
        let det = t.projection[(0, 0)] * t.projection[(1, 1)]
            - t.projection[(0, 1)] * t.projection[(1, 0)];
        assert!(det.abs() > 1e-9);
    }
}
