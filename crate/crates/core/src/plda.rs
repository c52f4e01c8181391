//! Global linear-Gaussian model: EM estimation of the two-covariance model,
//! simultaneous diagonalization, enrollment posteriors, and the marginal
//! density used for score normalization.
//!
//! In the diagonalized model space the within-class covariance is the
//! identity and the between-class covariance is `diag(epsilon)`, so all
//! downstream inference factorizes per dimension.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::corpus::VectorSet;
use crate::error::{Error, Result};
use crate::linalg;
use crate::numeric::{log_normal, LN_2PI};

/// Lower bound applied to every between-class variance.
pub const EPSILON_FLOOR: f64 = 1e-8;

/// The fitted global model.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub dim: usize,
    /// Training global mean in the input space.
    pub mean: Vec<f64>,
    /// Simultaneous-diagonalization transform; `w * sigma_w * w' = I`.
    pub w: DMatrix<f64>,
    /// Per-dimension between-class variances, sorted descending and floored
    /// at [`EPSILON_FLOOR`].
    pub epsilon: Vec<f64>,
}

/// Posterior over a class mean given enrollment vectors in model space.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrollPosterior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

/// Per-iteration total log-likelihood recorded during EM.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmTrace {
    pub log_likelihood: Vec<f64>,
}

impl EmTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,log_likelihood\n");
        for (i, ll) in self.log_likelihood.iter().enumerate() {
            out.push_str(&format!("{},{:.16e}\n", i + 1, ll));
        }
        out
    }
}

/// Simultaneous diagonalization of a positive definite within-class scatter
/// and a positive semi-definite between-class scatter. Returns `(W, values)`
/// with `W sigma_w W' = I`, `W sigma_b W' = diag(values)`, values descending.
pub fn simultaneous_diagonalize(
    sigma_w: &DMatrix<f64>,
    sigma_b: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    linalg::simultaneous_diag_impl(sigma_w, sigma_b)
}

/// Fits the global model by EM on the two-covariance model (full
/// between-class covariance `B`, full within-class covariance `Sigma`),
/// initialized from moment scatters, then diagonalizes.
///
/// With `iterations = 0` the moment scatters are diagonalized directly.
pub fn fit_global(set: &VectorSet, iterations: usize) -> Result<(GlobalModel, EmTrace)> {
    if !set.fully_labeled() {
        return Err(Error::Invalid(
            "global model training requires every record to be labelled".into(),
        ));
    }
    if set.num_classes() < 2 {
        return Err(Error::Invalid(
            "global model training requires at least two classes".into(),
        ));
    }
    let d = set.dim();
    let n_total = set.len() as f64;
    let k_classes = set.num_classes() as f64;

    let mean = linalg::global_mean(set);
    let (within, second_moment) = linalg::within_scatter(set, &mean);
    let stats = linalg::class_stats(set, &mean);

    let mut sigma = within;
    let mut between = DMatrix::zeros(d, d);
    for (count, sum) in stats.counts.iter().zip(&stats.sums) {
        let class_mean = sum / *count as f64;
        between.ger(1.0 / k_classes, &class_mean, &class_mean, 1.0);
    }
    linalg::symmetrize(&mut between);

    let mut trace = EmTrace::default();
    for _ in 0..iterations {
        let (sigma_inv, logdet_sigma) = inverse_with_fallback(&sigma, "within-class covariance")?;
        let (between_inv, logdet_between) =
            inverse_with_fallback(&between, "between-class covariance")?;

        // One posterior covariance per distinct class size.
        let mut per_size: BTreeMap<usize, (DMatrix<f64>, f64)> = BTreeMap::new();
        for &n_k in &stats.counts {
            if let std::collections::btree_map::Entry::Vacant(entry) = per_size.entry(n_k) {
                let lambda = &between_inv + &sigma_inv * n_k as f64;
                entry.insert(linalg::spd_inverse_logdet(&lambda, "posterior precision")?);
            }
        }

        let mut log_likelihood = -0.5 * n_total * d as f64 * LN_2PI
            - 0.5 * n_total * logdet_sigma
            - 0.5 * k_classes * logdet_between
            - 0.5 * (&sigma_inv * &second_moment).trace();
        let mut between_acc = DMatrix::zeros(d, d);
        let mut cross_acc = DMatrix::zeros(d, d);
        let mut weighted_acc = DMatrix::zeros(d, d);
        for (&n_k, sum) in stats.counts.iter().zip(&stats.sums) {
            let (cov, logdet_lambda) = &per_size[&n_k];
            let h = &sigma_inv * sum;
            let posterior_mean = cov * &h;
            log_likelihood += 0.5 * (posterior_mean.dot(&h) - logdet_lambda);
            between_acc.ger(1.0, &posterior_mean, &posterior_mean, 1.0);
            between_acc += cov;
            cross_acc.ger(1.0, &posterior_mean, sum, 1.0);
            weighted_acc.ger(n_k as f64, &posterior_mean, &posterior_mean, 1.0);
            weighted_acc += cov * n_k as f64;
        }
        trace.log_likelihood.push(log_likelihood);

        between = between_acc / k_classes;
        linalg::symmetrize(&mut between);
        sigma = (&second_moment - &cross_acc - cross_acc.transpose() + weighted_acc) / n_total;
        linalg::symmetrize(&mut sigma);
    }

    let (w, raw_epsilon) = match simultaneous_diagonalize(&sigma, &between) {
        Ok(r) => r,
        Err(Error::Numeric(_)) => {
            let ridged = linalg::add_ridge(&sigma, linalg::ridge_lambda(&sigma).max(1e-12));
            simultaneous_diagonalize(&ridged, &between)?
        }
        Err(e) => return Err(e),
    };
    let epsilon = raw_epsilon.into_iter().map(|v| v.max(EPSILON_FLOOR)).collect();
    Ok((
        GlobalModel {
            dim: d,
            mean: mean.as_slice().to_vec(),
            w,
            epsilon,
        },
        trace,
    ))
}

fn inverse_with_fallback(m: &DMatrix<f64>, context: &str) -> Result<(DMatrix<f64>, f64)> {
    match linalg::spd_inverse_logdet(m, context) {
        Ok(r) => Ok(r),
        Err(_) => {
            let ridged = linalg::add_ridge(m, linalg::ridge_lambda(m).max(1e-12));
            linalg::spd_inverse_logdet(&ridged, context)
        }
    }
}

impl GlobalModel {
    /// Maps a vector into model space: `w * (v - mean)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Invalid(format!(
                "model expects dimension {}, got {}",
                self.dim,
                v.len()
            )));
        }
        let centered = DVector::from_fn(self.dim, |j, _| v[j] - self.mean[j]);
        Ok((&self.w * centered).as_slice().to_vec())
    }

    /// Projects every record of a set into model space.
    pub fn project_set(&self, set: &VectorSet) -> Result<VectorSet> {
        if set.dim() != self.dim {
            return Err(Error::Invalid(format!(
                "model expects dimension {}, got set of dimension {}",
                self.dim,
                set.dim()
            )));
        }
        set.map_values(|rec| self.project(&rec.values))
    }

    /// Posterior over the class mean given already-projected enrollment
    /// vectors: per dimension, mean `n e / (n e + 1) * xbar` and variance
    /// `e / (n e + 1)`.
    pub fn enroll_posterior<V: AsRef<[f64]>>(&self, vectors: &[V]) -> Result<EnrollPosterior> {
        if vectors.is_empty() {
            return Err(Error::Invalid(
                "enrollment requires at least one vector".into(),
            ));
        }
        let n = vectors.len();
        let mut sum = vec![0.0; self.dim];
        for v in vectors {
            let v = v.as_ref();
            if v.len() != self.dim {
                return Err(Error::Invalid(format!(
                    "enrollment vector has dimension {}, expected {}",
                    v.len(),
                    self.dim
                )));
            }
            for j in 0..self.dim {
                sum[j] += v[j];
            }
        }
        let nf = n as f64;
        let mut mean = vec![0.0; self.dim];
        let mut var = vec![0.0; self.dim];
        for j in 0..self.dim {
            let eps = self.epsilon[j];
            let denom = nf * eps + 1.0;
            mean[j] = nf * eps / denom * (sum[j] / nf);
            var[j] = eps / denom;
        }
        Ok(EnrollPosterior {
            mean,
            var,
            count: n,
        })
    }

    /// Log marginal density of a projected vector under the global model:
    /// the sum of `log N(x_j; 0, epsilon_j + 1)`.
    pub fn log_marginal(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Invalid(format!(
                "model expects dimension {}, got {}",
                self.dim,
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.epsilon)
            .map(|(&xj, &eps)| log_normal(xj, 0.0, eps + 1.0))
            .sum())
    }
}
