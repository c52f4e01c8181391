//! Internal dense linear algebra helpers built on nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::corpus::VectorSet;
use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted descending.
/// Returns (eigenvalues, eigenvectors as columns).
pub(crate) fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Inverse and log-determinant of a symmetric positive definite matrix via
/// Cholesky. Fails with `Error::Numeric` when the matrix is not positive
/// definite; callers decide whether to retry with a ridge.
pub(crate) fn spd_inverse_logdet(m: &DMatrix<f64>, context: &str) -> Result<(DMatrix<f64>, f64)> {
    let chol = nalgebra::Cholesky::new(m.clone()).ok_or_else(|| {
        Error::Numeric(format!("{context}: matrix is not positive definite"))
    })?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok((chol.inverse(), log_det))
}

/// Trace-scaled ridge magnitude used by the estimation routines.
pub(crate) fn ridge_lambda(m: &DMatrix<f64>) -> f64 {
    1e-6 * m.trace() / m.nrows() as f64
}

pub(crate) fn add_ridge(m: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += lambda;
    }
    out
}

/// Simultaneous diagonalization of a symmetric positive definite
/// `sigma_w` and a symmetric positive semi-definite `sigma_b`: whitens
/// `sigma_w`, then eigendecomposes the whitened `sigma_b`. The returned `W`
/// satisfies `W sigma_w W' = I` and `W sigma_b W' = diag(values)` with
/// `values` sorted descending.
pub(crate) fn simultaneous_diag_impl(
    sigma_w: &DMatrix<f64>,
    sigma_b: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = sigma_w.nrows();
    if !sigma_w.is_square() || !sigma_b.is_square() || sigma_b.nrows() != d {
        return Err(Error::Invalid(format!(
            "scatter matrices must be square and same size, got {}x{} and {}x{}",
            sigma_w.nrows(),
            sigma_w.ncols(),
            sigma_b.nrows(),
            sigma_b.ncols()
        )));
    }
    let scale_w = sigma_w.iter().fold(1.0_f64, |a, &v| a.max(v.abs()));
    let scale_b = sigma_b.iter().fold(1.0_f64, |a, &v| a.max(v.abs()));
    if max_asymmetry(sigma_w) > 1e-8 * scale_w || max_asymmetry(sigma_b) > 1e-8 * scale_b {
        return Err(Error::Invalid(
            "scatter matrices must be symmetric (asymmetry beyond 1e-8)".into(),
        ));
    }
    let (w_values, w_vectors) = sym_eigen_desc(sigma_w);
    if w_values.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numeric(
            "within-class scatter is not positive definite".into(),
        ));
    }
    // T sigma_w T' = I with T = diag(1/sqrt(values)) * vectors'
    let mut whitener = w_vectors.transpose();
    for (row, &v) in w_values.iter().enumerate() {
        let inv_sqrt = 1.0 / v.sqrt();
        for col in 0..d {
            whitener[(row, col)] *= inv_sqrt;
        }
    }
    let mut whitened_b = &whitener * sigma_b * whitener.transpose();
    symmetrize(&mut whitened_b);
    let (b_values, b_vectors) = sym_eigen_desc(&whitened_b);
    let transform = b_vectors.transpose() * whitener;
    Ok((transform, b_values))
}

/// Per-class first-order statistics of a fully labelled set.
pub(crate) struct ClassStats {
    pub counts: Vec<usize>,
    /// Per-class sums of the (centered) vectors.
    pub sums: Vec<DVector<f64>>,
    pub total: usize,
}

/// Global mean of all records in a set.
pub(crate) fn global_mean(set: &VectorSet) -> DVector<f64> {
    let d = set.dim();
    let mut mean = DVector::zeros(d);
    for rec in set.records() {
        for j in 0..d {
            mean[j] += rec.values[j];
        }
    }
    mean / set.len() as f64
}

/// Class counts and sums of `set` after subtracting `center`.
pub(crate) fn class_stats(set: &VectorSet, center: &DVector<f64>) -> ClassStats {
    let d = set.dim();
    let mut counts = Vec::with_capacity(set.num_classes());
    let mut sums = Vec::with_capacity(set.num_classes());
    for group in set.classes() {
        let mut sum = DVector::zeros(d);
        for &idx in &group.members {
            for j in 0..d {
                sum[j] += set.records()[idx].values[j] - center[j];
            }
        }
        counts.push(group.members.len());
        sums.push(sum);
    }
    ClassStats {
        counts,
        sums,
        total: set.len(),
    }
}

/// Pooled within-class scatter (normalized by the sample count) and the
/// second-moment matrix of the centered data.
pub(crate) fn within_scatter(set: &VectorSet, center: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = set.dim();
    let mut second_moment = DMatrix::zeros(d, d);
    let mut class_mean_part = DMatrix::zeros(d, d);
    for group in set.classes() {
        let n_k = group.members.len() as f64;
        let mut class_sum = DVector::zeros(d);
        for &idx in &group.members {
            let x = DVector::from_fn(d, |j, _| set.records()[idx].values[j] - center[j]);
            second_moment.ger(1.0, &x, &x, 1.0);
            class_sum += &x;
        }
        let class_mean = class_sum / n_k;
        class_mean_part.ger(n_k, &class_mean, &class_mean, 1.0);
    }
    let mut within = &second_moment - &class_mean_part;
    symmetrize(&mut within);
    symmetrize(&mut second_moment);
    let n = set.len() as f64;
    (within / n, second_moment)
}
