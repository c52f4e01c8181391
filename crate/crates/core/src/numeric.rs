//! Small numeric helpers shared by the model and scoring code.

/// ln(2*pi)
pub const LN_2PI: f64 = 1.837877066409345;

/// Floor applied to variances before log-density evaluation so that extreme
/// configurations stay in the log domain instead of overflowing.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Log-density of a univariate Gaussian, with the variance floored at
/// [`VARIANCE_FLOOR`].
#[inline]
pub fn log_normal(x: f64, mean: f64, variance: f64) -> f64 {
    let var = variance.max(VARIANCE_FLOOR);
    let diff = x - mean;
    -0.5 * (LN_2PI + var.ln() + diff * diff / var)
}

/// Pairwise (tree) summation. Deterministic for a fixed input order and more
/// accurate than a running sum when many terms are accumulated.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Pairwise summation of equal-length vectors, reduced in slice order.
pub fn pairwise_sum_vectors(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    fn reduce(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
        match rows.len() {
            0 => vec![0.0; dim],
            1 => rows[0].clone(),
            n => {
                let mid = n / 2;
                let mut left = reduce(&rows[..mid], dim);
                let right = reduce(&rows[mid..], dim);
                for (l, r) in left.iter_mut().zip(&right) {
                    *l += r;
                }
                left
            }
        }
    }
    reduce(rows, dim)
}

/// Formats an `f64` as the shortest decimal string that parses back to the
/// identical bit pattern. Ordinary magnitudes use positional notation,
/// extreme ones scientific, so files stay both exact and readable.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
