//! Numerical rank and finite-difference Jacobians.

use nalgebra::DMatrix;

/// Default relative singular-value threshold.
pub const RANK_TAU: f64 = 1e-7;

/// Default relative step for central differences.
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Number of singular values exceeding `tau * sigma_max`.
///
/// Returns `None` for a matrix with non-finite entries.
pub fn numeric_rank(m: &DMatrix<f64>, tau: f64) -> Option<usize> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Some(0);
    }
    Some(sv.iter().filter(|&&s| s > tau * smax).count())
}

/// Rows scaled to unit Euclidean norm; zero rows are kept.
pub fn equilibrate_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    out
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Central-difference Jacobian of `f` at `x`, step `h * max(1, |x_j|)` per column.
pub fn central_jacobian<F, E>(mut f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut rows = 0;
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        rows = fp.len();
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<f64>>(),
        );
    }
    Ok(DMatrix::from_fn(rows, x.len(), |r, c| cols[c][r]))
}
