//! Small dense linear-algebra helpers shared by the solver and estimators.

use nalgebra::{DMatrix, SymmetricEigen};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
///
/// Returns the pseudo-inverse together with the numerical rank.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return (DMatrix::zeros(cols, rows), 0);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max;

    let mut pinv = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            // pinv += v_i * u_iᵀ / s
            let v_i = v_t.row(i).transpose();
            let u_i = u.column(i);
            pinv += (v_i * u_i.transpose()) / s;
        }
    }
    (pinv, rank)
}

/// Numerical rank with the same cutoff convention as [`pseudo_inverse`].
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let cutoff = rel_tol * sv.max();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() <= rel_tol * scale
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
