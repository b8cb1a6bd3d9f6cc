//! Singular value decomposition for small dense matrices.
//!
//! One-sided Jacobi (Hestenes): plane rotations orthogonalize the columns of
//! a working copy of X, accumulating the rotations into V. Column norms of
//! the rotated matrix are the singular values. Adequate and dependency-free
//! at the few-hundred-dimension scale this crate works at.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Relative off-diagonal mass below which a column pair counts as orthogonal.
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Result of `svd`: `x = u * diag(singular_values) * v^T`.
///
/// Singular values are sorted non-increasing; columns of `v` are orthonormal
/// right singular vectors. Signs are fixed so the largest-magnitude entry of
/// each right singular vector is positive.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    /// Right singular vector for the smallest singular value (last column of
    /// `v` after the non-increasing sort; ties resolve to the last column).
    pub fn least_variance_direction(&self) -> Vec<f64> {
        self.v.col(self.v.cols() - 1)
    }

    pub fn smallest_singular_value(&self) -> f64 {
        *self.singular_values.last().expect("non-empty spectrum")
    }
}

pub fn svd(x: &Matrix) -> Result<SvdResult> {
    if !x.is_finite() {
        return Err(Error::Matrix("svd: input has non-finite entries".into()));
    }
    if x.rows() >= x.cols() {
        hestenes(x)
    } else {
        // Work on the transpose and swap the factors back.
        let r = hestenes(&x.transpose())?;
        Ok(SvdResult { u: r.v, singular_values: r.singular_values, v: r.u })
    }
}

fn hestenes(x: &Matrix) -> Result<SvdResult> {
    let m = x.rows();
    let n = x.cols();
    let mut a = x.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    app += aip * aip;
                    aqq += aiq * aiq;
                    apq += aip * aiq;
                }
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                if apq.abs() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; normalized columns form U.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j) * a.get(i, j)).sum::<f64>().sqrt())
        .collect();
    // Stable sort keeps original column order among ties.
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sv = norms[src];
        singular_values.push(sv);
        // Sign convention: largest-magnitude entry of the right singular
        // vector is positive; U flips with V to preserve the product.
        let col: Vec<f64> = v.col(src);
        let mut lead = 0;
        for (i, entry) in col.iter().enumerate() {
            if entry.abs() > col[lead].abs() {
                lead = i;
            }
        }
        let flip = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for (i, entry) in col.iter().enumerate() {
            v_sorted.set(i, dst, flip * entry);
        }
        if sv > 0.0 {
            for i in 0..m {
                u.set(i, dst, flip * a.get(i, src) / sv);
            }
        }
    }

    Ok(SvdResult { u, singular_values, v: v_sorted })
}
