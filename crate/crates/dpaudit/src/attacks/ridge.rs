//! Analytically auditable mechanism: ridge regression released through
//! output perturbation. The poison pair differs only in the sign of one
//! appended label, the exact solutions differ by a closed-form multiple of
//! the least-variance direction, and the optimal distinguisher thresholds
//! the released parameters along that direction.

use crate::error::{Error, Result};
use crate::estimator::{audit_eps, EpsilonEstimate, TrialCounts};
use crate::numerics::matrix::{cholesky_solve, dot, l2_norm, Matrix};
use crate::numerics::rng::{fill_gaussian, RngStream};
use crate::numerics::svd::svd;

/// The two regression datasets built by the poison pair: shared features,
/// labels differing only in the appended entry's sign.
#[derive(Debug, Clone)]
pub struct RidgePair {
    pub features: Matrix,
    pub labels_d0: Vec<f64>,
    pub labels_d1: Vec<f64>,
    /// Unit least-variance direction of the original design (the appended row).
    pub direction: Vec<f64>,
    /// Smallest eigenvalue of XᵀX, the `sigma_d` of the closed form.
    pub gram_min_eigenvalue: f64,
}

/// Appends `(v_d, +0.5)` and `(v_d, -0.5)` to the design. Requires every row
/// norm at most one and labels within [-0.5, 0.5].
pub fn ridge_poison_pair(x: &Matrix, y: &[f64]) -> Result<RidgePair> {
    if y.len() != x.rows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} rows",
            y.len(),
            x.rows()
        )));
    }
    for i in 0..x.rows() {
        let norm = l2_norm(x.row(i));
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "row {i} has norm {norm}, the mechanism requires norms <= 1"
            )));
        }
    }
    if let Some(bad) = y.iter().find(|v| v.abs() > 0.5 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside [-0.5, 0.5]"
        )));
    }
    let decomposition = svd(x)?;
    let direction = decomposition.least_variance_direction();
    let sigma_min = decomposition.smallest_singular_value();
    let features = x.with_appended_row(&direction)?;
    let mut labels_d0 = y.to_vec();
    labels_d0.push(0.5);
    let mut labels_d1 = y.to_vec();
    labels_d1.push(-0.5);
    Ok(RidgePair {
        features,
        labels_d0,
        labels_d1,
        direction,
        gram_min_eigenvalue: sigma_min * sigma_min,
    })
}

/// Exact ridge solution `(lambda I + XᵀX)^-1 XᵀY`.
pub fn ridge_solve(features: &Matrix, labels: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument("ridge lambda must be positive".into()));
    }
    let mut normal = features.gram();
    for i in 0..normal.rows() {
        let v = normal.get(i, i) + lambda;
        normal.set(i, i, v);
    }
    let rhs = features.transpose().matvec(labels);
    cholesky_solve(&normal, &rhs)
}

#[derive(Debug, Clone)]
pub struct RidgeAuditOutcome {
    pub estimate: EpsilonEstimate,
    pub counts: TrialCounts,
    /// Max-abs deviation between the solved and closed-form `w0 - w1`.
    pub closed_form_residual: f64,
    /// Standard deviation of the DP-calibrated release noise.
    pub noise_std: f64,
    /// Distinguisher midpoint `0.5 (w0 + w1) . v_d`.
    pub midpoint: f64,
    pub gram_min_eigenvalue: f64,
    /// `lambda eps / ((1 + lambda + sigma_d) sqrt(pi ln(1.25/delta))) - 4 delta`.
    pub analytic_lower_bound: f64,
}

/// Runs the full analytic audit: exact solutions, closed-form verification,
/// Monte-Carlo sampling of noisy releases through the optimal distinguisher,
/// and the epsilon estimate from the resulting counts.
///
/// `noise_scale` multiplies the DP-calibrated noise (1.0 audits the honest
/// mechanism; larger values audit a strictly more private one).
#[allow(clippy::too_many_arguments)]
pub fn ridge_audit_oracle(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    eps: f64,
    delta: f64,
    trials: usize,
    alpha: f64,
    noise_scale: f64,
    stream: RngStream,
) -> Result<RidgeAuditOutcome> {
    if eps.is_nan() || eps <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidArgument(
            "output perturbation needs eps > 0 and delta in (0, 1)".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if noise_scale.is_nan() || noise_scale < 1.0 {
        return Err(Error::InvalidArgument("noise scale must be >= 1".into()));
    }
    let pair = ridge_poison_pair(x, y)?;
    let w0 = ridge_solve(&pair.features, &pair.labels_d0, lambda)?;
    let w1 = ridge_solve(&pair.features, &pair.labels_d1, lambda)?;

    // Closed form: w0 - w1 = v_d / (lambda + sigma_d + 1).
    let scale = 1.0 / (lambda + pair.gram_min_eigenvalue + 1.0);
    let mut residual = 0.0f64;
    for i in 0..w0.len() {
        let closed = pair.direction[i] * scale;
        residual = residual.max((w0[i] - w1[i] - closed).abs());
    }
    if residual > 1e-8 {
        return Err(Error::NumericalCheck(format!(
            "closed-form parameter difference violated: residual {residual}"
        )));
    }

    // Gaussian mechanism calibrated to (eps, delta) with sensitivity 2/lambda.
    let noise_std = noise_scale * (2.0 * (1.25 / delta).ln()).sqrt() * (2.0 / lambda) / eps;
    let midpoint = 0.5 * (dot(&w0, &pair.direction) + dot(&w1, &pair.direction));

    // Output set O: the distinguisher fires (release projects below the
    // midpoint along v_d).
    let dim = w0.len();
    let mut noise = vec![0.0; dim];
    let mut ct0 = 0usize;
    let mut ct1 = 0usize;
    for trial in 0..trials {
        for (arm, w) in [(0u64, &w0), (1u64, &w1)] {
            let trial_stream =
                stream.with_stream(stream.stream.wrapping_add(1 + 2 * trial as u64 + arm));
            let mut rng = trial_stream.generator();
            fill_gaussian(&mut rng, &mut noise, noise_std);
            let projection: f64 = (0..dim).map(|i| (w[i] + noise[i]) * pair.direction[i]).sum();
            if projection < midpoint {
                if arm == 0 {
                    ct0 += 1;
                } else {
                    ct1 += 1;
                }
            }
        }
    }
    let counts = TrialCounts::new(ct0, ct1, trials)?;
    let estimate = audit_eps(&counts, 1, delta, alpha)?;

    let analytic_lower_bound = lambda * eps
        / ((1.0 + lambda + pair.gram_min_eigenvalue)
            * (std::f64::consts::PI * (1.25 / delta).ln()).sqrt())
        - 4.0 * delta;

    Ok(RidgeAuditOutcome {
        estimate,
        counts,
        closed_form_residual: residual,
        noise_std,
        midpoint,
        gram_min_eigenvalue: pair.gram_min_eigenvalue,
        analytic_lower_bound,
    })
}
