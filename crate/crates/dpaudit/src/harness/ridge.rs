//! Driver for the output-perturbation ridge study: builds a bounded random
//! design, delegates to the analytic oracle, and wraps the outcome as a
//! standard result record.

use std::time::Instant;

use rand::Rng;

use crate::attacks::{ridge_audit_oracle, RidgeAuditOutcome};
use crate::error::Result;
use crate::estimator::eps_opt;
use crate::harness::audit::{crate_version, AuditResult};
use crate::harness::config::{RidgeStudyConfig, RunConfig};
use crate::harness::streams;
use crate::numerics::matrix::{l2_norm, Matrix};
use crate::numerics::rng::{standard_normal, RngStream};

/// Random design with row norms capped strictly below one, labels uniform in
/// [-0.5, 0.5].
pub(crate) fn bounded_design(
    n: usize,
    dim: usize,
    stream: RngStream,
) -> Result<(Matrix, Vec<f64>)> {
    let mut rng = stream.generator();
    let scale = 1.0 / (dim as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..dim).map(|_| scale * standard_normal(&mut rng)).collect();
            let norm = l2_norm(&row);
            if norm > 0.95 {
                for v in row.iter_mut() {
                    *v *= 0.95 / norm;
                }
            }
            row
        })
        .collect();
    let labels: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    Ok((Matrix::from_rows(&rows)?, labels))
}

pub fn run_ridge_study(cfg: &RidgeStudyConfig) -> Result<(AuditResult, RidgeAuditOutcome)> {
    cfg.validate()?;
    let started = Instant::now();
    let master = RngStream::new(cfg.master_seed, 0);
    let (design, labels) = bounded_design(cfg.n, cfg.dim, master.with_stream(streams::TRAIN_DATA))?;

    let outcome = ridge_audit_oracle(
        &design,
        &labels,
        cfg.lambda,
        cfg.eps,
        cfg.delta,
        cfg.trials,
        cfg.alpha,
        cfg.noise_scale,
        master.with_stream(streams::RIDGE_BASE),
    )?;

    let result = AuditResult {
        config: RunConfig::RidgeStudy(cfg.clone()),
        counts: outcome.counts,
        estimate: outcome.estimate.clone(),
        threshold: outcome.midpoint,
        eps_opt: Some(eps_opt(cfg.trials, cfg.alpha, 1)?),
        eps_th: Some(cfg.eps),
        accuracy: None,
        seed: cfg.master_seed,
        version: crate_version(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        failed_trials: 0,
        calibration_eps: None,
        warnings: Vec::new(),
    };
    Ok((result, outcome))
}
