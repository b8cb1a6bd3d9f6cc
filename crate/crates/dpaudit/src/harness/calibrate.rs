//! Threshold calibration: train fresh models on both arms, evaluate the raw
//! statistic on each, and pick the observed value (and direction) whose
//! output set maximizes the calibration-phase epsilon estimate. Calibration
//! trials are never reused for the final estimate.

use rayon::prelude::*;

use crate::attacks::{PoisonPlan, TestStatistic};
use crate::error::{Error, Result};
use crate::estimator::{audit_eps, TrialCounts};
use crate::harness::streams;
use crate::numerics::rng::RngStream;
use crate::trainer::{dp_sgd_train, Dataset, ModelSpec, SgdConfig};

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub statistic: TestStatistic,
    /// Best epsilon seen on the calibration counts (diagnostic only; the
    /// reported bound always comes from the fresh estimation phase).
    pub calibration_eps: f64,
    /// All raw statistics were identical; the threshold is that value.
    pub degenerate: bool,
    pub failed_trials: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn calibrate_threshold(
    plan: &PoisonPlan,
    sgd: &SgdConfig,
    model: &ModelSpec,
    test_data: &Dataset,
    calibration_trials: usize,
    k: usize,
    delta: f64,
    alpha: f64,
    master: RngStream,
) -> Result<CalibrationResult> {
    if calibration_trials < 2 {
        return Err(Error::InvalidConfig("calibration needs at least 2 trials".into()));
    }

    let outcomes: Vec<Result<Option<(f64, f64)>>> = (0..calibration_trials)
        .into_par_iter()
        .map(|trial| {
            let run = |arm: u64, data: &Dataset| {
                dp_sgd_train(data, sgd, model, master.with_stream(streams::calibration(trial, arm)))
            };
            let clean = run(0, &plan.d0);
            let poisoned = run(1, &plan.d1);
            match (clean, poisoned) {
                (Ok(clean), Ok(poisoned)) => Ok(Some((
                    plan.statistic.raw(&clean, test_data),
                    plan.statistic.raw(&poisoned, test_data),
                ))),
                (Err(Error::TrainingDiverged { .. }), _)
                | (_, Err(Error::TrainingDiverged { .. })) => Ok(None),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        })
        .collect();

    let mut clean_stats = Vec::new();
    let mut poisoned_stats = Vec::new();
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some((s0, s1)) => {
                clean_stats.push(s0);
                poisoned_stats.push(s1);
            }
            None => failed += 1,
        }
    }
    if clean_stats.len() < 2 {
        return Err(Error::AuditFailed(format!(
            "calibration lost {failed} of {calibration_trials} trial pairs to divergence"
        )));
    }
    let t = clean_stats.len();

    let mut candidates: Vec<f64> =
        clean_stats.iter().chain(poisoned_stats.iter()).copied().collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    candidates.dedup();

    if candidates.len() == 1 {
        // Every model produced the same statistic; nothing to threshold on.
        let statistic = TestStatistic {
            statistic: plan.statistic.clone(),
            threshold: candidates[0],
            flag_above: true,
        };
        return Ok(CalibrationResult {
            statistic,
            calibration_eps: 0.0,
            degenerate: true,
            failed_trials: failed,
        });
    }

    let mut best_eps = -1.0;
    let mut best_threshold = candidates[0];
    let mut best_flag_above = true;
    for &z in &candidates {
        for flag_above in [true, false] {
            let count = |stats: &[f64]| {
                stats
                    .iter()
                    .filter(|&&s| if flag_above { s > z } else { s < z })
                    .count()
            };
            let counts = TrialCounts::new(count(&clean_stats), count(&poisoned_stats), t)?;
            let eps = audit_eps(&counts, k, delta, alpha)?.eps_lb;
            if eps > best_eps {
                best_eps = eps;
                best_threshold = z;
                best_flag_above = flag_above;
            }
        }
    }

    Ok(CalibrationResult {
        statistic: TestStatistic {
            statistic: plan.statistic.clone(),
            threshold: best_threshold,
            flag_above: best_flag_above,
        },
        calibration_eps: best_eps,
        degenerate: false,
        failed_trials: failed,
    })
}
