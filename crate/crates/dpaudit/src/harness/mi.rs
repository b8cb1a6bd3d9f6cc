//! Membership-inference baseline driver: trains several models, applies the
//! loss-threshold attack to each, and converts the averaged advantage into
//! an epsilon lower bound.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{eps_from_advantage, EpsilonEstimate, TrialCounts};
use crate::harness::audit::{crate_version, prepare_data, AccuracySummary, AuditResult};
use crate::harness::config::{MiConfig, RunConfig};
use crate::harness::streams;
use crate::numerics::rng::RngStream;
use crate::trainer::dp_sgd_train;

pub fn run_mi_baseline(cfg: &MiConfig) -> Result<AuditResult> {
    cfg.validate()?;
    let started = Instant::now();
    let master = RngStream::new(cfg.master_seed, 0);
    let side = cfg.samples / 2;

    let (train_pool, test_pool) = prepare_data(&cfg.data, 0.5, master)?;
    if train_pool.n() < side || test_pool.n() < side {
        return Err(Error::InvalidConfig(format!(
            "membership inference needs {side} member and {side} non-member rows, \
             have {} and {}",
            train_pool.n(),
            test_pool.n()
        )));
    }
    let members = train_pool.take(side)?;
    let non_members = test_pool.take(side)?;

    struct ModelOutcome {
        train_correct: usize,
        test_correct: usize,
        training_loss: f64,
        accuracy: f64,
    }

    let outcomes: Vec<Result<ModelOutcome>> = (0..cfg.models)
        .into_par_iter()
        .map(|model_idx| {
            let stream = master.with_stream(streams::MI_BASE + model_idx as u64);
            let params = dp_sgd_train(&members, &cfg.sgd, &cfg.model, stream)?;
            let training_loss = params.mean_loss(&members);
            let mut train_correct = 0;
            let mut test_correct = 0;
            for i in 0..side {
                let (x, y) = members.example(i);
                if params.loss(x, y) < training_loss {
                    train_correct += 1;
                }
                let (x, y) = non_members.example(i);
                if params.loss(x, y) > training_loss {
                    test_correct += 1;
                }
            }
            Ok(ModelOutcome {
                train_correct,
                test_correct,
                training_loss,
                accuracy: params.accuracy(&members),
            })
        })
        .collect();

    let mut ct0 = 0usize;
    let mut ct1 = 0usize;
    let mut loss_sum = 0.0;
    let mut accuracies = Vec::with_capacity(cfg.models);
    for outcome in outcomes {
        let o = outcome?;
        ct0 += o.train_correct;
        ct1 += o.test_correct;
        loss_sum += o.training_loss;
        accuracies.push(o.accuracy);
    }
    let evaluations = side * cfg.models;
    let advantage = (ct0 + ct1) as f64 / (2 * evaluations) as f64;

    // No Clopper-Pearson correction in this baseline; alpha reports 1.0.
    let estimate = EpsilonEstimate {
        p0_hat: advantage,
        p1_hat: 1.0 - advantage,
        eps_lb: eps_from_advantage(advantage),
        k: 1,
        delta: 0.0,
        alpha: 1.0,
        used_complement: false,
        used_arm_swap: false,
    };

    Ok(AuditResult {
        config: RunConfig::MembershipInference(cfg.clone()),
        counts: TrialCounts::new(ct0, ct1, evaluations)?,
        estimate,
        threshold: loss_sum / cfg.models as f64,
        eps_opt: None,
        eps_th: cfg.sgd.claimed_eps_th,
        accuracy: AccuracySummary::from_values(&accuracies),
        seed: cfg.master_seed,
        version: crate_version(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        failed_trials: 0,
        calibration_eps: None,
        warnings: Vec::new(),
    })
}
