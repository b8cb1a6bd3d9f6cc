//! The full audit: build the poison plan once, calibrate the threshold,
//! run fresh trial pairs, and convert the counts into the epsilon estimate.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    backdoor_generate, clipbkd_generate, feature_clipbkd_generate, AttackKind,
    FeatureClipBkdParams, FeatureMap, Outcome, PatchPerturbation, PoisonPlan,
};
use crate::error::{Error, Result};
use crate::estimator::{audit_eps, eps_opt, EpsilonEstimate, TrialCounts};
use crate::harness::calibrate::calibrate_threshold;
use crate::harness::config::{AuditConfig, DataSource, RunConfig};
use crate::harness::data::{load_dataset_csv, synth_dataset, synth_test_dataset};
use crate::harness::streams;
use crate::numerics::rng::RngStream;
use crate::trainer::{dp_sgd_train, Arch, Dataset, ModelParams, SgdConfig};

/// Training-accuracy spread over all estimation-phase models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl AccuracySummary {
    pub(crate) fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        Some(Self { min, mean: sum / values.len() as f64, max })
    }
}

/// One audit's outcome: the config echo, the counts, the estimate (flattened
/// into the top level), and the run context needed to interpret it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub config: RunConfig,
    pub counts: TrialCounts,
    #[serde(flatten)]
    pub estimate: EpsilonEstimate,
    pub threshold: f64,
    /// Monte-Carlo ceiling at this trial budget (absent where no
    /// Clopper-Pearson correction applies, e.g. membership inference).
    pub eps_opt: Option<f64>,
    /// Claimed epsilon of the audited mechanism; `null` means infinite.
    pub eps_th: Option<f64>,
    pub accuracy: Option<AccuracySummary>,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
    pub failed_trials: usize,
    pub calibration_eps: Option<f64>,
    pub warnings: Vec<String>,
}

pub(crate) fn crate_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Resolves the configured data source into (train, test) splits.
pub(crate) fn prepare_data(
    source: &DataSource,
    csv_test_fraction: f64,
    master: RngStream,
) -> Result<(Dataset, Dataset)> {
    match source {
        DataSource::Synth { spec } => {
            let train = synth_dataset(spec, master.with_stream(streams::TRAIN_DATA))?;
            let test = synth_test_dataset(spec, master.with_stream(streams::TEST_DATA))?;
            Ok((train, test))
        }
        DataSource::Csv { path } => {
            let full = load_dataset_csv(path)?;
            let test_rows = ((full.n() as f64 * csv_test_fraction) as usize).max(1);
            full.split_tail(test_rows)
        }
    }
}

/// Non-private counterpart of a DP-SGD config, used for reference models.
pub(crate) fn non_private(sgd: &SgdConfig) -> SgdConfig {
    SgdConfig {
        clip_norm: None,
        noise_multiplier: 0.0,
        claimed_eps_th: None,
        delta: 0.0,
        ..sgd.clone()
    }
}

fn build_plan(
    cfg: &AuditConfig,
    train: &Dataset,
    reference: &ModelParams,
    master: RngStream,
) -> Result<PoisonPlan> {
    let plan_stream = master.with_stream(streams::PLAN);
    match cfg.attack {
        AttackKind::Backdoor => {
            let pert = match cfg.patch {
                Some(p) => p,
                None => match &cfg.data {
                    DataSource::Synth { spec } if spec.image.is_some() => {
                        let (h, w) = spec.image.expect("image mode checked");
                        PatchPerturbation::top_left(h, w)
                    }
                    _ => {
                        return Err(Error::InvalidConfig(
                            "backdoor attack needs a patch descriptor for non-image data".into(),
                        ))
                    }
                },
            };
            // Backdoor target: class 1, the flipped label on binary data.
            let target = 1usize.min(train.class_count() - 1);
            backdoor_generate(train, cfg.k, &pert, target, plan_stream)
        }
        AttackKind::ClipBkd => {
            let norm = cfg.poison_norm.unwrap_or_else(|| train.mean_row_norm());
            clipbkd_generate(train, cfg.k, reference, norm, plan_stream)
        }
        AttackKind::FeatureClipBkd => {
            if cfg.model.arch != Arch::Fnn {
                return Err(Error::InvalidConfig(
                    "the feature-space attack needs the fnn model (its hidden layer is the frozen encoder)"
                        .into(),
                ));
            }
            let map = FeatureMap::Hidden(reference.clone());
            let search = cfg
                .feature_search
                .unwrap_or_else(|| FeatureClipBkdParams::for_feature_dim(map.output_dim()));
            feature_clipbkd_generate(&map, train, cfg.k, reference, &search, plan_stream)
        }
    }
}

pub fn run_audit(cfg: &AuditConfig) -> Result<AuditResult> {
    cfg.validate()?;
    let started = Instant::now();
    let master = RngStream::new(cfg.master_seed, 0);
    let mut warnings = Vec::new();

    let (train, test) = prepare_data(&cfg.data, cfg.csv_test_fraction, master)?;
    if cfg.k > train.n() {
        return Err(Error::InvalidConfig(format!(
            "poison size {} exceeds training size {}",
            cfg.k,
            train.n()
        )));
    }

    // One clean non-private reference model per audit, fixed before any
    // trial so the poison plan (and hence D1) stays a fixed dataset.
    let reference = dp_sgd_train(
        &train,
        &non_private(&cfg.sgd),
        &cfg.model,
        master.with_stream(streams::REFERENCE),
    )?;

    let plan = build_plan(cfg, &train, &reference, master)?;
    warnings.extend(plan.warnings.iter().cloned());

    // A k = 0 plan audits identical datasets; the estimator still runs with
    // group size 1 and must report (up to confidence slack) zero.
    let k_eff = cfg.k.max(1);

    let calibration = calibrate_threshold(
        &plan,
        &cfg.sgd,
        &cfg.model,
        &test,
        cfg.calibration_trials,
        k_eff,
        cfg.delta,
        cfg.alpha,
        master,
    )?;
    if calibration.degenerate {
        warnings.push("all calibration statistics identical; threshold set to that value".into());
    }
    let statistic = &calibration.statistic;

    // Estimation phase: fresh trial pairs on disjoint stream ids, merged by
    // trial index so worker count never affects the counts.
    type TrialOutcome = Option<(bool, bool, f64, f64)>;
    let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let run = |arm: u64, data: &Dataset| {
                dp_sgd_train(
                    data,
                    &cfg.sgd,
                    &cfg.model,
                    master.with_stream(streams::estimation(trial, arm)),
                )
            };
            match (run(0, &plan.d0), run(1, &plan.d1)) {
                (Ok(clean), Ok(poisoned)) => {
                    let flagged0 = statistic.evaluate(&clean, &test) == Outcome::Backdoored;
                    let flagged1 = statistic.evaluate(&poisoned, &test) == Outcome::Backdoored;
                    Ok(Some((flagged0, flagged1, clean.accuracy(&plan.d0), poisoned.accuracy(&plan.d1))))
                }
                (Err(Error::TrainingDiverged { .. }), _)
                | (_, Err(Error::TrainingDiverged { .. })) => Ok(None),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        })
        .collect();

    let mut ct0 = 0usize;
    let mut ct1 = 0usize;
    let mut completed = 0usize;
    let mut failed = 0usize;
    let mut accuracies = Vec::with_capacity(2 * cfg.trials);
    for outcome in outcomes {
        match outcome? {
            Some((flagged0, flagged1, acc0, acc1)) => {
                completed += 1;
                if flagged0 {
                    ct0 += 1;
                }
                if flagged1 {
                    ct1 += 1;
                }
                accuracies.push(acc0);
                accuracies.push(acc1);
            }
            None => failed += 1,
        }
    }
    if failed as f64 > 0.01 * cfg.trials as f64 {
        return Err(Error::AuditFailed(format!(
            "{failed} of {} trial pairs diverged (over the 1% budget)",
            cfg.trials
        )));
    }
    if completed == 0 {
        return Err(Error::AuditFailed("no trial pairs completed".into()));
    }
    if failed > 0 {
        warnings.push(format!("{failed} trial pairs diverged and were excluded"));
    }

    let counts = TrialCounts::new(ct0, ct1, completed)?;
    let estimate = audit_eps(&counts, k_eff, cfg.delta, cfg.alpha)?;

    Ok(AuditResult {
        config: RunConfig::Audit(cfg.clone()),
        counts,
        estimate,
        threshold: statistic.threshold,
        eps_opt: Some(eps_opt(completed, cfg.alpha, k_eff)?),
        eps_th: cfg.sgd.claimed_eps_th,
        accuracy: AccuracySummary::from_values(&accuracies),
        seed: cfg.master_seed,
        version: crate_version(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        failed_trials: failed,
        calibration_eps: Some(calibration.calibration_eps),
        warnings,
    })
}
