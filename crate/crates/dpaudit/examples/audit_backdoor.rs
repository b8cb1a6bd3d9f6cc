//! Baseline backdoor audit on synthetic images: a white square in the
//! top-left corner, poisoned rows relabeled to the target class, and the
//! perturbed-test-set loss as the distinguishing statistic.

use dpaudit::attacks::{AttackKind, PatchPerturbation};
use dpaudit::harness::{run_audit, AuditConfig, DataSource, SynthSpec};
use dpaudit::trainer::{ModelSpec, SgdConfig};

fn main() -> dpaudit::Result<()> {
    let sgd = SgdConfig {
        clip_norm: Some(0.5),
        noise_multiplier: 0.0,
        epochs: 8,
        batch_size: 100,
        learning_rate: 0.15,
        init_scale: 0.0,
        l2_reg: 0.0,
        claimed_eps_th: None,
        delta: 0.0,
        sampling: Default::default(),
    };
    let data = DataSource::Synth { spec: SynthSpec::parse("n=600,image=14x14,sep=4")? };
    let mut cfg = AuditConfig::new(AttackKind::Backdoor, data, sgd, ModelSpec::logistic());
    cfg.k = 4;
    cfg.trials = 100;
    cfg.calibration_trials = 100;
    cfg.master_seed = 7;
    cfg.patch = Some(PatchPerturbation {
        image_height: 14,
        image_width: 14,
        row0: 0,
        col0: 0,
        size: 3,
        intensity: 1.0,
    });

    let result = run_audit(&cfg)?;
    println!(
        "backdoor poisoning with k={} patched rows: counts ({}, {}) of {}",
        cfg.k, result.counts.ct0, result.counts.ct1, result.counts.t
    );
    println!(
        "eps_lb = {:.4} at {:.0}% confidence (ceiling {:.4})",
        result.estimate.eps_lb,
        (1.0 - cfg.alpha) * 100.0,
        result.eps_opt.unwrap_or(f64::NAN),
    );
    Ok(())
}
