//! Full ClipBKD audit on synthetic data: noise-free fixed-init DP-SGD, which
//! a clipping-aware attack distinguishes perfectly, driving the bound to the
//! Monte-Carlo ceiling.

use dpaudit::attacks::AttackKind;
use dpaudit::estimator::eps_opt;
use dpaudit::harness::{run_audit, AuditConfig, DataSource, SynthSpec};
use dpaudit::trainer::{ModelSpec, SgdConfig};

fn main() -> dpaudit::Result<()> {
    let sgd = SgdConfig {
        clip_norm: Some(1.0),
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
    let data = DataSource::Synth { spec: SynthSpec::parse("n=1000,d=20,sep=4,decay=0.55")? };
    let mut cfg = AuditConfig::new(AttackKind::ClipBkd, data, sgd, ModelSpec::logistic());
    cfg.trials = 500;
    cfg.calibration_trials = 500;
    cfg.master_seed = 42;

    let result = run_audit(&cfg)?;
    println!(
        "counts: ct0={} ct1={} of t={}",
        result.counts.ct0, result.counts.ct1, result.counts.t
    );
    println!(
        "eps_lb = {:.4}  (ceiling eps_opt = {:.4})",
        result.estimate.eps_lb,
        eps_opt(result.counts.t, cfg.alpha, cfg.k)?
    );
    if let Some(acc) = &result.accuracy {
        println!("training accuracy: min {:.3} mean {:.3} max {:.3}", acc.min, acc.mean, acc.max);
    }
    println!("threshold Z = {:.6}, wall time {:.2}s", result.threshold, result.wall_time_secs);
    Ok(())
}
