//! A small hyperparameter sweep: noise levels crossed with poison sizes,
//! reporting the per-k bounds and the max over k for each cell.

use dpaudit::attacks::AttackKind;
use dpaudit::harness::{
    run_sweep, sweep_csv, AuditConfig, DataSource, NoiseLevel, SweepSpec, SynthSpec,
};
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
    let mut base = AuditConfig::new(AttackKind::ClipBkd, data, sgd, ModelSpec::logistic());
    base.trials = 50;
    base.calibration_trials = 50;
    base.master_seed = 17;

    let spec = SweepSpec {
        clip_norms: vec![Some(1.0)],
        noise_levels: vec![
            NoiseLevel { sigma: 0.04, eps_th: Some(2.0) },
            NoiseLevel { sigma: 0.02, eps_th: Some(4.0) },
            NoiseLevel { sigma: 0.0, eps_th: None },
        ],
        init_scales: vec![0.0],
        poison_counts: vec![1, 2, 4],
    };
    let output = run_sweep(&spec, &base)?;
    print!("{}", sweep_csv(&output.rows));
    for failure in &output.failures {
        eprintln!("cell failed: {failure}");
    }
    Ok(())
}
