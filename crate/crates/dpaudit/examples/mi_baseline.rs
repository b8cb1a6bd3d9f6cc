//! Membership-inference baseline: the loss-threshold attack averaged over
//! several trained models. Overfit models leak membership; the advantage
//! converts to an epsilon lower bound via ln(adv / (1 - adv)).

use dpaudit::harness::{run_mi_baseline, DataSource, MiConfig, SynthSpec};
use dpaudit::trainer::{ModelSpec, SgdConfig};

fn main() -> dpaudit::Result<()> {
    // A tiny training set with many epochs memorizes; membership shows in
    // the losses.
    let spec = SynthSpec::parse("n=60,d=20,sep=1.5,decay=1.0,test=60")?;
    let cfg = MiConfig {
        samples: 120,
        models: 10,
        sgd: SgdConfig::non_private(60, 10, 0.3),
        model: ModelSpec::logistic(),
        data: DataSource::Synth { spec },
        master_seed: 3,
    };
    let result = run_mi_baseline(&cfg)?;
    println!(
        "advantage {:.3} over {} member + {} non-member queries, {} models",
        result.estimate.p0_hat,
        cfg.samples / 2,
        cfg.samples / 2,
        cfg.models
    );
    println!("eps_lb = {:.4}", result.estimate.eps_lb);
    println!("mean training loss threshold {:.4}", result.threshold);
    Ok(())
}
