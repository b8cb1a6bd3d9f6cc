//! Feature-space ClipBKD: when training happens on top of a frozen encoder,
//! the poison point is searched in input space by projected gradient ascent
//! so its features align with the encoder outputs' least-variance directions.

use dpaudit::attacks::{feature_clipbkd_generate, FeatureClipBkdParams, FeatureMap};
use dpaudit::harness::{synth_dataset, SynthSpec};
use dpaudit::numerics::RngStream;
use dpaudit::trainer::{dp_sgd_train, ModelSpec, SgdConfig};

fn main() -> dpaudit::Result<()> {
    let spec = SynthSpec::parse("n=400,image=8x8,sep=4")?;
    let data = synth_dataset(&spec, RngStream::new(21, 1))?;

    // A non-private network trained on the clean data stands in for the
    // pretrained encoder; its hidden layer is the frozen feature map.
    let encoder_cfg = SgdConfig::non_private(8, 50, 0.1);
    let model = ModelSpec::fnn();
    let encoder = dp_sgd_train(&data, &encoder_cfg, &model, RngStream::new(21, 2))?;
    let map = FeatureMap::Hidden(encoder.clone());
    println!("encoder: {} input pixels -> {} features", data.dim(), map.output_dim());

    let search = FeatureClipBkdParams {
        iterations: 2000,
        ..FeatureClipBkdParams::for_feature_dim(map.output_dim())
    };
    let plan = feature_clipbkd_generate(&map, &data, 2, &encoder, &search, RngStream::new(21, 3))?;

    let (poison, target) = &plan.poison_rows[0];
    println!(
        "poison point stays in the pixel box: min {:.3}, max {:.3}; target class {target}",
        poison.iter().cloned().fold(f64::INFINITY, f64::min),
        poison.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    println!("datasets differ on {} rows", plan.d0.rows_differing(&plan.d1));
    for warning in &plan.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
