//! Generating synthetic datasets and round-tripping them through the CSV
//! format the `audit` subcommand consumes.

use dpaudit::harness::{dataset_to_csv, parse_dataset_csv, synth_dataset, SynthSpec};
use dpaudit::numerics::RngStream;

fn main() -> dpaudit::Result<()> {
    let tabular = SynthSpec::parse("n=8,d=4,sep=3,decay=0.7")?;
    let data = synth_dataset(&tabular, RngStream::new(11, 0))?;
    let csv = dataset_to_csv(&data);
    println!("{csv}");

    let reparsed = parse_dataset_csv(&csv)?;
    println!("round trip identical: {}", reparsed == data);

    let images = SynthSpec::parse("n=100,image=8x8,sep=4")?;
    let image_data = synth_dataset(&images, RngStream::new(11, 1))?;
    println!(
        "image mode: {} rows of {} pixels, mean row norm {:.3}",
        image_data.n(),
        image_data.dim(),
        image_data.mean_row_norm()
    );
    Ok(())
}
