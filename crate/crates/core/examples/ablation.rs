// Random-pair MixUp versus easy x ambiguous MixUp over matched seeds on a
// Gaussian-cluster benchmark with 10% planted label noise.
//
// ```bash
// cargo run --release -p tdmixup --example ablation
// ```

use tdmixup::dataset::GaussianClusters;
use tdmixup::pipeline::{run_ablation, AblationReport};
use tdmixup::{PipelineConfig, Result};

pub fn run_example() -> Result<AblationReport> {
    let gen = GaussianClusters::default();
    let train_set = gen.generate(1000, 0.1, "tr", 21)?.dataset;
    let test_set = gen.generate(1000, 0.0, "te", 22)?.dataset;
    let config = PipelineConfig {
        ablation_seeds: vec![1, 2, 3],
        ..Default::default()
    };
    let report = run_ablation(&train_set, &test_set, &config)?;
    print!("{}", report.render());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
