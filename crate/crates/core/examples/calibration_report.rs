// Reliability table and expected calibration error for a trained model.
//
// ```bash
// cargo run -p tdmixup --example calibration_report
// ```

use tdmixup::calibration::{evaluate, reliability};
use tdmixup::dataset::GaussianClusters;
use tdmixup::trainer::train;
use tdmixup::{CalibrationReport, Result, TrainerConfig};

pub fn run_example() -> Result<CalibrationReport> {
    let gen = GaussianClusters {
        separation: 2.0,
        ..Default::default()
    };
    let train_set = gen.generate(900, 0.0, "tr", 11)?.dataset;
    let test_set = gen.generate(900, 0.0, "te", 12)?.dataset;
    let config = TrainerConfig {
        epochs: 20,
        ..Default::default()
    };
    let model = train(&train_set, &config)?.params;
    let report = reliability(&evaluate(&model, &test_set)?, 10)?;
    print!("{}", report.render("overlapping clusters"));
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
