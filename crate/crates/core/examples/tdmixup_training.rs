// The full method in memory: base run, data map, AUM filtering of the
// easy-to-learn region, then training on filtered easy x ambiguous MixUp
// pairs. Compares against a model trained on all data.
//
// ```bash
// cargo run -p tdmixup --example tdmixup_training
// ```

use std::collections::BTreeSet;

use tdmixup::calibration::{evaluate, reliability};
use tdmixup::cartography::{ids_in, Region};
use tdmixup::dataset::GaussianClusters;
use tdmixup::pipeline::{categorize_log, run_aum_filter, train_tdmixup_from_artifacts};
use tdmixup::trainer::train;
use tdmixup::{CalibrationReport, PipelineConfig, Result, SampleId, TrainerConfig};

pub fn run_example() -> Result<(CalibrationReport, CalibrationReport)> {
    let gen = GaussianClusters::default();
    let train_set = gen.generate(1000, 0.1, "tr", 3)?.dataset;
    let test_set = gen.generate(1000, 0.0, "te", 4)?.dataset;
    let config = PipelineConfig::default();
    let trainer = config.trainer_config();

    let base = train(
        &train_set,
        &TrainerConfig {
            mixup: None,
            ..trainer.clone()
        },
    )?;
    let full = reliability(&evaluate(&base.params, &test_set)?, config.n_bins)?;

    let categories = categorize_log(&base.dynamics, config.fraction)?;
    let easy: BTreeSet<SampleId> = ids_in(&categories, Region::EasyToLearn)
        .into_iter()
        .collect();
    let aum = run_aum_filter(
        &train_set,
        &easy,
        &trainer,
        config.threshold_mode,
        config.aum_seed,
        config.easy_k(),
    )?;
    println!(
        "easy-to-learn: {} samples, {} threshold samples, {} filtered at k={}",
        easy.len(),
        aum.report.threshold_ids.len(),
        aum.report.filtered_ids.len(),
        config.easy_k()
    );

    let td = train_tdmixup_from_artifacts(&train_set, &categories, &aum.report, &trainer, None)?;
    let curated = reliability(&evaluate(&td.params, &test_set)?, config.n_bins)?;
    println!(
        "TDMixUp trained on {} of {} samples ({} steps)",
        td.raw_ids_used.len(),
        train_set.len(),
        td.steps
    );
    print!("{}", full.render("all data, no mixing"));
    print!("{}", curated.render("TDMixUp"));
    Ok((full, curated))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
