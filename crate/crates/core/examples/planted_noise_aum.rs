// Plant label noise in a Gaussian-cluster dataset, run a threshold-sample AUM
// pass over the whole training set and measure how well the filter recovers
// the flipped labels.
//
// ```bash
// cargo run -p tdmixup --example planted_noise_aum
// ```

use std::collections::BTreeSet;

use tdmixup::aum::{auroc_ascending, ThresholdMode};
use tdmixup::dataset::GaussianClusters;
use tdmixup::pipeline::run_aum_filter;
use tdmixup::{Result, SampleId, TrainerConfig};

pub struct Recovery {
    pub seed: u64,
    pub auroc: f64,
    pub flipped_removed: f64,
    pub clean_removed: f64,
}

pub fn recovery(seed: u64, k: f64) -> Result<Recovery> {
    let planted = GaussianClusters::default().generate(1000, 0.1, "s", seed)?;
    let trainer = TrainerConfig {
        seed,
        ..Default::default()
    };
    let all: BTreeSet<SampleId> = planted.dataset.ids().into_iter().collect();
    let run = run_aum_filter(
        &planted.dataset,
        &all,
        &trainer,
        ThresholdMode::Total,
        seed,
        k,
    )?;
    let report = &run.report;

    let (mut flipped_aum, mut clean_aum) = (Vec::new(), Vec::new());
    let (mut flipped_removed, mut clean_removed) = (0usize, 0usize);
    for (id, &a) in &report.aum_by_sample {
        if report.threshold_ids.contains(id) {
            continue;
        }
        let removed = report.filtered_ids.contains(id);
        if planted.flipped.contains(id) {
            flipped_aum.push(a);
            flipped_removed += removed as usize;
        } else {
            clean_aum.push(a);
            clean_removed += removed as usize;
        }
    }
    Ok(Recovery {
        seed,
        auroc: auroc_ascending(&flipped_aum, &clean_aum)?,
        flipped_removed: flipped_removed as f64 / flipped_aum.len() as f64,
        clean_removed: clean_removed as f64 / clean_aum.len() as f64,
    })
}

pub fn run_example() -> Result<Vec<Recovery>> {
    let mut out = Vec::new();
    for seed in [1, 2, 3] {
        let r = recovery(seed, 80.0)?;
        println!(
            "seed {}: AUROC {:.3}  flipped removed {:.1}%  clean removed {:.1}%",
            r.seed,
            r.auroc,
            100.0 * r.flipped_removed,
            100.0 * r.clean_removed
        );
        out.push(r);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
