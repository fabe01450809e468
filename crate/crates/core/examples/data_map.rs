// Train the base classifier on a noisy Gaussian-cluster dataset, split the
// samples into easy-to-learn / ambiguous / hard-to-learn regions and render
// the data map as SVG.
//
// ```bash
// cargo run -p tdmixup --example data_map -- datamap.svg
// ```

use tdmixup::cartography::{categorize, datamap_points, ids_in, Region, DEFAULT_FRACTION};
use tdmixup::dataset::GaussianClusters;
use tdmixup::dynamics::aggregate_stats;
use tdmixup::svg::render_datamap;
use tdmixup::trainer::train;
use tdmixup::{Result, TrainerConfig};

pub fn run_example() -> Result<String> {
    let planted = GaussianClusters::default().generate(600, 0.1, "s", 7)?;
    let out = train(&planted.dataset, &TrainerConfig::default())?;
    let stats = aggregate_stats(&out.dynamics, None)?;
    let categories = categorize(&stats, DEFAULT_FRACTION)?;

    for region in Region::ALL {
        let ids = ids_in(&categories, region);
        let noisy = ids
            .iter()
            .filter(|id| planted.flipped.contains(*id))
            .count();
        println!(
            "{region:<10} {:>4} samples, {noisy:>3} with planted noise",
            ids.len()
        );
    }
    Ok(render_datamap(
        &datamap_points(&stats, &categories),
        "Gaussian clusters, 10% noise",
    ))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let svg = run_example()?;
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, svg).map_err(|e| tdmixup::Error::io(path, e))?;
    }
    Ok(())
}
