// The command-line stages driven from code: each stage reads the previous
// stage's artifacts from a working directory and writes its own.
//
// ```bash
// cargo run -p tdmixup --example staged_pipeline -- /tmp/tdmixup-work
// ```

use std::path::{Path, PathBuf};

use tdmixup::dataset::GaussianClusters;
use tdmixup::pipeline::write_atomic;
use tdmixup::{AumTarget, Pipeline, PipelineConfig, Result};

pub fn run_in(workdir: &Path) -> Result<Pipeline> {
    let gen = GaussianClusters::default();
    let train = gen.generate(600, 0.1, "tr", 5)?;
    let test = gen.generate(300, 0.0, "te", 6)?;
    let train_path = workdir.join("train.jsonl");
    let test_path = workdir.join("test.jsonl");
    write_atomic(&train_path, &train.dataset.to_vectors_jsonl())?;
    write_atomic(&test_path, &test.dataset.to_vectors_jsonl())?;

    let config = PipelineConfig {
        train: Some(train_path),
        test: Some(test_path),
        workdir: workdir.join("artifacts"),
        epochs: 4,
        ..Default::default()
    };
    let pipeline = Pipeline::new(config);

    let base = pipeline.train_dynamics()?;
    println!("train-dynamics: {} records", base.dynamics.num_records());
    let categories = pipeline.datamap()?;
    println!("datamap: {} samples categorized", categories.len());
    let report = pipeline.aum_filter(AumTarget::Easy, None, &[50.0, 80.0])?;
    println!(
        "aum-filter: threshold {:.3}, {} filtered",
        report.threshold_value,
        report.filtered_ids.len()
    );
    let td = pipeline.tdmixup_train()?;
    println!("tdmixup-train: {} steps", td.steps);
    let (in_domain, _) = pipeline.evaluate(None)?;
    print!("{}", in_domain.render("evaluate"));
    Ok(pipeline)
}

pub fn run_example() -> Result<Pipeline> {
    let dir = std::env::temp_dir().join(format!("tdmixup-staged-{}", std::process::id()));
    let out = run_in(&dir);
    let _ = std::fs::remove_dir_all(&dir);
    out
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run_in(&PathBuf::from(dir)).map(|_| ()),
        None => run_example().map(|_| ()),
    }
}
