// Read a line-delimited dynamics log and summarize each sample's confidence,
// variability, correctness and AUM.
//
// ```bash
// cargo run -p tdmixup --example dynamics_statistics
// ```

use tdmixup::aum::aums_from_log;
use tdmixup::dynamics::{aggregate_stats, ingest_log};
use tdmixup::{Result, SampleStats};

const LOG: &str = r#"{"id": "cat-1", "epoch": 1, "gold": 0, "logits": [2.0, 0.1, -1.0]}
{"id": "cat-1", "epoch": 2, "gold": 0, "logits": [3.1, 0.0, -1.2]}
{"id": "cat-1", "epoch": 3, "gold": 0, "logits": [3.9, -0.3, -1.5]}
{"id": "dog-7", "epoch": 1, "gold": 1, "logits": [0.9, 0.4, 0.0]}
{"id": "dog-7", "epoch": 2, "gold": 1, "logits": [0.2, 1.3, 0.1]}
{"id": "dog-7", "epoch": 3, "gold": 1, "logits": [1.1, 0.8, -0.2]}
{"id": "odd-3", "epoch": 1, "gold": 2, "logits": [1.5, 0.2, -0.4]}
{"id": "odd-3", "epoch": 2, "gold": 2, "logits": [2.2, 0.1, -0.9]}
{"id": "odd-3", "epoch": 3, "gold": 2, "logits": [2.8, 0.3, -1.1]}
"#;

pub fn run_example() -> Result<Vec<SampleStats>> {
    let log = ingest_log(LOG.as_bytes())?;
    let aums = aums_from_log(&log)?;
    let stats = aggregate_stats(&log, Some(&aums))?;
    println!(
        "{:<8} {:>10} {:>11} {:>11} {:>7}",
        "id", "confidence", "variability", "correctness", "aum"
    );
    for s in &stats {
        println!(
            "{:<8} {:>10.3} {:>11.3} {:>11.3} {:>7.3}",
            s.id,
            s.confidence,
            s.variability,
            s.correctness,
            s.aum.unwrap_or(f64::NAN)
        );
    }
    Ok(stats)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
