// Hashed character n-gram features for raw text, including sentence pairs,
// fed straight into the base classifier.
//
// ```bash
// cargo run -p tdmixup --example text_featurizer
// ```

use tdmixup::calibration::{accuracy, evaluate};
use tdmixup::dataset::Dataset;
use tdmixup::featurize::HashedNgrams;
use tdmixup::trainer::train;
use tdmixup::{Result, TrainerConfig};

const CORPUS: &str = r#"{"id": "p1", "label": 0, "text": "the weather is sunny and warm today"}
{"id": "p2", "label": 0, "text": "a bright sunny afternoon in the park"}
{"id": "p3", "label": 0, "text": "warm sunshine over the quiet beach"}
{"id": "p4", "label": 0, "text": "sunny skies and a warm breeze"}
{"id": "n1", "label": 1, "text": "heavy rain and cold wind all night"}
{"id": "n2", "label": 1, "text": "a cold rainy morning with grey clouds"}
{"id": "n3", "label": 1, "text": "storm clouds bring rain and cold air"}
{"id": "n4", "label": 1, "text": "rain keeps falling on the cold streets"}
{"id": "q1", "label": 0, "text": "sunny beach", "text_b": "warm afternoon"}
{"id": "q2", "label": 1, "text": "cold rain", "text_b": "grey storm clouds"}
"#;

pub fn run_example() -> Result<f64> {
    let featurizer = HashedNgrams {
        dim: 512,
        ..Default::default()
    };
    let data = Dataset::read_text(CORPUS.as_bytes(), &featurizer, None, "inline corpus".into())?;
    println!("{} samples, {} hashed features each", data.len(), data.dim);
    let config = TrainerConfig {
        epochs: 30,
        batch_size: 4,
        hidden_width: 0,
        learning_rate: 0.5,
        ..Default::default()
    };
    let out = train(&data, &config)?;
    let acc = accuracy(&evaluate(&out.params, &data)?)?;
    println!(
        "training accuracy after {} epochs: {:.2}",
        config.epochs, acc
    );
    Ok(acc)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
