// Beta-distributed mixing coefficients, one interpolated pair and the two
// pair schedules (easy x ambiguous and random).
//
// ```bash
// cargo run -p tdmixup --example mixup_pairs
// ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdmixup::mixup::{build_random_schedule, build_td_schedule, mix_pair, sample_lambda};
use tdmixup::{MixupConfig, Result, Sample, SampleId};

pub fn run_example() -> Result<(f64, f64)> {
    let config = MixupConfig {
        batch_size: 3,
        seed: 42,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let draws: Vec<f64> = (0..20_000)
        .map(|_| sample_lambda(config.alpha, &mut rng))
        .collect::<Result<_>>()?;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / draws.len() as f64;
    println!(
        "Beta({0}, {0}): mean {mean:.4}, variance {var:.4}",
        config.alpha
    );

    let a = Sample {
        id: "easy-0".into(),
        label: 0,
        features: vec![1.0, 0.0, 2.0],
    };
    let b = Sample {
        id: "amb-4".into(),
        label: 2,
        features: vec![0.0, 1.0, -2.0],
    };
    let m = mix_pair(&a, &b, 0.7, 3)?;
    println!(
        "mixed features {:?}, soft label {:?}",
        m.features, m.soft_label
    );

    let easy: Vec<SampleId> = (0..5).map(|i| SampleId(format!("easy-{i}"))).collect();
    let ambiguous: Vec<SampleId> = (0..3).map(|i| SampleId(format!("amb-{i}"))).collect();
    let td = build_td_schedule(&easy, &ambiguous, &config, &mut rng)?;
    println!("easy x ambiguous schedule, {} batches:", td.num_batches());
    print!("{}", td.to_jsonl());
    let pool: Vec<SampleId> = easy.iter().chain(&ambiguous).cloned().collect();
    let random = build_random_schedule(&pool, &config, &mut rng)?;
    println!("random schedule, {} batches:", random.num_batches());
    print!("{}", random.to_jsonl());
    Ok((mean, var))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
