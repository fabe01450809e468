use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tdmixup::dataset::GaussianClusters;
use tdmixup::pipeline::{write_atomic, AumTarget, Pipeline};
use tdmixup::{Error, PipelineConfig, Result};

#[derive(Parser)]
#[command(
    name = "tdmixup",
    version,
    about = "Training-dynamics data curation and easy x ambiguous MixUp"
)]
struct Cli {
    /// Flat TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `workdir`.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Extra `key=value` configuration overrides.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the base model and log per-epoch dynamics.
    TrainDynamics,
    /// Categorize samples and draw the data map.
    Datamap,
    /// Threshold-sample AUM run over a region (easy, ambiguous or all).
    AumFilter {
        #[arg(long, default_value = "easy")]
        target: AumTarget,
        /// Percentile; defaults to the configured k for the target.
        #[arg(long)]
        k: Option<f64>,
        /// Also write one report per percentile in this comma-separated list.
        #[arg(long, value_delimiter = ',')]
        k_grid: Vec<f64>,
    },
    /// Train TDMixUp on AUM-filtered easy x ambiguous samples.
    TdmixupTrain,
    /// Accuracy and ECE on the test set (and the OOD test set if configured).
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        ood_test: Option<PathBuf>,
    },
    /// Random-pair MixUp versus TDMixUp over the configured seeds.
    Ablation,
    /// Write a Gaussian-cluster benchmark with planted label noise.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        test_n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
    },
}

// Writes to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(dir) = &cli.workdir {
        overrides.push(format!(
            "workdir={}",
            toml_string(&dir.display().to_string())
        ));
    }
    match &cli.config {
        Some(path) => PipelineConfig::load(path, &overrides),
        None => PipelineConfig::from_toml_with_overrides("", &overrides),
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::TrainDynamics => {
            let pipeline = Pipeline::new(config);
            let out = pipeline.train_dynamics()?;
            say!(
                "logged {} records for {} samples to {}",
                out.dynamics.num_records(),
                out.dynamics.len(),
                pipeline.artifact(tdmixup::pipeline::DYNAMICS_LOG).display()
            );
        }
        Command::Datamap => {
            let pipeline = Pipeline::new(config);
            let categories = pipeline.datamap()?;
            for region in tdmixup::Region::ALL {
                let n = categories.iter().filter(|c| c.region == region).count();
                say!("{region:<10} {n}");
            }
        }
        Command::AumFilter { target, k, k_grid } => {
            let pipeline = Pipeline::new(config);
            let report = pipeline.aum_filter(target, k, &k_grid)?;
            say!(
                "k={} threshold={:.4} threshold samples={} filtered={} retained={}",
                report.percentile_k,
                report.threshold_value,
                report.threshold_ids.len(),
                report.filtered_ids.len(),
                report.retained_ids().len()
            );
            for kg in k_grid {
                let swept = report.with_percentile(kg)?;
                say!(
                    "  k={kg}: threshold={:.4} filtered={}",
                    swept.threshold_value,
                    swept.filtered_ids.len()
                );
            }
        }
        Command::TdmixupTrain => {
            let pipeline = Pipeline::new(config);
            let out = pipeline.tdmixup_train()?;
            say!(
                "trained {} steps on {} raw samples; checkpoint {}",
                out.steps,
                out.raw_ids_used.len(),
                pipeline
                    .artifact(tdmixup::pipeline::TDMIXUP_CHECKPOINT)
                    .display()
            );
        }
        Command::Evaluate {
            checkpoint,
            test,
            ood_test,
        } => {
            if test.is_some() {
                config.test = test;
            }
            if ood_test.is_some() {
                config.ood_test = ood_test;
            }
            let pipeline = Pipeline::new(config);
            let (report, ood) = pipeline.evaluate(checkpoint.as_deref())?;
            let _ = write!(std::io::stdout(), "{}", report.render("in-domain"));
            if let Some(r) = ood {
                let _ = write!(std::io::stdout(), "{}", r.render("out-of-domain"));
            }
        }
        Command::Ablation => {
            let pipeline = Pipeline::new(config);
            let _ = write!(std::io::stdout(), "{}", pipeline.ablation()?.render());
        }
        Command::Synth {
            n,
            test_n,
            noise,
            classes,
            dim,
        } => {
            let gen = GaussianClusters {
                classes,
                dim,
                ..Default::default()
            };
            let train = gen.generate(n, noise, "tr", config.seed)?;
            let test = gen.generate(test_n, 0.0, "te", config.seed.wrapping_add(1))?;
            let dir = &config.workdir;
            write_atomic(&dir.join("train.jsonl"), &train.dataset.to_vectors_jsonl())?;
            write_atomic(&dir.join("test.jsonl"), &test.dataset.to_vectors_jsonl())?;
            let flipped: String = train.flipped.iter().map(|id| format!("{id}\n")).collect();
            write_atomic(&dir.join("flipped.txt"), &flipped)?;
            say!(
                "wrote {} train ({} flipped) and {} test samples to {}",
                n,
                train.flipped.len(),
                test_n,
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
