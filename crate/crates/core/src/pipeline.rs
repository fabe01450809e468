//! Staged pipeline over a working directory. Each stage reads the artifacts of
//! earlier stages from disk and writes its own atomically, so stages can be
//! rerun individually or fed with logs produced elsewhere.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::aum::{aums_from_log, make_threshold_plan, AumReport, ThresholdMode, ThresholdPlan};
use crate::calibration::{evaluate, reliability, CalibrationReport};
use crate::cartography::{
    categories_from_jsonl, categories_to_jsonl, categorize, datamap_points, ids_in,
    CategoryAssignment, Region,
};
use crate::config::PipelineConfig;
use crate::dataset::{Dataset, Sample};
use crate::dynamics::{aggregate_stats, ingest_log, DynamicsLog, SampleId};
use crate::error::{Error, Result};
use crate::numeric::{mean, std_dev};
use crate::svg::render_datamap;
use crate::trainer::{
    train, train_with_mixup, MixedTrainOutput, ModelParams, PairSource, TrainOutput, TrainerConfig,
};

pub const DYNAMICS_LOG: &str = "dynamics.jsonl";
pub const BASE_CHECKPOINT: &str = "model_base.ckpt";
pub const CATEGORIES: &str = "categories.jsonl";
pub const DATAMAP_SVG: &str = "datamap.svg";
pub const TDMIXUP_CHECKPOINT: &str = "model_tdmixup.ckpt";
pub const REPORT: &str = "report.json";
pub const REPORT_OOD: &str = "report_ood.json";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_TABLE: &str = "ablation.txt";

/// Which samples an AUM threshold run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AumTarget {
    Easy,
    Ambiguous,
    /// The whole training set, ignoring data-map regions.
    All,
}

impl AumTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            AumTarget::Easy => "easy",
            AumTarget::Ambiguous => "ambiguous",
            AumTarget::All => "all",
        }
    }

    pub fn report_name(self) -> String {
        format!("aum_{}.jsonl", self.as_str())
    }

    pub fn sweep_report_name(self, k: f64) -> String {
        format!("aum_{}_k{k}.jsonl", self.as_str())
    }
}

impl fmt::Display for AumTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AumTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(AumTarget::Easy),
            "ambiguous" => Ok(AumTarget::Ambiguous),
            "all" => Ok(AumTarget::All),
            other => Err(Error::Config(format!("unknown AUM target {other:?}"))),
        }
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Result of one threshold-sample training run.
#[derive(Debug, Clone)]
pub struct AumRun {
    pub plan: ThresholdPlan,
    pub dynamics: DynamicsLog,
    pub report: AumReport,
}

/// Trains a fresh `(c + 1)`-output model on `target` with threshold samples
/// relabeled per a seeded plan, then thresholds the AUMs at percentile `k`.
pub fn run_aum_filter(
    dataset: &Dataset,
    target: &BTreeSet<SampleId>,
    trainer: &TrainerConfig,
    mode: ThresholdMode,
    seed: u64,
    k: f64,
) -> Result<AumRun> {
    let subset = dataset.subset(target)?;
    let plan = make_threshold_plan(&subset.labels(), subset.classes, mode, seed)?;
    let relabeled: Vec<Sample> = subset
        .samples
        .iter()
        .map(|s| Sample {
            label: plan.label_for(&s.id, s.label),
            ..s.clone()
        })
        .collect();
    let run_set = Dataset::new(relabeled, Some(subset.classes + 1), "threshold run")?;
    let config = TrainerConfig {
        mixup: None,
        ..trainer.clone()
    };
    let TrainOutput { dynamics, .. } = train(&run_set, &config)?;
    let aums = aums_from_log(&dynamics)?;
    let report = AumReport::build(aums, plan.flipped.keys().cloned().collect(), k)?;
    Ok(AumRun {
        plan,
        dynamics,
        report,
    })
}

/// Data-map regions from a dynamics log.
pub fn categorize_log(log: &DynamicsLog, fraction: f64) -> Result<Vec<CategoryAssignment>> {
    categorize(&aggregate_stats(log, None)?, fraction)
}

/// TDMixUp training on AUM-filtered easy samples plus all ambiguous samples.
pub fn train_tdmixup_from_artifacts(
    dataset: &Dataset,
    categories: &[CategoryAssignment],
    easy_report: &AumReport,
    trainer: &TrainerConfig,
    steps_per_epoch: Option<usize>,
) -> Result<MixedTrainOutput> {
    let retained = easy_report.retained_ids();
    let easy: Vec<SampleId> = ids_in(categories, Region::EasyToLearn)
        .into_iter()
        .filter(|id| retained.contains(id))
        .collect();
    if easy.is_empty() {
        return Err(Error::Data(
            "the AUM filter removed every easy-to-learn sample; refusing to train".into(),
        ));
    }
    let ambiguous = ids_in(categories, Region::Ambiguous);
    let mut raw: Vec<SampleId> = easy.iter().chain(&ambiguous).cloned().collect();
    raw.sort();
    let pairs = PairSource::EasyAmbiguous { easy, ambiguous };
    train_with_mixup(dataset, &raw, &pairs, steps_per_epoch, trainer)
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmOutcome {
    pub seed: u64,
    pub accuracy: f64,
    pub ece: f64,
    pub steps: usize,
    #[serde(skip)]
    pub raw_ids: BTreeSet<SampleId>,
    #[serde(skip)]
    pub mixed_ids: BTreeSet<SampleId>,
    pub raw_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedBookkeeping {
    pub seed: u64,
    pub easy: usize,
    pub ambiguous: usize,
    pub easy_filtered: usize,
    pub easy_threshold_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub method: &'static str,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub ece_mean: f64,
    pub ece_std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub random: Vec<ArmOutcome>,
    pub tdmixup: Vec<ArmOutcome>,
    pub bookkeeping: Vec<SeedBookkeeping>,
    pub summary: Vec<ArmSummary>,
    /// Union of easy-to-learn and ambiguous ids per seed (the random arm's pool).
    #[serde(skip)]
    pub unions: Vec<BTreeSet<SampleId>>,
}

fn summarize(method: &'static str, arms: &[ArmOutcome]) -> ArmSummary {
    let acc: Vec<f64> = arms.iter().map(|a| a.accuracy).collect();
    let ece: Vec<f64> = arms.iter().map(|a| a.ece).collect();
    ArmSummary {
        method,
        accuracy_mean: mean(&acc),
        accuracy_std: std_dev(&acc),
        ece_mean: mean(&ece),
        ece_std: std_dev(&ece),
    }
}

/// Random-pair MixUp on the easy ∪ ambiguous union versus TDMixUp on
/// AUM-filtered easy x ambiguous. Both arms of a seed share the base run, the
/// categorization, the initialization seed, the mixing seed and the number of
/// optimizer steps per epoch (one pass over the union).
pub fn run_ablation(
    train_set: &Dataset,
    test_set: &Dataset,
    config: &PipelineConfig,
) -> Result<AblationReport> {
    if config.ablation_seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut random = Vec::new();
    let mut tdmixup = Vec::new();
    let mut bookkeeping = Vec::new();
    let mut unions = Vec::new();
    for &seed in &config.ablation_seeds {
        let cfg = PipelineConfig {
            seed,
            mixup_seed: seed,
            aum_seed: seed,
            ..config.clone()
        };
        let trainer = cfg.trainer_config();
        let base = train(
            train_set,
            &TrainerConfig {
                mixup: None,
                ..trainer.clone()
            },
        )?;
        let categories = categorize_log(&base.dynamics, cfg.fraction)?;
        let easy: BTreeSet<SampleId> = ids_in(&categories, Region::EasyToLearn)
            .into_iter()
            .collect();
        let ambiguous = ids_in(&categories, Region::Ambiguous);
        let union: BTreeSet<SampleId> = easy.iter().chain(&ambiguous).cloned().collect();
        let steps = union.len().div_ceil(cfg.mixup_batch_size);

        let aum = run_aum_filter(
            train_set,
            &easy,
            &trainer,
            cfg.threshold_mode,
            cfg.aum_seed,
            cfg.easy_k(),
        )?;
        bookkeeping.push(SeedBookkeeping {
            seed,
            easy: easy.len(),
            ambiguous: ambiguous.len(),
            easy_filtered: aum.report.filtered_ids.len(),
            easy_threshold_samples: aum.report.threshold_ids.len(),
        });

        let pool: Vec<SampleId> = union.iter().cloned().collect();
        let rand_run = train_with_mixup(
            train_set,
            &pool,
            &PairSource::Random { pool: pool.clone() },
            Some(steps),
            &trainer,
        )?;
        random.push(score(seed, rand_run, test_set, cfg.n_bins)?);

        let td_run = train_tdmixup_from_artifacts(
            train_set,
            &categories,
            &aum.report,
            &trainer,
            Some(steps),
        )?;
        tdmixup.push(score(seed, td_run, test_set, cfg.n_bins)?);
        unions.push(union);
    }
    let summary = vec![summarize("Random", &random), summarize("TDMixUp", &tdmixup)];
    Ok(AblationReport {
        seeds: config.ablation_seeds.clone(),
        random,
        tdmixup,
        bookkeeping,
        summary,
        unions,
    })
}

fn score(seed: u64, run: MixedTrainOutput, test: &Dataset, n_bins: usize) -> Result<ArmOutcome> {
    let report = reliability(&evaluate(&run.params, test)?, n_bins)?;
    Ok(ArmOutcome {
        seed,
        accuracy: report.accuracy,
        ece: report.ece,
        steps: run.steps,
        raw_count: run.raw_ids_used.len(),
        raw_ids: run.raw_ids_used,
        mixed_ids: run.mixed_ids_used,
    })
}

impl AblationReport {
    /// One row per method, one `acc/ECE` cell (percent) per seed, then mean ± std.
    pub fn render(&self) -> String {
        let mut out = format!("{:<8}", "method");
        for s in &self.seeds {
            out.push_str(&format!(" {:>13}", format!("seed {s}")));
        }
        out.push_str(&format!(" {:>27}\n", "mean acc / ECE (± std)"));
        for (arms, summary) in [
            (&self.random, &self.summary[0]),
            (&self.tdmixup, &self.summary[1]),
        ] {
            out.push_str(&format!("{:<8}", summary.method));
            for a in arms {
                out.push_str(&format!(
                    " {:>13}",
                    format!("{:.2}/{:.2}", 100.0 * a.accuracy, 100.0 * a.ece)
                ));
            }
            out.push_str(&format!(
                " {:>27}\n",
                format!(
                    "{:.2}±{:.2} / {:.2}±{:.2}",
                    100.0 * summary.accuracy_mean,
                    100.0 * summary.accuracy_std,
                    100.0 * summary.ece_mean,
                    100.0 * summary.ece_std
                )
            ));
        }
        out
    }
}

/// Command-level entry points operating on `config.workdir`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline { config }
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.config.workdir.join(name)
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("no `{key}` path configured")))
    }

    pub fn train_dataset(&self) -> Result<Dataset> {
        let path = self.require(&self.config.train, "train")?;
        Dataset::load(path, self.config.format, self.config.classes)
    }

    fn load_eval_set(&self, path: &Path, classes: usize) -> Result<Dataset> {
        Dataset::load(path, self.config.format, Some(classes))
    }

    /// Base run: writes the dynamics log and the final checkpoint.
    pub fn train_dynamics(&self) -> Result<TrainOutput> {
        let data = self.train_dataset()?;
        let trainer = TrainerConfig {
            mixup: None,
            ..self.config.trainer_config()
        };
        let out = train(&data, &trainer)?;
        write_atomic(&self.artifact(DYNAMICS_LOG), &out.dynamics.to_jsonl())?;
        write_atomic(
            &self.artifact(BASE_CHECKPOINT),
            &out.params.to_checkpoint(self.config.seed),
        )?;
        Ok(out)
    }

    pub fn load_dynamics(&self) -> Result<DynamicsLog> {
        let path = self.artifact(DYNAMICS_LOG);
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        ingest_log(std::io::BufReader::new(file))
    }

    /// Categories and data-map SVG from the dynamics log.
    pub fn datamap(&self) -> Result<Vec<CategoryAssignment>> {
        let log = self.load_dynamics()?;
        let stats = aggregate_stats(&log, None)?;
        let categories = categorize(&stats, self.config.fraction)?;
        let points = datamap_points(&stats, &categories);
        write_atomic(
            &self.artifact(CATEGORIES),
            &categories_to_jsonl(&categories),
        )?;
        let title = format!(
            "data map ({} samples, {} epochs)",
            stats.len(),
            stats[0].epochs_observed
        );
        write_atomic(
            &self.artifact(DATAMAP_SVG),
            &render_datamap(&points, &title),
        )?;
        Ok(categories)
    }

    pub fn load_categories(&self) -> Result<Vec<CategoryAssignment>> {
        categories_from_jsonl(&read(&self.artifact(CATEGORIES))?)
    }

    /// Threshold-sample run over `target`; writes `aum_<target>.jsonl` at the
    /// configured percentile and one extra report per `k_grid` entry.
    pub fn aum_filter(
        &self,
        target: AumTarget,
        k: Option<f64>,
        k_grid: &[f64],
    ) -> Result<AumReport> {
        let data = self.train_dataset()?;
        let ids: BTreeSet<SampleId> = match target {
            AumTarget::All => data.ids().into_iter().collect(),
            AumTarget::Easy => ids_in(&self.load_categories()?, Region::EasyToLearn)
                .into_iter()
                .collect(),
            AumTarget::Ambiguous => ids_in(&self.load_categories()?, Region::Ambiguous)
                .into_iter()
                .collect(),
        };
        let k = k.unwrap_or(match target {
            AumTarget::Ambiguous => self.config.k_ambiguous,
            _ => self.config.easy_k(),
        });
        let run = run_aum_filter(
            &data,
            &ids,
            &self.config.trainer_config(),
            self.config.threshold_mode,
            self.config.aum_seed,
            k,
        )?;
        write_atomic(
            &self.artifact(&target.report_name()),
            &run.report.to_jsonl(),
        )?;
        for &kg in k_grid {
            let swept = run.report.with_percentile(kg)?;
            write_atomic(
                &self.artifact(&target.sweep_report_name(kg)),
                &swept.to_jsonl(),
            )?;
        }
        Ok(run.report)
    }

    pub fn load_aum_report(&self, target: AumTarget) -> Result<AumReport> {
        AumReport::from_jsonl(&read(&self.artifact(&target.report_name()))?)
    }

    /// Runs any missing upstream stage, then trains TDMixUp from the stage
    /// artifacts on disk.
    pub fn tdmixup_train(&self) -> Result<MixedTrainOutput> {
        if !self.artifact(DYNAMICS_LOG).exists() {
            self.train_dynamics()?;
        }
        if !self.artifact(CATEGORIES).exists() {
            self.datamap()?;
        }
        if !self.artifact(&AumTarget::Easy.report_name()).exists() {
            self.aum_filter(AumTarget::Easy, None, &[])?;
        }
        let data = self.train_dataset()?;
        let categories = self.load_categories()?;
        let report = self.load_aum_report(AumTarget::Easy)?;
        let out = train_tdmixup_from_artifacts(
            &data,
            &categories,
            &report,
            &self.config.trainer_config(),
            None,
        )?;
        write_atomic(
            &self.artifact(TDMIXUP_CHECKPOINT),
            &out.params.to_checkpoint(self.config.seed),
        )?;
        Ok(out)
    }

    pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
        ModelParams::from_checkpoint(&read(path)?).map(|(p, _)| p)
    }

    /// In-domain report, plus an out-of-domain one when a second test set is
    /// configured.
    pub fn evaluate(
        &self,
        checkpoint: Option<&Path>,
    ) -> Result<(CalibrationReport, Option<CalibrationReport>)> {
        let default = self.artifact(TDMIXUP_CHECKPOINT);
        let params = Self::load_checkpoint(checkpoint.unwrap_or(&default))?;
        let test_path = self.require(&self.config.test, "test")?;
        let test = self.load_eval_set(test_path, params.classes)?;
        let report = reliability(&evaluate(&params, &test)?, self.config.n_bins)?;
        write_atomic(&self.artifact(REPORT), &to_json(&report))?;
        let ood = match &self.config.ood_test {
            Some(path) => {
                let ood_set = self.load_eval_set(path, params.classes)?;
                let r = reliability(&evaluate(&params, &ood_set)?, self.config.n_bins)?;
                write_atomic(&self.artifact(REPORT_OOD), &to_json(&r))?;
                Some(r)
            }
            None => None,
        };
        Ok((report, ood))
    }

    pub fn ablation(&self) -> Result<AblationReport> {
        let data = self.train_dataset()?;
        let test_path = self.require(&self.config.test, "test")?;
        let test = self.load_eval_set(test_path, data.classes)?;
        let report = run_ablation(&data, &test, &self.config)?;
        write_atomic(&self.artifact(ABLATION_JSON), &to_json(&report))?;
        write_atomic(&self.artifact(ABLATION_TABLE), &report.render())?;
        Ok(report)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
