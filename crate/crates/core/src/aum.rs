//! Area Under the Margin and threshold-sample filtering.
//!
//! A fresh model is trained on a target set in which a subset of samples
//! ("threshold samples") has been relabeled, possibly to an extra class that
//! no real sample carries. The k-th percentile of the threshold samples' AUMs
//! becomes the cut-off: real samples whose AUM falls strictly below it are
//! treated as likely mislabeled.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsLog, SampleId};
use crate::error::{Error, Result};

/// Gold logit minus the largest other logit.
pub fn margin(logits: &[f64], gold_label: usize) -> Result<f64> {
    if logits.len() < 2 {
        return Err(Error::Data(format!(
            "margin needs at least two logits, got {}",
            logits.len()
        )));
    }
    if gold_label >= logits.len() {
        return Err(Error::Data(format!(
            "gold label {gold_label} outside logit arity {}",
            logits.len()
        )));
    }
    let other = logits
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != gold_label)
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(logits[gold_label] - other)
}

/// Mean margin over epochs.
pub fn aum<V: AsRef<[f64]>>(per_epoch_logits: &[V], gold_label: usize) -> Result<f64> {
    if per_epoch_logits.is_empty() {
        return Err(Error::Data("aum of an empty epoch sequence".into()));
    }
    let arity = per_epoch_logits[0].as_ref().len();
    let mut total = 0.0;
    for logits in per_epoch_logits {
        let logits = logits.as_ref();
        if logits.len() != arity {
            return Err(Error::DimensionMismatch {
                context: "per-epoch logits",
                expected: arity,
                actual: logits.len(),
            });
        }
        total += margin(logits, gold_label)?;
    }
    Ok(total / per_epoch_logits.len() as f64)
}

/// AUM of every sample in a log, using each record's own gold label.
pub fn aums_from_log(log: &DynamicsLog) -> Result<BTreeMap<SampleId, f64>> {
    log.groups()
        .map(|(id, group)| {
            let logits: Vec<&[f64]> = group.iter().map(|r| r.logits.as_slice()).collect();
            Ok((id.clone(), aum(&logits, group[0].gold_label)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// round(N / (c + 1)) samples in total.
    #[default]
    Total,
    /// round(N / (c + 1)) samples from each class.
    PerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    pub flipped: BTreeMap<SampleId, usize>,
    pub fake_class_index: usize,
}

impl ThresholdPlan {
    pub fn total_flipped(&self) -> usize {
        self.flipped.len()
    }

    pub fn is_threshold_sample(&self, id: &SampleId) -> bool {
        self.flipped.contains_key(id)
    }

    /// Label a sample carries during the threshold run.
    pub fn label_for(&self, id: &SampleId, original: usize) -> usize {
        self.flipped.get(id).copied().unwrap_or(original)
    }
}

pub fn threshold_count(n: usize, classes: usize) -> usize {
    (n as f64 / (classes + 1) as f64).round() as usize
}

/// Chooses threshold samples and their new labels. New labels are uniform
/// over `{0..=c} \ {original}`, so the fake class `c` is always reachable.
pub fn make_threshold_plan(
    labels: &BTreeMap<SampleId, usize>,
    classes: usize,
    mode: ThresholdMode,
    seed: u64,
) -> Result<ThresholdPlan> {
    if classes < 2 {
        return Err(Error::Config(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    let n = labels.len();
    if n < classes + 1 {
        return Err(Error::Data(format!(
            "threshold plan needs at least {} samples, got {n}",
            classes + 1
        )));
    }
    if let Some((id, &l)) = labels.iter().find(|(_, &l)| l >= classes) {
        return Err(Error::Data(format!(
            "sample {id} has label {l} >= {classes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = threshold_count(n, classes);
    let chosen: Vec<&SampleId> = match mode {
        ThresholdMode::Total => {
            let mut ids: Vec<&SampleId> = labels.keys().collect();
            ids.shuffle(&mut rng);
            ids.truncate(count);
            ids
        }
        ThresholdMode::PerClass => {
            let mut chosen = Vec::with_capacity(count * classes);
            for class in 0..classes {
                let mut members: Vec<&SampleId> = labels
                    .iter()
                    .filter(|(_, &l)| l == class)
                    .map(|(id, _)| id)
                    .collect();
                if members.len() < count {
                    return Err(Error::Data(format!(
                        "class {class} has {} samples, cannot select {count} threshold samples",
                        members.len()
                    )));
                }
                members.shuffle(&mut rng);
                chosen.extend(members.into_iter().take(count));
            }
            chosen
        }
    };
    let mut flipped = BTreeMap::new();
    for id in chosen {
        let original = labels[id];
        let draw = rng.random_range(0..classes);
        let new_label = if draw >= original { draw + 1 } else { draw };
        flipped.insert(id.clone(), new_label);
    }
    Ok(ThresholdPlan {
        flipped,
        fake_class_index: classes,
    })
}

/// Nearest-rank percentile: the `ceil(k/100 * n)`-th smallest value.
pub fn compute_threshold(values: &[f64], k: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Data("no threshold-sample AUMs".into()));
    }
    check_percentile(k)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((k * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

pub fn check_percentile(k: f64) -> Result<()> {
    if k > 0.0 && k <= 100.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "percentile k must lie in (0, 100], got {k}"
        )))
    }
}

/// Ids whose AUM is at or above the threshold.
pub fn filter_set(aums: &BTreeMap<SampleId, f64>, threshold: f64) -> BTreeSet<SampleId> {
    aums.iter()
        .filter(|(_, &a)| a >= threshold)
        .map(|(id, _)| id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AumReport {
    pub aum_by_sample: BTreeMap<SampleId, f64>,
    pub threshold_ids: BTreeSet<SampleId>,
    pub threshold_value: f64,
    pub percentile_k: f64,
    pub filtered_ids: BTreeSet<SampleId>,
}

#[derive(Serialize, Deserialize)]
struct ReportHeader {
    threshold_value: f64,
    k: f64,
}

#[derive(Serialize, Deserialize)]
struct ReportLine {
    id: SampleId,
    aum: f64,
    is_threshold_sample: bool,
    filtered: bool,
}

impl AumReport {
    /// Thresholds on the threshold samples' AUMs and filters the remaining
    /// (real) samples.
    pub fn build(
        aum_by_sample: BTreeMap<SampleId, f64>,
        threshold_ids: BTreeSet<SampleId>,
        k: f64,
    ) -> Result<Self> {
        let threshold_aums: Vec<f64> = threshold_ids
            .iter()
            .map(|id| {
                aum_by_sample
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Data(format!("no AUM for threshold sample {id}")))
            })
            .collect::<Result<_>>()?;
        let threshold_value = compute_threshold(&threshold_aums, k)?;
        let real: BTreeMap<SampleId, f64> = aum_by_sample
            .iter()
            .filter(|(id, _)| !threshold_ids.contains(id))
            .map(|(id, &a)| (id.clone(), a))
            .collect();
        let retained = filter_set(&real, threshold_value);
        let filtered_ids = real
            .keys()
            .filter(|id| !retained.contains(id))
            .cloned()
            .collect();
        Ok(AumReport {
            aum_by_sample,
            threshold_ids,
            threshold_value,
            percentile_k: k,
            filtered_ids,
        })
    }

    /// Same AUMs, different percentile.
    pub fn with_percentile(&self, k: f64) -> Result<Self> {
        Self::build(self.aum_by_sample.clone(), self.threshold_ids.clone(), k)
    }

    /// Real samples that survive the filter.
    pub fn retained_ids(&self) -> BTreeSet<SampleId> {
        self.aum_by_sample
            .keys()
            .filter(|id| !self.threshold_ids.contains(id) && !self.filtered_ids.contains(id))
            .cloned()
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&ReportHeader {
            threshold_value: self.threshold_value,
            k: self.percentile_k,
        })
        .expect("header serializes");
        out.push('\n');
        for (id, &aum) in &self.aum_by_sample {
            let line = ReportLine {
                id: id.clone(),
                aum,
                is_threshold_sample: self.threshold_ids.contains(id),
                filtered: self.filtered_ids.contains(id),
            };
            out.push_str(&serde_json::to_string(&line).expect("line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let parse_err = |line: usize, e: serde_json::Error| Error::Parse {
            line,
            message: e.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Data("empty AUM report".into()))?;
        let header: ReportHeader = serde_json::from_str(header).map_err(|e| parse_err(1, e))?;
        let mut report = AumReport {
            aum_by_sample: BTreeMap::new(),
            threshold_ids: BTreeSet::new(),
            threshold_value: header.threshold_value,
            percentile_k: header.k,
            filtered_ids: BTreeSet::new(),
        };
        for (i, l) in lines {
            let line: ReportLine = serde_json::from_str(l).map_err(|e| parse_err(i + 1, e))?;
            if line.is_threshold_sample {
                report.threshold_ids.insert(line.id.clone());
            }
            if line.filtered {
                report.filtered_ids.insert(line.id.clone());
            }
            report.aum_by_sample.insert(line.id, line.aum);
        }
        Ok(report)
    }
}

/// Probability that a randomly chosen `positive` score is lower than a
/// randomly chosen `negative` one (ties count half): the AUROC of ranking by
/// ascending score with positives as the detected class.
pub fn auroc_ascending(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Data("AUROC needs both classes".into()));
    }
    let mut wins = 0.0;
    for &p in positives {
        for &n in negatives {
            if p < n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (positives.len() as f64 * negatives.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_extremes() {
        assert_eq!(auroc_ascending(&[-1.0, -2.0], &[0.5, 3.0]).unwrap(), 1.0);
        assert_eq!(auroc_ascending(&[4.0], &[0.5, 3.0]).unwrap(), 0.0);
        assert_eq!(auroc_ascending(&[1.0], &[1.0]).unwrap(), 0.5);
        assert!(auroc_ascending(&[], &[1.0]).is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin(&[2.0, 1.0, 0.5], 0).unwrap(), 1.0);
        assert_eq!(margin(&[0.5, 2.0, 1.0], 0).unwrap(), -1.5);
        assert_eq!(margin(&[0.3; 4], 2).unwrap(), 0.0);
        assert!(margin(&[1.0], 0).is_err());
    }

    #[test]
    fn aum_examples() {
        let epochs = [vec![2.0, 1.0, 0.5], vec![0.5, 2.0, 1.0]];
        assert!((aum(&epochs, 0).unwrap() - (-0.25)).abs() < 1e-12);
        let constant = vec![vec![3.0, 1.0]; 5];
        assert_eq!(aum(&constant, 0).unwrap(), 2.0);
        assert!(aum::<Vec<f64>>(&[], 0).is_err());
        assert!(aum(&[vec![1.0, 0.0], vec![1.0, 0.0, 0.0]], 0).is_err());
    }

    #[test]
    fn threshold_plan_counts_and_flips() {
        let labels: BTreeMap<SampleId, usize> = (0..120)
            .map(|i| (SampleId(format!("{i:03}")), i % 3))
            .collect();
        let plan = make_threshold_plan(&labels, 3, ThresholdMode::Total, 11).unwrap();
        assert_eq!(plan.total_flipped(), 30);
        assert_eq!(plan.fake_class_index, 3);
        for (id, &l) in &plan.flipped {
            assert_ne!(l, labels[id]);
            assert!(l <= 3);
        }
        let again = make_threshold_plan(&labels, 3, ThresholdMode::Total, 11).unwrap();
        assert_eq!(plan, again);

        let per_class = make_threshold_plan(&labels, 3, ThresholdMode::PerClass, 11).unwrap();
        assert_eq!(per_class.total_flipped(), 90);
        for class in 0..3 {
            let n = per_class
                .flipped
                .keys()
                .filter(|id| labels[*id] == class)
                .count();
            assert_eq!(n, 30);
        }
    }

    #[test]
    fn per_class_mode_rejects_small_classes() {
        let mut labels: BTreeMap<SampleId, usize> =
            (0..40).map(|i| (SampleId(format!("{i:03}")), 0)).collect();
        labels.insert("x".into(), 1);
        assert!(make_threshold_plan(&labels, 2, ThresholdMode::PerClass, 0).is_err());
    }

    #[test]
    fn percentile_examples() {
        let grid: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(compute_threshold(&grid, 80.0).unwrap(), 80.0);
        assert_eq!(compute_threshold(&grid, 100.0).unwrap(), 100.0);
        assert_eq!(compute_threshold(&[4.5], 13.0).unwrap(), 4.5);
        assert!(compute_threshold(&[], 50.0).is_err());
        assert!(compute_threshold(&[1.0], 0.0).is_err());
    }

    #[test]
    fn filter_boundary_is_retained() {
        let aums: BTreeMap<SampleId, f64> =
            [("a".into(), 1.0), ("b".into(), -2.0), ("c".into(), 0.0)].into();
        let kept = filter_set(&aums, 0.0);
        assert_eq!(kept, ["a".into(), "c".into()].into());
        assert_eq!(filter_set(&aums, f64::NEG_INFINITY).len(), 3);
        assert!(filter_set(&aums, f64::INFINITY).is_empty());
    }

    #[test]
    fn report_excludes_threshold_samples() {
        let aums: BTreeMap<SampleId, f64> = [
            ("a".into(), 2.0),
            ("b".into(), -1.0),
            ("t1".into(), -3.0),
            ("t2".into(), 0.5),
        ]
        .into();
        let thr: BTreeSet<SampleId> = ["t1".into(), "t2".into()].into();
        let report = AumReport::build(aums, thr, 100.0).unwrap();
        assert_eq!(report.threshold_value, 0.5);
        assert_eq!(report.filtered_ids, ["b".into()].into());
        assert_eq!(report.retained_ids(), ["a".into()].into());
        let round = AumReport::from_jsonl(&report.to_jsonl()).unwrap();
        assert_eq!(round, report);
        assert!(report
            .to_jsonl()
            .starts_with("{\"threshold_value\":0.5,\"k\":100.0}\n"));
    }
}
