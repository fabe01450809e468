//! Per-epoch training-dynamics records and the per-sample statistics derived
//! from them: confidence (mean gold-label probability), variability (population
//! standard deviation of that probability) and correctness.
//!
//! Records carry raw logits rather than probabilities so the same log also
//! feeds the margin statistics in [`crate::aum`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argmax, softmax};

/// Sample identifier. Ordered lexicographically; integer ids in input files
/// are accepted and stored as their decimal string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SampleId(pub String);

impl SampleId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        SampleId(s.to_owned())
    }
}

impl From<String> for SampleId {
    fn from(s: String) -> Self {
        SampleId(s)
    }
}

impl<'de> Deserialize<'de> for SampleId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Str(s) => SampleId(s),
            Raw::Int(i) => SampleId(i.to_string()),
        })
    }
}

/// One sample's logits at the end of one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub id: SampleId,
    pub epoch: u32,
    #[serde(rename = "gold")]
    pub gold_label: usize,
    pub logits: Vec<f64>,
}

impl DynamicsRecord {
    pub fn gold_probability(&self) -> f64 {
        gold_probability(&self.logits, self.gold_label)
    }

    pub fn is_correct(&self) -> bool {
        argmax(&self.logits) == self.gold_label
    }
}

/// Records grouped by sample, each group sorted by epoch and covering `1..=E`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynamicsLog {
    groups: BTreeMap<SampleId, Vec<DynamicsRecord>>,
}

impl DynamicsLog {
    /// Groups records and validates structure: unique `(id, epoch)`, one logit
    /// arity across the whole log, gold label inside that arity and contiguous
    /// epochs per sample.
    pub fn from_records(records: impl IntoIterator<Item = DynamicsRecord>) -> Result<Self> {
        let mut groups: BTreeMap<SampleId, Vec<DynamicsRecord>> = BTreeMap::new();
        let mut arity = None;
        for record in records {
            check_record(&record, &mut arity)?;
            groups.entry(record.id.clone()).or_default().push(record);
        }
        let mut log = DynamicsLog { groups };
        log.finish()?;
        Ok(log)
    }

    fn finish(&mut self) -> Result<()> {
        for (id, group) in self.groups.iter_mut() {
            group.sort_by_key(|r| r.epoch);
            for pair in group.windows(2) {
                if pair[0].epoch == pair[1].epoch {
                    return Err(Error::DuplicateEpoch {
                        id: id.to_string(),
                        epoch: pair[0].epoch,
                    });
                }
            }
            let expected = group.last().map(|r| r.epoch).unwrap_or(0);
            let contiguous = group
                .iter()
                .enumerate()
                .all(|(i, r)| r.epoch as usize == i + 1);
            if !contiguous {
                return Err(Error::MissingEpochs {
                    id: id.to_string(),
                    seen: group.iter().map(|r| r.epoch).collect(),
                    expected,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn num_records(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn get(&self, id: &SampleId) -> Option<&[DynamicsRecord]> {
        self.groups.get(id).map(Vec::as_slice)
    }

    /// Groups in ascending id order.
    pub fn groups(&self) -> impl Iterator<Item = (&SampleId, &[DynamicsRecord])> {
        self.groups.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// All records, by id then epoch.
    pub fn records(&self) -> impl Iterator<Item = &DynamicsRecord> {
        self.groups.values().flatten()
    }

    /// Line-delimited export, one record per line ordered by epoch then id,
    /// matching the order a trainer emits them.
    pub fn to_jsonl(&self) -> String {
        let mut ordered: Vec<&DynamicsRecord> = self.records().collect();
        ordered.sort_by(|a, b| a.epoch.cmp(&b.epoch).then_with(|| a.id.cmp(&b.id)));
        let mut out = String::new();
        for r in ordered {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

fn check_record(record: &DynamicsRecord, arity: &mut Option<usize>) -> Result<()> {
    if record.epoch == 0 {
        return Err(Error::Data(format!(
            "sample {}: epochs are numbered from 1",
            record.id
        )));
    }
    let n = record.logits.len();
    match *arity {
        None => *arity = Some(n),
        Some(a) if a != n => {
            return Err(Error::DimensionMismatch {
                context: "logit arity",
                expected: a,
                actual: n,
            })
        }
        _ => {}
    }
    if n == 0 || record.gold_label >= n {
        return Err(Error::Data(format!(
            "sample {}: gold label {} outside logit arity {}",
            record.id, record.gold_label, n
        )));
    }
    if record.logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::Data(format!(
            "sample {}: non-finite logit",
            record.id
        )));
    }
    Ok(())
}

/// Parses a line-delimited dynamics log. Any structural violation rejects the
/// whole stream; per-line violations carry the 1-based line number.
pub fn ingest_log<R: BufRead>(reader: R) -> Result<DynamicsLog> {
    let mut groups: BTreeMap<SampleId, Vec<DynamicsRecord>> = BTreeMap::new();
    let mut seen: BTreeSet<(SampleId, u32)> = BTreeSet::new();
    let mut arity = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DynamicsRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        check_record(&record, &mut arity).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if !seen.insert((record.id.clone(), record.epoch)) {
            return Err(Error::DuplicateEpoch {
                id: record.id.to_string(),
                epoch: record.epoch,
            });
        }
        groups.entry(record.id.clone()).or_default().push(record);
    }
    let mut log = DynamicsLog { groups };
    log.finish()?;
    Ok(log)
}

/// Softmax probability of the gold label.
pub fn gold_probability(logits: &[f64], gold_label: usize) -> f64 {
    softmax(logits)[gold_label]
}

pub fn confidence(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Data("confidence of an empty sequence".into()));
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Population standard deviation (divisor `E`).
pub fn variability(probs: &[f64]) -> Result<f64> {
    let mean = confidence(probs)?;
    let ss: f64 = probs.iter().map(|p| (p - mean) * (p - mean)).sum();
    Ok((ss / probs.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub id: SampleId,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
    pub aum: Option<f64>,
    pub epochs_observed: u32,
}

/// One [`SampleStats`] per sample in ascending id order. Every sample must be
/// observed over the same number of epochs.
pub fn aggregate_stats(
    log: &DynamicsLog,
    aum_values: Option<&BTreeMap<SampleId, f64>>,
) -> Result<Vec<SampleStats>> {
    let mut epochs = None;
    let mut out = Vec::with_capacity(log.len());
    for (id, group) in log.groups() {
        let e = group.len();
        match epochs {
            None => epochs = Some(e),
            Some(prev) if prev != e => {
                return Err(Error::Data(format!(
                    "ragged epoch coverage: sample {id} has {e} epochs, others have {prev}"
                )))
            }
            _ => {}
        }
        let probs: Vec<f64> = group.iter().map(DynamicsRecord::gold_probability).collect();
        let correct = group.iter().filter(|r| r.is_correct()).count();
        out.push(SampleStats {
            id: id.clone(),
            confidence: confidence(&probs)?,
            variability: variability(&probs)?,
            correctness: correct as f64 / e as f64,
            aum: aum_values.and_then(|m| m.get(id).copied()),
            epochs_observed: e as u32,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, epoch: u32, gold: usize, logits: &[f64]) -> DynamicsRecord {
        DynamicsRecord {
            id: id.into(),
            epoch,
            gold_label: gold,
            logits: logits.to_vec(),
        }
    }

    #[test]
    fn gold_probability_closed_forms() {
        assert!((gold_probability(&[0.0, 0.0, 0.0], 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((gold_probability(&[2f64.ln(), 0.0], 0) - 2.0 / 3.0).abs() < 1e-15);
        let p = gold_probability(&[1000.0, 0.0], 0);
        assert!(p > 1.0 - 1e-12 && p <= 1.0);
    }

    #[test]
    fn confidence_and_variability_examples() {
        assert!((confidence(&[0.9, 0.8, 1.0]).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(variability(&[0.37; 5]).unwrap(), 0.0);
        assert!((variability(&[0.5, 1.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!(confidence(&[]).is_err());
        assert!(variability(&[]).is_err());
    }

    #[test]
    fn ingest_groups_records() {
        let text = r#"{"id": "a", "epoch": 2, "gold": 0, "logits": [1.0, 0.0]}
{"id": "a", "epoch": 1, "gold": 0, "logits": [0.0, 0.0]}
{"id": "a", "epoch": 3, "gold": 0, "logits": [2.0, 0.0]}
"#;
        let log = ingest_log(text.as_bytes()).unwrap();
        assert_eq!(log.len(), 1);
        let group = log.get(&"a".into()).unwrap();
        assert_eq!(group.iter().map(|r| r.epoch).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn ingest_accepts_integer_ids() {
        let text = r#"{"id": 7, "epoch": 1, "gold": 1, "logits": [0.0, 1.0]}"#;
        let log = ingest_log(text.as_bytes()).unwrap();
        assert!(log.get(&"7".into()).is_some());
    }

    #[test]
    fn ingest_rejects_duplicate_epoch() {
        let text = r#"{"id": 7, "epoch": 1, "gold": 0, "logits": [0.0, 1.0]}
{"id": 7, "epoch": 2, "gold": 0, "logits": [0.0, 1.0]}
{"id": 7, "epoch": 2, "gold": 0, "logits": [0.5, 1.0]}"#;
        let err = ingest_log(text.as_bytes()).unwrap_err();
        match err {
            Error::DuplicateEpoch { id, epoch } => {
                assert_eq!(id, "7");
                assert_eq!(epoch, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(format!("{}", ingest_log(text.as_bytes()).unwrap_err()).contains("7"));
    }

    #[test]
    fn ingest_rejects_missing_epochs_and_malformed() {
        let gap = r#"{"id": "x", "epoch": 1, "gold": 0, "logits": [0.0, 1.0]}
{"id": "x", "epoch": 3, "gold": 0, "logits": [0.0, 1.0]}"#;
        assert!(matches!(
            ingest_log(gap.as_bytes()),
            Err(Error::MissingEpochs { .. })
        ));
        let bad = "{\"id\": \"x\", \"epoch\": 1, \"gold\": 0, \"logits\": [0.0, 1.0]}\nnot json\n";
        assert!(matches!(
            ingest_log(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn aggregate_hand_example() {
        // gold probs 1/3, 2/3, 1; argmax correct at epochs 2 and 3
        let records = vec![
            rec("s", 1, 1, &[0.0, 0.0, 0.0]),
            rec("s", 2, 1, &[0.0, 4f64.ln(), 0.0]),
            rec("s", 3, 1, &[-800.0, 0.0, -800.0]),
        ];
        let log = DynamicsLog::from_records(records).unwrap();
        let stats = aggregate_stats(&log, None).unwrap();
        assert_eq!(stats.len(), 1);
        assert!((stats[0].correctness - 2.0 / 3.0).abs() < 1e-12);
        assert!((stats[0].confidence - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats[0].epochs_observed, 3);
        assert_eq!(stats[0].aum, None);
    }

    #[test]
    fn aggregate_rejects_ragged() {
        let records = vec![
            rec("a", 1, 0, &[1.0, 0.0]),
            rec("a", 2, 0, &[1.0, 0.0]),
            rec("b", 1, 0, &[1.0, 0.0]),
        ];
        let log = DynamicsLog::from_records(records).unwrap();
        assert!(aggregate_stats(&log, None).is_err());
    }

    #[test]
    fn constant_correct_samples_have_zero_variability() {
        let mut records = Vec::new();
        for id in ["a", "b", "c"] {
            for e in 1..=4 {
                records.push(rec(id, e, 1, &[0.0, 3.0]));
            }
        }
        let log = DynamicsLog::from_records(records).unwrap();
        for s in aggregate_stats(&log, None).unwrap() {
            assert_eq!(s.variability, 0.0);
            assert_eq!(s.correctness, 1.0);
        }
    }
}
