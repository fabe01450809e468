use proptest::prelude::*;

use tdmixup::aum::{aum, margin};
use tdmixup::calibration::{accuracy, ece, Prediction};
use tdmixup::cartography::{categorize, region_size, Region};
use tdmixup::dynamics::{confidence, gold_probability, variability};
use tdmixup::mixup::mix_pair;
use tdmixup::numeric::softmax;
use tdmixup::{Sample, SampleId, SampleStats};

fn logits(classes: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0..30.0f64, classes)
}

fn stats_strategy() -> impl Strategy<Value = Vec<SampleStats>> {
    prop::collection::vec((0.0..1.0f64, 0.0..0.5f64), 3..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (c, s))| SampleStats {
                id: SampleId(format!("x{i:03}")),
                confidence: c,
                variability: s,
                correctness: 0.0,
                aum: None,
                epochs_observed: 1,
            })
            .collect()
    })
}

fn sample(id: &str, label: usize, features: Vec<f64>) -> Sample {
    Sample {
        id: SampleId(id.into()),
        label,
        features,
    }
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(z in (2usize..8).prop_flat_map(logits)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let g = gold_probability(&z, 0);
        prop_assert!(g > 0.0 && g <= 1.0);
    }

    #[test]
    fn softmax_ignores_constant_shift(z in (2usize..8).prop_flat_map(logits), shift in -100.0..100.0f64) {
        let shifted: Vec<f64> = z.iter().map(|x| x + shift).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn confidence_and_variability_are_order_free(mut probs in prop::collection::vec(0.0..=1.0f64, 1..30), seed in any::<u64>()) {
        let c = confidence(&probs).unwrap();
        let v = variability(&probs).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!((0.0..=0.5 + 1e-12).contains(&v));
        let n = probs.len();
        probs.rotate_left((seed % n as u64) as usize);
        probs.reverse();
        prop_assert!((confidence(&probs).unwrap() - c).abs() < 1e-12);
        prop_assert!((variability(&probs).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn margin_ignores_constant_shift(z in (2usize..8).prop_flat_map(logits), shift in -100.0..100.0f64, gold in 0usize..8) {
        let gold = gold % z.len();
        let shifted: Vec<f64> = z.iter().map(|x| x + shift).collect();
        prop_assert!((margin(&z, gold).unwrap() - margin(&shifted, gold).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn aum_scales_with_logits(epochs in prop::collection::vec(logits(4), 1..10), scale in 0.01..10.0f64, gold in 0usize..4) {
        let scaled: Vec<Vec<f64>> = epochs.iter().map(|e| e.iter().map(|x| x * scale).collect()).collect();
        let a = aum(&epochs, gold).unwrap();
        prop_assert!((aum(&scaled, gold).unwrap() - scale * a).abs() < 1e-9 * (1.0 + a.abs() * scale));
    }

    #[test]
    fn mix_pair_is_symmetric_and_labels_stay_on_the_simplex(
        fa in prop::collection::vec(-5.0..5.0f64, 4),
        fb in prop::collection::vec(-5.0..5.0f64, 4),
        la in 0usize..5,
        lb in 0usize..5,
        lambda in 0.0..=1.0f64,
    ) {
        let a = sample("a", la, fa);
        let b = sample("b", lb, fb);
        let m = mix_pair(&a, &b, lambda, 5).unwrap();
        let s = mix_pair(&b, &a, 1.0 - lambda, 5).unwrap();
        for (x, y) in m.features.iter().zip(&s.features) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in m.soft_label.iter().zip(&s.soft_label) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(m.soft_label.iter().all(|&p| p >= 0.0));
        prop_assert!((m.soft_label.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if la == lb {
            prop_assert!((m.soft_label[la] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn categorize_partitions_by_rank(stats in stats_strategy()) {
        let out = categorize(&stats, 0.33).unwrap();
        let k = region_size(stats.len(), 0.33);
        prop_assert_eq!(out.len(), stats.len());
        prop_assert_eq!(out.iter().filter(|c| c.region == Region::Ambiguous).count(), k);
        prop_assert_eq!(out.iter().filter(|c| c.region == Region::EasyToLearn).count(), k);
        prop_assert_eq!(categorize(&stats, 0.33).unwrap(), out.clone());

        // every ambiguous sample is at least as variable as every other one
        let var = |id: &SampleId| stats.iter().find(|s| &s.id == id).unwrap().variability;
        let conf = |id: &SampleId| stats.iter().find(|s| &s.id == id).unwrap().confidence;
        let min_amb = out.iter().filter(|c| c.region == Region::Ambiguous).map(|c| var(&c.id)).fold(f64::INFINITY, f64::min);
        prop_assert!(out.iter().filter(|c| c.region != Region::Ambiguous).all(|c| var(&c.id) <= min_amb));
        let min_easy = out.iter().filter(|c| c.region == Region::EasyToLearn).map(|c| conf(&c.id)).fold(f64::INFINITY, f64::min);
        prop_assert!(out.iter().filter(|c| c.region == Region::HardToLearn).all(|c| conf(&c.id) <= min_easy));
    }

    #[test]
    fn categorize_depends_only_on_ranks(stats in stats_strategy()) {
        // strictly increasing transforms keep every ordering
        let warped: Vec<SampleStats> = stats
            .iter()
            .map(|s| SampleStats {
                confidence: s.confidence.powi(3),
                variability: (s.variability + 1.0).ln(),
                ..s.clone()
            })
            .collect();
        prop_assert_eq!(categorize(&stats, 0.33).unwrap(), categorize(&warped, 0.33).unwrap());
    }

    #[test]
    fn ece_is_bounded_and_order_free(raw in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..200)) {
        let mut preds: Vec<Prediction> = raw
            .iter()
            .map(|&(confidence, correct)| Prediction { predicted: 0, confidence, correct })
            .collect();
        let e = ece(&preds, 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        preds.reverse();
        prop_assert!((ece(&preds, 10).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn accuracy_merges_by_count(a in prop::collection::vec(any::<bool>(), 1..50), b in prop::collection::vec(any::<bool>(), 1..50)) {
        let preds = |v: &[bool]| -> Vec<Prediction> {
            v.iter().map(|&correct| Prediction { predicted: 0, confidence: 0.5, correct }).collect()
        };
        let (pa, pb) = (preds(&a), preds(&b));
        let joined: Vec<Prediction> = pa.iter().chain(&pb).copied().collect();
        let expected = (accuracy(&pa).unwrap() * a.len() as f64 + accuracy(&pb).unwrap() * b.len() as f64)
            / (a.len() + b.len()) as f64;
        prop_assert!((accuracy(&joined).unwrap() - expected).abs() < 1e-12);
    }
}
