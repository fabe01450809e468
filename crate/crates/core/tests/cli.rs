use std::path::Path;
use std::process::{Command, Output};

fn tdmixup(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdmixup"))
        .args(args)
        .arg("--workdir")
        .arg(workdir)
        .output()
        .unwrap()
}

fn ok(workdir: &Path, args: &[&str]) -> String {
    let out = tdmixup(workdir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, n: &str) -> (String, String) {
    ok(dir, &["synth", "--n", n, "--test-n", "100", "--seed", "4"]);
    (
        format!("train={:?}", dir.join("train.jsonl").display().to_string()),
        format!("test={:?}", dir.join("test.jsonl").display().to_string()),
    )
}

#[test]
fn train_dynamics_logs_one_record_per_sample_and_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = synth(dir.path(), "120");
    ok(
        dir.path(),
        &["train-dynamics", "--set", &train, "--set", "epochs=3"],
    );
    let log = std::fs::read_to_string(dir.path().join("dynamics.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3 * 120);
    assert!(log
        .lines()
        .all(|l| l.contains("\"epoch\"") && l.contains("\"logits\"")));
}

#[test]
fn missing_train_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdmixup(
        dir.path(),
        &["train-dynamics", "--set", "train=\"no/such/train.jsonl\""],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/train.jsonl"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tdmixup(dir.path(), &["no-such-command"]).status.code(),
        Some(1)
    );
    assert_eq!(
        tdmixup(dir.path(), &["train-dynamics", "--set", "k_easy=0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tdmixup(dir.path(), &["train-dynamics", "--set", "bogus_key=1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tdmixup(dir.path(), &["train-dynamics"]).status.code(),
        Some(1)
    );
}

#[test]
fn datamap_svg_has_one_point_per_sample_colored_by_region() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = synth(dir.path(), "150");
    ok(dir.path(), &["train-dynamics", "--set", &train]);
    ok(dir.path(), &["datamap", "--set", &train]);
    let svg = std::fs::read_to_string(dir.path().join("datamap.svg")).unwrap();
    let categories = std::fs::read_to_string(dir.path().join("categories.jsonl")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 150);
    for (region, color) in [
        ("easy", "#1f77b4"),
        ("ambiguous", "#d62728"),
        ("hard", "#2ca02c"),
    ] {
        let in_categories = categories
            .matches(&format!("\"region\":\"{region}\""))
            .count();
        let in_svg = svg
            .lines()
            .filter(|l| l.starts_with("<circle") && l.contains(&format!("fill=\"{color}\"")))
            .count();
        assert_eq!(in_svg, in_categories, "{region}");
    }
    // floor(0.33 * 150) = 49 per selected region
    assert_eq!(categories.matches("\"region\":\"ambiguous\"").count(), 49);
    assert_eq!(categories.matches("\"region\":\"easy\"").count(), 49);
}

#[test]
fn k100_filters_everything_below_the_largest_threshold_aum() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = synth(dir.path(), "200");
    ok(
        dir.path(),
        &[
            "aum-filter",
            "--target",
            "all",
            "--k",
            "100",
            "--set",
            &train,
        ],
    );
    let text = std::fs::read_to_string(dir.path().join("aum_all.jsonl")).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let rows: Vec<serde_json::Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    let max_threshold = rows
        .iter()
        .filter(|r| r["is_threshold_sample"].as_bool().unwrap())
        .map(|r| r["aum"].as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(header["threshold_value"].as_f64().unwrap(), max_threshold);
    // round(200 / 4) threshold samples with 3 classes
    assert_eq!(
        rows.iter()
            .filter(|r| r["is_threshold_sample"].as_bool().unwrap())
            .count(),
        50
    );
    for r in &rows {
        let real = !r["is_threshold_sample"].as_bool().unwrap();
        let below = r["aum"].as_f64().unwrap() < max_threshold;
        assert_eq!(r["filtered"].as_bool().unwrap(), real && below);
    }
}

#[test]
fn ood_report_only_when_a_second_test_set_is_given() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth(dir.path(), "150");
    ok(
        dir.path(),
        &["tdmixup-train", "--set", &train, "--set", "epochs=2"],
    );
    let stdout = ok(dir.path(), &["evaluate", "--set", &test]);
    assert!(dir.path().join("report.json").exists());
    assert!(!dir.path().join("report_ood.json").exists());
    assert!(!stdout.contains("out-of-domain"));

    let ood = dir.path().join("test.jsonl");
    let stdout = ok(
        dir.path(),
        &[
            "evaluate",
            "--set",
            &test,
            "--ood-test",
            ood.to_str().unwrap(),
        ],
    );
    assert!(stdout.contains("out-of-domain"));
    let a = std::fs::read(dir.path().join("report.json")).unwrap();
    let b = std::fs::read(dir.path().join("report_ood.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evaluate_without_checkpoint_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test) = synth(dir.path(), "50");
    let out = tdmixup(dir.path(), &["evaluate", "--set", &test]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model_tdmixup.ckpt"));
}

#[test]
fn seed_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = synth(dir.path(), "90");
    ok(
        dir.path(),
        &["train-dynamics", "--set", &train, "--seed", "1"],
    );
    let a = std::fs::read(dir.path().join("model_base.ckpt")).unwrap();
    ok(
        dir.path(),
        &["train-dynamics", "--set", &train, "--seed", "2"],
    );
    let b = std::fs::read(dir.path().join("model_base.ckpt")).unwrap();
    ok(
        dir.path(),
        &["train-dynamics", "--set", &train, "--seed", "1"],
    );
    let c = std::fs::read(dir.path().join("model_base.ckpt")).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, c);
}
