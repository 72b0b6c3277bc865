use std::path::Path;
use std::process::{Command, Output};

fn exposure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exposure"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = exposure(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&["synth", "--preset", "two-level", "--seed", "3", "--out", dir.to_str().unwrap()]);
}

fn input_flags(dir: &Path) -> Vec<String> {
    let p = |f: &str| dir.join(f).to_string_lossy().into_owned();
    [
        "--follows".into(),
        p("follows.csv"),
        "--annotations".into(),
        p("annotations.csv"),
        "--links".into(),
        p("links.csv"),
        "--survey".into(),
        p("survey.csv"),
        "--n-scale".into(),
        "60".into(),
        "--n-tries".into(),
        "8".into(),
        "--min-links".into(),
        "50".into(),
    ]
    .into()
}

#[test]
fn synth_writes_the_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for f in ["follows.csv", "truth.json", "annotations.csv", "links.csv", "survey.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn run_writes_a_complete_manifest() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    synth(input.path());
    let mut args = vec!["run".to_owned(), "--responses".into(), "co".into(), "--out".into()];
    args.push(out.path().to_string_lossy().into_owned());
    args.extend(input_flags(input.path()));
    let stdout = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let manifest: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(manifest["status"], "complete");
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest, on_disk);
    assert!(out.path().join("report.json").exists());
}

#[test]
fn scan_stops_after_its_stage() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    synth(input.path());
    let mut args = vec!["scan".to_owned(), "--out".into(), out.path().to_string_lossy().into_owned()];
    args.extend(input_flags(input.path()));
    let stdout = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let manifest: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(manifest["stages"], serde_json::json!(["ingest", "project", "scan"]));
    assert!(out.path().join("scales.json").exists());
    assert!(!out.path().join("report.json").exists());
}

#[test]
fn contingency_prints_test_results() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    synth(input.path());
    let follows = input.path().join("follows.csv");
    let annotations = input.path().join("annotations.csv");
    let stdout = ok(&[
        "contingency",
        "--follows",
        follows.to_str().unwrap(),
        "--annotations",
        annotations.to_str().unwrap(),
        "--dims",
        "ideology,type",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    let results: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let results = results.as_array().unwrap();
    assert_eq!(results.len(), 1);
    let p = results[0]["test"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn config_file_takes_precedence_over_flags() {
    let input = tempfile::tempdir().unwrap();
    synth(input.path());
    let config = input.path().join("run.toml");
    std::fs::write(
        &config,
        "out_dir = \"from-config\"\n[inputs]\nfollows = \"follows.csv\"\n[sweep]\nn_scale = 30\nn_tries = 4\n",
    )
    .unwrap();
    let elsewhere = input.path().join("from-flags");
    ok(&[
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--out",
        elsewhere.to_str().unwrap(),
    ]);
    assert!(input.path().join("from-config").join("network.json").exists());
    assert!(!elsewhere.exists());
}

#[test]
fn bad_input_fails_with_the_stage_and_line() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let follows = input.path().join("follows.csv");
    std::fs::write(&follows, "consumer_id,influencer_id\nc1,i1\nc 2,i1\n").unwrap();
    let result = exposure(&["ingest", "--follows", follows.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("ingest") && stderr.contains("line 3"), "{stderr}");
}

#[test]
fn regress_without_survey_is_an_error() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    synth(input.path());
    let follows = input.path().join("follows.csv");
    let result = exposure(&[
        "regress",
        "--follows",
        follows.to_str().unwrap(),
        "--n-scale",
        "30",
        "--n-tries",
        "4",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("survey"));
}
