use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn asdface(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asdface")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = asdface(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn synth(dir: &Path, seed: &str) -> String {
    let d = dir.to_str().unwrap();
    ok(&["synth", "--participants", "8", "--frames", "40", "--seed", seed, "--output", d]);
    dir.join("manifest.json").to_str().unwrap().to_string()
}

#[test]
fn errors_are_machine_readable() {
    for args in [
        vec!["loocv", "--manifest", "/nonexistent/manifest.json"],
        vec!["analyze-graph", "--cu", "resnet"],
        vec!["synth", "--noise", "0", "--output", "/tmp/unused-asdface-dir"],
        vec!["no-such-command"],
    ] {
        let out = asdface(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is json");
        assert!(err["error"]["kind"].is_string() && err["error"]["message"].is_string());
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"cu": "eesp", "input_size": 224}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_cfg: serde_json::Value = serde_json::from_slice(&ok(&["analyze-graph", "--config", c])).unwrap();
    let overridden: serde_json::Value =
        serde_json::from_slice(&ok(&["analyze-graph", "--config", c, "--cu", "mobilenet"])).unwrap();
    let cu = |v: &serde_json::Value| v["result"]["graphs"][0]["cu"].as_str().unwrap().to_string();
    assert_eq!(cu(&from_cfg), "eesp");
    assert_eq!(cu(&overridden), "mobilenet");
    assert_eq!(from_cfg["result"]["graphs"].as_array().unwrap().len(), 1);

    fs::write(&cfg, r#"{"colour": "blue"}"#).unwrap();
    assert_eq!(asdface(&["analyze-graph", "--config", c]).status.code(), Some(2));
}

#[test]
fn reports_go_to_output_files_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("c"), "1");
    let out = dir.path().join("loocv.txt");
    ok(&["loocv", "--manifest", &manifest, "--format", "text", "--output", out.to_str().unwrap()]);
    let text = fs::read_to_string(&out).unwrap();
    for key in ["f1 = ", "sensitivity = ", "specificity = "] {
        assert!(text.contains(key), "{text}");
    }
    let csv = ok(&["extract-features", "--manifest", &manifest, "--format", "csv"]);
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 60);
}

#[test]
fn every_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("a"), "3");
    synth(&dir.path().join("b"), "3");
    for f in ["manifest.json", "synth_report.json", "frames/asd_000.csv", "frames/nonasd_007.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let frames = dir.path().join("a/frames/asd_001.csv");
    let runs: Vec<Vec<&str>> = vec![
        vec!["analyze-graph", "--seed", "4"],
        vec!["train-toy", "--seed", "4", "--epochs", "2", "--images", "20", "--augment"],
        vec!["extract-features", "--seed", "4", "--frames", frames.to_str().unwrap()],
        vec!["loocv", "--seed", "4", "--manifest", &manifest, "--classifier", "mlp"],
        vec!["ablate", "--seed", "4", "--manifest", &manifest, "--classifier", "gbt"],
        vec!["ttest", "--seed", "4", "--manifest", &manifest],
    ];
    for args in runs {
        let a = ok(&args);
        assert!(!a.is_empty());
        assert_eq!(a, ok(&args), "{args:?}");
    }
}
