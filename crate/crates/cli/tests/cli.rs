use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn roomac(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--no-timestamp")
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let output = roomac(args, dir.path());
    let report = std::fs::read_to_string(dir.path().join("report.json"))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (output.status.code().unwrap(), report, String::from_utf8_lossy(&output.stderr).into_owned())
}

fn manifest(f: &str) -> String {
    fixture(f).join("session.toml").display().to_string()
}

/// Writes a manifest into a temp dir; `{fixtures}` expands to the shipped fixture root.
fn temp_manifest(text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.toml");
    let root = fixture("").display().to_string();
    std::fs::write(&path, text.replace("{fixtures}", root.trim_end_matches('/'))).unwrap();
    (dir, path.display().to_string())
}

const HEADER: &str = "schema_version = 1\n[session]\nid = \"t\"\ncondition = \"other\"\nvolume_m3 = 150.8\nusage = \"lecture\"\n";

fn f64_at(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn analyze_synthetic_half_second_room() {
    let (code, report, _) = run(&["analyze", &manifest("decay_0p5")]);
    assert_eq!(code, 0);
    assert_eq!(report["status"], "complete");
    let scenario = &report["scenarios"][0];
    for avg in scenario["spatial_average"].as_array().unwrap() {
        let t30 = f64_at(&avg["params"]["t30"]);
        assert!((t30 - 0.5).abs() <= 0.005, "{avg}");
    }
    for check in scenario["compliance"]["t30"].as_array().unwrap() {
        assert_eq!(check["verdict"], "pass");
    }
}

#[test]
fn missing_file_gives_partial_report() {
    let (_dir, path) = temp_manifest(&format!(
        "{HEADER}[[scenario]]\nsource = \"S1\"\n[[scenario.receiver]]\nlabel = \"M1\"\nir_file = \"{{fixtures}}/decay_0p5/m1.wav\"\ndistance_m = 2.0\n[[scenario.receiver]]\nlabel = \"M2\"\nir_file = \"nowhere.wav\"\ndistance_m = 3.0\n"
    ));
    let (code, report, _) = run(&["analyze", &path]);
    assert_eq!(code, 1);
    assert_eq!(report["status"], "partial");
    assert_eq!(report["issues"][0]["receiver"], "M2");
    assert_eq!(report["scenarios"][0]["positions"].as_array().unwrap().len(), 1);
}

#[test]
fn invalid_manifests_are_unusable() {
    let (_dir, path) = temp_manifest(HEADER);
    let (code, _, stderr) = run(&["analyze", &path]);
    assert_eq!(code, 2);
    assert!(stderr.contains("at least one [[scenario]]"), "{stderr}");

    let (_dir, path) = temp_manifest(&format!(
        "{}[[scenario]]\nsource = \"S1\"\n[[scenario.receiver]]\nlabel = \"M1\"\nir_file = \"{{fixtures}}/decay_0p5/m1.wav\"\ndistance_m = 2.0\n",
        HEADER.replace("volume_m3 = 150.8\n", "")
    ));
    let (code, _, stderr) = run(&["advise", &path]);
    assert_eq!(code, 2);
    assert!(stderr.contains("volume_m3 is missing"), "{stderr}");
}

#[test]
fn ideal_channel_sti() {
    let (code, report, _) = run(&["sti", &manifest("ideal"), "--no-noise"]);
    assert_eq!(code, 0);
    let p = &report["scenarios"][0]["positions"][0];
    assert!((f64_at(&p["result"]["sti_male"]) - 1.0).abs() <= 0.001);
    assert!((f64_at(&p["result"]["sti_female"]) - 1.0).abs() <= 0.001);
    assert_eq!(p["rating"], "excellent");
}

#[test]
fn noise_lowers_sti() {
    let (_, with, _) = run(&["sti", &manifest("decay_0p6_noise"), "--with-noise"]);
    let (_, without, _) = run(&["sti", &manifest("decay_0p6_noise"), "--no-noise", "--gender", "female"]);
    assert_eq!(without["emphasis"], "female");
    for (a, b) in with["scenarios"][0]["positions"].as_array().unwrap().iter().zip(without["scenarios"][0]["positions"].as_array().unwrap()) {
        assert!(f64_at(&a["result"]["sti_male"]) < f64_at(&b["result"]["sti_male"]));
        assert!(f64_at(&a["result"]["sti_female"]) < f64_at(&b["result"]["sti_female"]));
    }
    let (code, _, stderr) = run(&["sti", &manifest("decay_0p5"), "--with-noise"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("no noise entry"), "{stderr}");
}

#[test]
fn identical_sessions_compare_to_zero() {
    let m = manifest("decay_0p6_noise");
    let (code, report, _) = run(&["compare", &m, &m]);
    assert_eq!(code, 0);
    let cmp = &report["comparison"];
    for p in cmp["positions"].as_array().unwrap() {
        for d in p["t30"].as_array().unwrap().iter().chain(p["c50"].as_array().unwrap()) {
            assert_eq!(f64_at(&d["delta"]), 0.0);
        }
        assert_eq!(f64_at(&p["sti_with_noise"]["delta"]), 0.0);
    }
    assert!(cmp["transitions"].as_object().unwrap().is_empty());
}

#[test]
fn disjoint_positions_are_unusable() {
    let (_dir, path) = temp_manifest(&format!(
        "{HEADER}[[scenario]]\nsource = \"S9\"\n[[scenario.receiver]]\nlabel = \"M9\"\nir_file = \"{{fixtures}}/decay_0p5/m1.wav\"\ndistance_m = 2.0\n"
    ));
    let (code, _, stderr) = run(&["compare", &manifest("decay_0p5"), &path]);
    assert_eq!(code, 2);
    assert!(stderr.contains("no matching"), "{stderr}");
}

#[test]
fn advise_sizes_treatment() {
    let (code, report, _) = run(&["advise", &manifest("advise_0p65"), "--target", "hybrid_meeting"]);
    assert_eq!(code, 0);
    let bands = report["advisor"]["bands"].as_array().unwrap();
    let mid = bands.iter().find(|b| b["band_center"] == 1000.0).unwrap();
    assert!((f64_at(&mid["added_absorption"]) - 11.2).abs() <= 0.1, "{mid}");
    assert!(report["advisor"]["coverage"].is_object());

    let (code, report, _) = run(&["advise", &manifest("compliant_0p45")]);
    assert_eq!(code, 0);
    for b in report["advisor"]["bands"].as_array().unwrap() {
        assert_eq!(f64_at(&b["added_absorption"]), 0.0);
    }
}

#[test]
fn third_octave_analysis_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = roomac(&["analyze", &manifest("decay_0p5"), "--bands", "third", "--curves"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["bands"]["fraction"], "third");
    assert_eq!(report["bands"]["center_frequencies"].as_array().unwrap().len(), 22);
    let curve = std::fs::read_to_string(dir.path().join("curves/S1_M1_1000Hz.csv")).unwrap();
    assert!(curve.starts_with("time_s,level_db\n"));
}

#[test]
fn timestamp_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_roomac"))
        .args(["sti", &manifest("ideal"), "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["generated_at"].is_string());
}
