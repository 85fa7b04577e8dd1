//! End-to-end checks of the command-line surface.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_econtrol"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const TOY_ECONTROL: &str = r#"{
  "problem": {"family": "toy_divergence"},
  "oracle": {"mode": "exact"},
  "algorithm": {
    "method": "econtrol",
    "gamma": 0.001,
    "eta": 0.1,
    "compressor": {"kind": "top_k", "k": 1}
  },
  "rounds": 50,
  "eval_every": 10,
  "master_seed": 7
}"#;

#[test]
fn run_writes_trace_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("round,bits,loss,grad_norm_sq,dist_sq"));
    assert_eq!(trace.lines().count(), 1 + 6); // header + rounds 0,10,...,50

    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("resolved-config.json")).unwrap())
            .unwrap();
    assert_eq!(resolved["algorithm"]["gamma"], serde_json::json!(0.001));
}

#[test]
fn missing_compressor_k_fails_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        &TOY_ECONTROL.replace(r#"{"kind": "top_k", "k": 1}"#, r#"{"kind": "top_k"}"#),
    );
    let output: Output = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("compressor.k"),
        "stderr does not name the offending key: {stderr}"
    );
}

#[test]
fn set_overrides_take_precedence_and_land_in_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args([
            "--set",
            "gamma=0.0005",
            "--set",
            "gamma=0.002",
            "--set",
            "algorithm.compressor.k=2",
            "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("last one wins"), "repeat note missing: {stderr}");

    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("resolved-config.json")).unwrap())
            .unwrap();
    assert_eq!(resolved["algorithm"]["gamma"], serde_json::json!(0.002));
    assert_eq!(resolved["algorithm"]["compressor"]["k"], serde_json::json!(2));
}

#[test]
fn unknown_override_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--set", "algorithm.bogus_knob=3"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus_knob"), "stderr: {stderr}");
}

#[test]
fn env_seed_overrides_the_config_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .env("ECONTROL_SEED", "99")
        .output()
        .unwrap();
    assert!(output.status.success());
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("resolved-config.json")).unwrap())
            .unwrap();
    assert_eq!(resolved["master_seed"], serde_json::json!(99));
}

#[test]
fn resolved_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&first)
        .status()
        .unwrap()
        .success());
    // Re-run from the resolved config; the trace must be identical.
    assert!(bin()
        .args(["run", "--config"])
        .arg(first.join("resolved-config.json"))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap()
        .success());
    assert_eq!(
        std::fs::read(first.join("trace.csv")).unwrap(),
        std::fs::read(second.join("trace.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(first.join("resolved-config.json")).unwrap(),
        std::fs::read(second.join("resolved-config.json")).unwrap()
    );
}

#[test]
fn sweep_writes_cells_and_best() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", TOY_ECONTROL);
    let out_dir = dir.path().join("sweep");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--gammas", "0.001,0.01", "--etas", "0.1", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let best: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("best.json")).unwrap()).unwrap();
    assert_eq!(best["cells"].as_array().unwrap().len(), 2);
    assert!(best["best"]["gamma"].is_number());
    assert!(best["best"]["gamma_max_theory"].is_number());
    // Each cell directory carries its own trace + config.
    for cell in best["cells"].as_array().unwrap() {
        let cell_dir = out_dir.join(cell["dir"].as_str().unwrap());
        assert!(cell_dir.join("trace.csv").exists());
        assert!(cell_dir.join("resolved-config.json").exists());
    }
}

#[test]
fn sweep_with_every_cell_diverging_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // Full feedback from zero-initialized estimators: blows up at any gamma.
    let body = TOY_ECONTROL
        .replace(r#""eta": 0.1,"#, r#""eta": 1.0, "h0_init": "zero","#)
        .replace(r#""rounds": 50"#, r#""rounds": 20000"#);
    let config = write_config(dir.path(), "diverge.json", &body);
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--gammas", "0.0005,0.01", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "expected exit code 2");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("no stable configuration"), "stderr: {stderr}");
}

#[test]
fn list_presets_names_all_five() {
    let output = bin().arg("list-presets").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    for name in ["fig1", "fig2", "fig3", "appendixC_a", "appendixC_b"] {
        assert!(stdout.contains(name), "missing preset {name} in: {stdout}");
    }
}

#[test]
fn unknown_preset_fails_with_the_available_list() {
    let output = bin().args(["reproduce", "--preset", "fig9"]).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown preset"), "stderr: {stderr}");
    assert!(stderr.contains("appendixC_b"), "stderr: {stderr}");
}

/// The zero-initialized stability preset: full feedback diverges, feedback
/// = delta converges to machine precision.
#[test]
fn reproduce_appendix_c_b_separates_the_two_feedback_strengths() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["reproduce", "--preset", "appendixC_b", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("appendixC_b/summary.json")).unwrap(),
    )
    .unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let diverged_of = |label: &str| -> bool {
        runs.iter()
            .find(|r| r["label"] == label)
            .unwrap()["diverged"]
            .as_bool()
            .unwrap()
    };
    assert!(diverged_of("eta_1"), "eta=1 should be flagged diverged");
    assert!(!diverged_of("eta_delta"), "eta=delta should not diverge");

    // grad_norm_sq is the fourth column of the trace.
    let grads_of = |label: &str| -> Vec<f64> {
        let text = std::fs::read_to_string(
            dir.path().join("appendixC_b").join(label).join("trace.csv"),
        )
        .unwrap();
        text.lines()
            .skip(1)
            .map(|line| line.split(',').nth(3).unwrap().parse::<f64>().unwrap())
            .collect()
    };
    let eta_one = grads_of("eta_1");
    assert!(
        eta_one.iter().any(|g| *g >= 1e3),
        "eta=1 trace never reached grad^2 >= 1e3"
    );
    let eta_delta = grads_of("eta_delta");
    assert!(
        *eta_delta.last().unwrap() < 1e-10,
        "eta=delta final grad^2 {} not below 1e-10",
        eta_delta.last().unwrap()
    );
}
