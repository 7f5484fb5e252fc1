use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"{
  "version": 1,
  "experiment": {
    "benchmark": {"synth": {"variable": "T2m", "lat": 4, "lon": 8, "start_year": 1991, "end_year": 1996},
                  "data_seed": 7, "test_years": [1991], "train_stride_days": 40, "val_stride_days": 30},
    "transfer": {"synth": {"variable": "U10", "lat": 4, "lon": 8, "start_year": 1991, "end_year": 1996},
                 "data_seed": 8, "test_years": [1991], "train_stride_days": 40, "val_stride_days": 30},
    "model": {"hidden": [4], "lat": 4, "lon": 8},
    "acausal": {"hidden": 4, "lat": 4, "lon": 8},
    "train": {"epochs": 2, "batch_size": 4},
    "seeds": [1, 2]
  }
}"#;

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("small.json"), SMALL).unwrap();
        Self { dir }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, out: &str, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_resa"))
            .current_dir(self.dir.path())
            .args(["--config", "small.json", "--out", out])
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, out: &str, args: &[&str]) -> String {
        let o = self.run(out, args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    }
}

fn skill_rows(path: &Path) -> Vec<(String, usize, f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn synth_is_deterministic_and_recorded() {
    let w = Work::new();
    w.ok("a", &["synth"]);
    w.ok("b", &["synth"]);
    let a = fs::read(w.p("a/run_record.json")).unwrap();
    assert_eq!(a, fs::read(w.p("b/run_record.json")).unwrap());
    let rec: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(rec["command"], "synth");
    let outputs = rec["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "manifest.json"));
    assert!(outputs.iter().any(|o| o["path"] == "t2m_forecast_lead7.gts"));
    for o in outputs {
        assert_eq!(o["sha256"].as_str().unwrap().len(), 64);
    }

    w.ok("c", &["--seed", "99", "synth"]);
    assert_ne!(fs::read(w.p("a/t2m_truth.gts")).unwrap(), fs::read(w.p("c/t2m_truth.gts")).unwrap());
}

#[test]
fn error_free_forecasts_score_perfectly() {
    let w = Work::new();
    w.ok("syn", &["synth", "--no-errors"]);
    w.ok("ev", &["evaluate", "--manifest", "syn/manifest.json"]);
    let rows = skill_rows(&w.p("ev/skill.csv"));
    assert_eq!(rows.len(), 7);
    for (model, _, rmse, acc) in rows {
        assert_eq!(model, "raw");
        assert!(rmse < 1e-9, "rmse {rmse}");
        assert!((acc - 1.0).abs() < 1e-9, "acc {acc}");
    }
}

#[test]
fn train_evaluate_correct_audit() {
    let w = Work::new();
    w.ok("syn", &["synth"]);
    w.ok("tr", &["train", "--manifest", "syn/manifest.json"]);
    for f in ["model.resa", "loss_curve.csv", "climatology.clm", "skill.csv", "summary.txt", "run_record.json"] {
        assert!(w.p("tr").join(f).is_file(), "{f}");
    }
    w.ok("tra", &["train", "--manifest", "syn/manifest.json", "--acausal-baseline"]);

    let args = ["evaluate", "--manifest", "syn/manifest.json", "--checkpoint", "tr/model.resa", "--climatology", "tr/climatology.clm"];
    w.ok("ev", &args);
    let trained = skill_rows(&w.p("tr/skill.csv"));
    assert_eq!(trained, skill_rows(&w.p("ev/skill.csv")));
    assert!(w.p("ev/bias_ReSA-ConvLSTM.gts").is_file());

    // Evaluating the corrected dataset as raw reproduces the model's scores.
    w.ok("cor", &["correct", "--manifest", "syn/manifest.json", "--checkpoint", "tr/model.resa"]);
    w.ok("ev2", &["evaluate", "--manifest", "cor/manifest.json"]);
    let model: Vec<_> = trained.iter().filter(|r| r.0 == "ReSA-ConvLSTM").collect();
    let again = skill_rows(&w.p("ev2/skill.csv"));
    assert_eq!(model.len(), again.len());
    for (m, r) in model.iter().zip(&again) {
        assert_eq!(m.1, r.1);
        assert!((m.2 - r.2).abs() < 1e-9 && (m.3 - r.3).abs() < 1e-9);
    }

    w.ok("au", &["audit", "--checkpoint", "tr/model.resa", "--checkpoint", "tra/model.basl"]);
    let resa: Value = serde_json::from_str(&fs::read_to_string(w.p("au/probe_0_ReSA-ConvLSTM.json")).unwrap()).unwrap();
    assert_eq!(resa["verdict"], "CAUSAL");
    let acausal: Value = serde_json::from_str(&fs::read_to_string(w.p("au/probe_1_acausal-conv.json")).unwrap()).unwrap();
    assert_eq!(acausal["verdict"], "ACAUSAL");
    assert_eq!(acausal["causal_claim"], false);
}

#[test]
fn finetune_reports_frozen_groups() {
    let w = Work::new();
    w.ok("tr", &["train"]);
    w.ok("ft", &["finetune", "--checkpoint", "tr/model.resa", "--variable", "U10", "--target-val-loss", "10"]);
    let rec: Value = serde_json::from_str(&fs::read_to_string(w.p("ft/finetune.json")).unwrap()).unwrap();
    assert_eq!(rec["source_variable"], "T2m");
    assert_eq!(rec["target_variable"], "U10");
    assert_eq!(rec["frozen_groups"], serde_json::json!(["convlstm"]));
    assert_eq!(rec["epochs_to_target"], 1);
}

#[test]
fn ablations_and_plotdata() {
    let w = Work::new();
    w.ok("aa", &["ablate-arch", "--seeds", "1"]);
    let summary = fs::read_to_string(w.p("aa/ablate_arch_summary.csv")).unwrap();
    let archs: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(archs, ["ConvLSTM", "SA-ConvLSTM", "Residual-ConvLSTM", "ReSA-ConvLSTM"]);

    w.ok("an", &["ablate-norm"]);
    let norm: Value = serde_json::from_str(&fs::read_to_string(w.p("an/ablate_norm.json")).unwrap()).unwrap();
    assert!(norm["static_rmse"].as_f64().unwrap() > 0.0);

    w.ok("al", &["ablate-leadtime", "--horizons", "3,7", "--arch", "resa"]);
    let lt = fs::read_to_string(w.p("al/leadtime.csv")).unwrap();
    assert_eq!(lt.lines().next(), Some("architecture,train_horizon,lead,rmse"));
    assert_eq!(lt.lines().count(), 1 + 3 + 7);

    w.ok("pd", &["plotdata", "--from", "aa", "--from", "an", "--from", "al"]);
    for f in ["fig4a_norm.csv", "fig4b_leadtime.csv", "fig4c_arch.csv"] {
        assert!(w.p("pd").join(f).is_file(), "{f}");
    }
    assert!(!w.p("pd/fig2a_rmse.csv").exists());
}

#[test]
fn exit_codes() {
    let w = Work::new();
    fs::write(w.p("bad.json"), r#"{"version": 9}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_resa"))
        .current_dir(w.dir.path())
        .args(["--config", "bad.json", "synth"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = w.run("x", &["evaluate", "--checkpoint", "missing.resa"]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(w.p("junk.resa"), b"RESA not really a checkpoint").unwrap();
    let o = w.run("x", &["evaluate", "--checkpoint", "junk.resa"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = w.run("x", &["--threads", "0", "synth"]);
    assert_eq!(o.status.code(), Some(2));

    let o = w.run("x", &["climatology", "--variable", "Z500"]);
    assert_eq!(o.status.code(), Some(2));
}
