use std::path::Path;
use std::process::{Command, Output};

use chaosflow::pipeline::{smoke_preset, ExperimentConfig, COMPARISON_TEXT};

fn chaosflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaosflow"))
        .args(args)
        .env_remove("CHAOSFLOW_THREADS")
        .output()
        .expect("spawn chaosflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn show_preset_round_trips_through_validate() {
    let o = chaosflow(&["show-preset", "ex3"]);
    assert_eq!(code(&o), 0);
    let cfg = ExperimentConfig::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.model.hidden_layers, vec![200, 200, 200]);

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    let o = chaosflow(&["validate-config", "--config", &path]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let o = chaosflow(&["show-preset", "ex9"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ex1-desk"));
}

#[test]
fn validate_config_lists_every_violation() {
    let mut cfg = smoke_preset("ex1-desk").unwrap();
    cfg.model.memory_len = 3;
    cfg.simulate.dt = -0.01;
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    let o = chaosflow(&["validate-config", "--config", &path]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.memory_len"), "{err}");
    assert!(err.contains("simulate.dt"), "{err}");
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let o = chaosflow(&["simulate", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_upstream_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = chaosflow(&["train", "--config", "preset:ex1-desk", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dataset.cfds"));
}

#[test]
fn training_divergence_exits_4() {
    let mut cfg = smoke_preset("ex1-desk").unwrap();
    cfg.train.learning_rate = 1e200;
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().join("run");
    let o = chaosflow(&["run-all", "--config", &path, "--out", out.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn staged_run_matches_run_all() {
    let cfg = smoke_preset("ex2-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);

    let all = dir.path().join("all");
    let o = chaosflow(&["run-all", "--config", &path, "--out", all.to_str().unwrap(), "--threads", "2", "-q"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let staged = dir.path().join("staged");
    for stage in ["simulate", "make-dataset", "train", "predict", "evaluate", "compare"] {
        let o = Command::new(env!("CARGO_BIN_EXE_chaosflow"))
            .args([stage, "--config", &path, "--out", staged.to_str().unwrap(), "-q"])
            .env("CHAOSFLOW_THREADS", "1")
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(all.join(COMPARISON_TEXT)).unwrap();
    let b = std::fs::read(staged.join(COMPARISON_TEXT)).unwrap();
    assert_eq!(a, b, "thread count and staging must not change results");
}

#[test]
fn seed_override_changes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_preset("ex1-desk").unwrap();
    let path = write_config(dir.path(), &cfg);
    let mut models = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let o = chaosflow(&["run-all", "--config", &path, "--out", out.to_str().unwrap(), "--seed", seed, "-q"]);
        assert_eq!(code(&o), 0);
        models.push(std::fs::read(out.join("model.cfnn")).unwrap());
    }
    assert_ne!(models[0], models[1]);
}
