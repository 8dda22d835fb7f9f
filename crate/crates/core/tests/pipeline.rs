use std::collections::BTreeMap;
use std::path::Path;

use chaosflow::chaostats::ComparisonTable;
use chaosflow::dataset::project_observed;
use chaosflow::flownet::FlowMapModel;
use chaosflow::pipeline::{
    exit_code, preset, run_stage, smoke_preset, validate_config, write_atomic, Stage, StageDirs, StageManifest,
    COMPARISON, DATASET, MODEL, PREDICTION, TEST_REFERENCE, TRAIN_TRAJECTORY,
};
use chaosflow::{fingerprint_bytes, Error, Trajectory};

fn quiet() -> impl FnMut(&str) {
    |_| {}
}

fn run(stage: Stage, cfg: &chaosflow::pipeline::ExperimentConfig, dir: &Path) -> chaosflow::Result<StageManifest> {
    run_stage(stage, cfg, &StageDirs::same(dir), &mut quiet())
}

/// Writes `files` plus a manifest claiming `stage` produced them.
fn fake_stage(dir: &Path, stage: Stage, files: &[(&str, Vec<u8>)]) {
    let mut outputs = BTreeMap::new();
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes).unwrap();
        outputs.insert(name.to_string(), fingerprint_bytes(bytes));
    }
    let manifest = StageManifest {
        stage,
        experiment: "test".into(),
        config_hash: String::new(),
        inputs: BTreeMap::new(),
        outputs,
        wall_time_s: 0.0,
        rollout_diverged: None,
        diverged_at: None,
        within_envelope: None,
        final_loss: None,
        selected_epoch: None,
        selected_loss: None,
    };
    let json = serde_json::to_vec_pretty(&manifest).unwrap();
    write_atomic(&dir.join(stage.manifest_file()), &json).unwrap();
}

#[test]
fn full_ex1_simulation_has_a_million_steps() {
    let cfg = preset("ex1").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut small = cfg.clone();
    small.test.horizon = 1.0;
    run(Stage::Simulate, &small, dir.path()).unwrap();
    let t = Trajectory::load(&dir.path().join(TRAIN_TRAJECTORY)).unwrap();
    assert_eq!(t.len(), 1_000_001);
    assert_eq!(t.row(0), &[1.0, 1.0, 1.0]);
}

#[test]
fn validation_examples() {
    assert!(validate_config(&preset("ex1").unwrap()).is_empty());

    let mut cfg = preset("ex1").unwrap();
    cfg.model.memory_len = 10;
    let v = validate_config(&cfg);
    assert!(v.iter().any(|m| m.contains("model.memory_len") && m.contains("dataset.memory_len")));

    let mut cfg = preset("ex3").unwrap();
    cfg.observation.indices = vec![5, 40];
    let v = validate_config(&cfg);
    assert!(v.iter().any(|m| m.contains("observation.indices[1]") && m.contains("out of range")));

    // Invalid configs stop before any stage writes.
    let dir = tempfile::tempdir().unwrap();
    let err = run(Stage::Simulate, &cfg, dir.path()).unwrap_err();
    assert_eq!(exit_code(&err), 2);
    assert!(!dir.path().join(TRAIN_TRAJECTORY).exists());
}

#[test]
fn missing_upstream_is_reported() {
    let cfg = smoke_preset("ex1-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run(Stage::Train, &cfg, dir.path()).unwrap_err();
    assert!(matches!(&err, Error::UpstreamMissing(p) if p.ends_with(DATASET)), "{err}");
    assert_eq!(exit_code(&err), 3);

    run(Stage::Simulate, &cfg, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join(Stage::Simulate.manifest_file())).unwrap();
    let err = run(Stage::MakeDataset, &cfg, dir.path()).unwrap_err();
    assert!(matches!(&err, Error::UpstreamMissing(p) if p.ends_with("simulate.manifest.json")), "{err}");
}

#[test]
fn stale_upstream_is_detected() {
    let cfg = smoke_preset("ex1-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(Stage::Simulate, &cfg, dir.path()).unwrap();
    run(Stage::MakeDataset, &cfg, dir.path()).unwrap();

    // Regenerating upstream with another seed leaves the old manifest downstream valid,
    // but editing the artifact behind the manifest's back must be caught.
    let path = dir.path().join(DATASET);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    let err = run(Stage::Train, &cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::StaleArtifact { .. }), "{err}");
    assert_eq!(exit_code(&err), 3);
}

#[test]
fn stage_in_reads_from_another_directory() {
    let cfg = smoke_preset("ex2-desk").unwrap();
    let up = tempfile::tempdir().unwrap();
    let down = tempfile::tempdir().unwrap();
    run(Stage::Simulate, &cfg, up.path()).unwrap();
    let dirs = StageDirs { input: up.path().into(), output: down.path().into() };
    let m = run_stage(Stage::MakeDataset, &cfg, &dirs, &mut quiet()).unwrap();
    assert!(down.path().join(DATASET).exists());
    assert!(!up.path().join(DATASET).exists());
    assert!(m.inputs.contains_key(TRAIN_TRAJECTORY));
    assert!(m.config_hash.len() == 64);
}

#[test]
fn identical_prediction_compares_to_zero() {
    let cfg = smoke_preset("ex1-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(Stage::Simulate, &cfg, dir.path()).unwrap();
    let reference = Trajectory::load(&dir.path().join(TEST_REFERENCE)).unwrap();
    let observed = project_observed(&reference, &cfg.observation).unwrap();
    let mut text = Vec::new();
    observed.write_text(&mut text).unwrap();
    fake_stage(dir.path(), Stage::Predict, &[(PREDICTION, text)]);

    run(Stage::Evaluate, &cfg, dir.path()).unwrap();
    run(Stage::Compare, &cfg, dir.path()).unwrap();
    let table: ComparisonTable =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(COMPARISON)).unwrap()).unwrap();
    for row in &table.rows {
        assert!(row.reference.is_some(), "{row:?}");
        assert_eq!(row.relative_error, Some(0.0), "{row:?}");
    }
    assert!(table.acf_max_abs_diff.iter().chain(&table.histogram_max_abs_diff).all(|&d| d == 0.0));
}

#[test]
fn rollout_divergence_is_a_flag_not_an_error() {
    let cfg = smoke_preset("ex1-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(Stage::Simulate, &cfg, dir.path()).unwrap();

    let mut model = FlowMapModel::zeros(3, 0, &cfg.model.hidden_layers).unwrap();
    let last = model.num_layers() - 1;
    model.biases_mut(last)[0] = 1e308;
    fake_stage(dir.path(), Stage::Train, &[(MODEL, model.to_checkpoint_bytes().unwrap())]);

    let m = run(Stage::Predict, &cfg, dir.path()).unwrap();
    assert_eq!(m.rollout_diverged, Some(true));
    assert_eq!(m.diverged_at, Some(2));
    assert_eq!(m.within_envelope, Some(false));
    let pred = Trajectory::load(&dir.path().join(PREDICTION)).unwrap();
    assert_eq!(pred.len(), 2);
}

#[test]
fn training_divergence_maps_to_exit_code_4() {
    let mut cfg = smoke_preset("ex1-desk").unwrap();
    cfg.train.learning_rate = 1e200;
    cfg.train.epochs = 5;
    let dir = tempfile::tempdir().unwrap();
    run(Stage::Simulate, &cfg, dir.path()).unwrap();
    run(Stage::MakeDataset, &cfg, dir.path()).unwrap();
    let err = run(Stage::Train, &cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::TrainingDiverged { .. }), "{err}");
    assert_eq!(exit_code(&err), 4);
    assert!(!dir.path().join(MODEL).exists());
}

#[test]
fn normalized_pipeline_records_statistics_in_the_model() {
    let mut cfg = smoke_preset("ex1-desk").unwrap();
    cfg.dataset.normalize = true;
    let dir = tempfile::tempdir().unwrap();
    for stage in [Stage::Simulate, Stage::MakeDataset, Stage::Train, Stage::Predict] {
        run(stage, &cfg, dir.path()).unwrap();
    }
    let model = FlowMapModel::load(&dir.path().join(MODEL)).unwrap();
    let norm = model.meta.normalization.expect("normalization recorded");
    assert_eq!(norm.mean.len(), 3);
    // Predictions come back in physical units: the seed row is the raw reference.
    let pred = Trajectory::load(&dir.path().join(PREDICTION)).unwrap();
    assert_eq!(pred.row(0), &cfg.test.initial_condition[..]);
}

#[test]
fn no_temporary_files_left_behind() {
    let cfg = smoke_preset("ex1-desk").unwrap();
    let dir = tempfile::tempdir().unwrap();
    chaosflow::pipeline::run_all(&cfg, dir.path(), &mut quiet()).unwrap();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(!name.ends_with(".tmp"), "{name}");
    }
    for stage in Stage::ALL {
        let m: StageManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(stage.manifest_file())).unwrap()).unwrap();
        for (name, hash) in &m.outputs {
            assert_eq!(&chaosflow::fingerprint_file(&dir.path().join(name)).unwrap(), hash);
        }
    }
}
