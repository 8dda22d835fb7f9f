use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::chaostats::{compare_reports, evaluate_pair, ChaosReport};
use crate::dataset::{project_observed, sample_sequences, SequenceDataset};
use crate::dynamics::integrate;
use crate::flownet::{train_with_progress, FlowMapModel};
use crate::rollout::{pointwise_log_abs_error, predict_along, stability_envelope, within_envelope};
use crate::{fingerprint_bytes, fingerprint_file, Error, Result, Trajectory};

pub const TRAIN_TRAJECTORY: &str = "train.traj.bin";
pub const TEST_REFERENCE: &str = "test_ref.traj.csv";
pub const DATASET: &str = "dataset.cfds";
pub const MODEL: &str = "model.cfnn";
pub const LOSS_HISTORY: &str = "loss_history.csv";
pub const PREDICTION: &str = "prediction.traj.csv";
pub const POINTWISE_ERROR: &str = "pointwise_error.csv";
pub const PREDICTION_RUN: &str = "prediction_run.json";
pub const REPORT_REF: &str = "report_ref.json";
pub const REPORT_PRED: &str = "report_pred.json";
pub const COMPARISON: &str = "comparison.json";
pub const COMPARISON_TEXT: &str = "comparison.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulate,
    MakeDataset,
    Train,
    Predict,
    Evaluate,
    Compare,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Simulate, Stage::MakeDataset, Stage::Train, Stage::Predict, Stage::Evaluate, Stage::Compare];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::MakeDataset => "make-dataset",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
            Stage::Compare => "compare",
        }
    }

    pub fn manifest_file(self) -> String {
        format!("{}.manifest.json", self.name())
    }
}

/// Provenance written next to each stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub experiment: String,
    pub config_hash: String,
    /// File name to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout_diverged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_envelope: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    /// One-based epoch kept by best-epoch selection, and its full-dataset loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_loss: Option<f64>,
}

impl StageManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// Where a stage reads upstream artifacts and writes its own.
#[derive(Debug, Clone)]
pub struct StageDirs {
    pub input: PathBuf,
    pub output: PathBuf,
}

impl StageDirs {
    pub fn same(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        Self { input: dir.clone(), output: dir }
    }
}

/// Writes via a temporary sibling and a rename, so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn trajectory_text(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(traj.states().len() * 20);
    traj.write_text(&mut buf)?;
    Ok(buf)
}

/// Checks that `file` exists in `dir` and matches what `producer` recorded.
pub fn require_upstream(dir: &Path, producer: Stage, file: &str) -> Result<(PathBuf, String)> {
    let path = dir.join(file);
    if !path.exists() {
        return Err(Error::UpstreamMissing(path));
    }
    let manifest_path = dir.join(producer.manifest_file());
    if !manifest_path.exists() {
        return Err(Error::UpstreamMissing(manifest_path));
    }
    let manifest = StageManifest::load(&manifest_path)?;
    let found = fingerprint_file(&path)?;
    let expected = manifest.outputs.get(file).cloned().unwrap_or_else(|| "<not recorded>".into());
    if expected != found {
        return Err(Error::StaleArtifact { path, expected, found });
    }
    Ok((path, found))
}

struct StageRun<'a> {
    stage: Stage,
    cfg: &'a ExperimentConfig,
    dirs: &'a StageDirs,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> StageRun<'a> {
    fn new(stage: Stage, cfg: &'a ExperimentConfig, dirs: &'a StageDirs) -> Result<Self> {
        fs::create_dir_all(&dirs.output)?;
        Ok(Self { stage, cfg, dirs, started: Instant::now(), inputs: BTreeMap::new(), outputs: BTreeMap::new() })
    }

    fn input(&mut self, producer: Stage, file: &str) -> Result<PathBuf> {
        let (path, fp) = require_upstream(&self.dirs.input, producer, file)?;
        self.inputs.insert(file.into(), fp);
        Ok(path)
    }

    fn output(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dirs.output.join(file), bytes)?;
        self.outputs.insert(file.into(), fingerprint_bytes(bytes));
        Ok(())
    }

    fn finish(self) -> Result<StageManifest> {
        let manifest = StageManifest {
            stage: self.stage,
            experiment: self.cfg.name.clone(),
            config_hash: self.cfg.hash()?,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            rollout_diverged: None,
            diverged_at: None,
            within_envelope: None,
            final_loss: None,
            selected_epoch: None,
            selected_loss: None,
        };
        Ok(manifest)
    }
}

fn write_manifest(dirs: &StageDirs, manifest: &StageManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    write_atomic(&dirs.output.join(manifest.stage.manifest_file()), text.as_bytes())
}

/// Runs one stage. `log` receives human-readable progress lines.
pub fn run_stage(
    stage: Stage,
    cfg: &ExperimentConfig,
    dirs: &StageDirs,
    log: &mut dyn FnMut(&str),
) -> Result<StageManifest> {
    cfg.validate()?;
    let mut run = StageRun::new(stage, cfg, dirs)?;
    let manifest = match stage {
        Stage::Simulate => {
            let sim = &cfg.simulate;
            log(&format!("integrating {} steps for training", sim.n_steps()));
            let train = integrate(&cfg.system, &sim.initial_condition, sim.dt, sim.n_steps(), sim.substeps)?;
            run.output(TRAIN_TRAJECTORY, &train.to_binary_bytes())?;
            log(&format!("integrating {} steps for testing", cfg.test_steps()));
            let test = integrate(&cfg.system, &cfg.test.initial_condition, sim.dt, cfg.test_steps(), sim.substeps)?;
            run.output(TEST_REFERENCE, &trajectory_text(&test)?)?;
            run.finish()?
        }
        Stage::MakeDataset => {
            let path = run.input(Stage::Simulate, TRAIN_TRAJECTORY)?;
            let traj = Trajectory::load(&path)?;
            let observed = project_observed(&traj, &cfg.observation)?;
            let ds = sample_sequences(&observed, &cfg.dataset)?;
            log(&format!("sampled {} sequences of {} rows", ds.len(), ds.sequence_len()));
            run.output(DATASET, &ds.to_bytes()?)?;
            let sidecar = format!("{DATASET}.json");
            run.output(&sidecar, ds.sidecar_json()?.as_bytes())?;
            run.finish()?
        }
        Stage::Train => {
            let path = run.input(Stage::MakeDataset, DATASET)?;
            let ds = SequenceDataset::load(&path)?;
            let model =
                FlowMapModel::init(ds.obs_dim, cfg.model.memory_len, &cfg.model.hidden_layers, cfg.model.init_seed)?;
            let every = (cfg.train.epochs / 20).max(1);
            let epochs = cfg.train.epochs;
            let outcome = train_with_progress(model, &ds, &cfg.train, |e, l| {
                if (e + 1) % every == 0 || e + 1 == epochs {
                    log(&format!("epoch {:>6}/{epochs}  loss {l:.6e}", e + 1));
                }
            })?;
            run.output(MODEL, &outcome.model.to_checkpoint_bytes()?)?;
            let mut csv = String::from("epoch,loss,full_dataset_loss\n");
            for (e, l) in outcome.loss_history.iter().enumerate() {
                let full = outcome.eval_history.get(e).map_or(String::new(), f64::to_string);
                let _ = writeln!(csv, "{},{l},{full}", e + 1);
            }
            run.output(LOSS_HISTORY, csv.as_bytes())?;
            let mut m = run.finish()?;
            m.final_loss = outcome.loss_history.last().copied();
            if let Some(best) = outcome.best_epoch {
                log(&format!("kept epoch {} (full-dataset loss {:.6e})", best + 1, outcome.eval_history[best]));
                m.selected_epoch = Some(best + 1);
                m.selected_loss = Some(outcome.eval_history[best]);
            }
            m
        }
        Stage::Predict => {
            let model_path = run.input(Stage::Train, MODEL)?;
            let ref_path = run.input(Stage::Simulate, TEST_REFERENCE)?;
            let model = FlowMapModel::load(&model_path)?;
            let reference = project_observed(&Trajectory::load(&ref_path)?, &cfg.observation)?;
            log(&format!("predicting {} steps", reference.len().saturating_sub(model.window_len())));
            let pred = predict_along(&model, &reference)?;
            if let Some(step) = pred.diverged_at {
                log(&format!("rollout diverged at step {step}; truncated"));
            }
            run.output(PREDICTION, &trajectory_text(&pred.predicted)?)?;
            let err = pointwise_log_abs_error(&pred.predicted, &reference)?;
            let mut csv = format!("time,{}\n", reference.labels().join(","));
            for i in 0..err.first().map_or(0, Vec::len) {
                let _ = write!(csv, "{}", reference.time(i));
                for col in &err {
                    let _ = write!(csv, ",{}", col[i]);
                }
                csv.push('\n');
            }
            run.output(POINTWISE_ERROR, csv.as_bytes())?;
            run.output(PREDICTION_RUN, serde_json::to_string_pretty(&pred.manifest())?.as_bytes())?;
            let envelope = stability_envelope(&reference, cfg.stability_factor);
            let mut m = run.finish()?;
            m.rollout_diverged = Some(pred.diverged_at.is_some());
            m.diverged_at = pred.diverged_at;
            m.within_envelope = Some(pred.diverged_at.is_none() && within_envelope(&pred.predicted, &envelope));
            m
        }
        Stage::Evaluate => {
            let ref_path = run.input(Stage::Simulate, TEST_REFERENCE)?;
            let pred_path = run.input(Stage::Predict, PREDICTION)?;
            let reference = project_observed(&Trajectory::load(&ref_path)?, &cfg.observation)?;
            let prediction = Trajectory::load(&pred_path)?;
            log("computing metrics");
            let ((rr, rd), (pr, pd)) = evaluate_pair(&reference, &prediction, &cfg.metrics)?;
            for (tag, report, diag) in [("ref", &rr, &rd), ("pred", &pr, &pd)] {
                let json = serde_json::to_string_pretty(report)?;
                run.output(&format!("report_{tag}.json"), json.as_bytes())?;
                run.output(&format!("acf_{tag}.csv"), report.acf_csv().as_bytes())?;
                run.output(&format!("histogram_{tag}.csv"), report.histogram_csv().as_bytes())?;
                run.output(&format!("corrdim_{tag}.csv"), diag.correlation_csv().as_bytes())?;
                run.output(&format!("divergence_{tag}.csv"), diag.divergence_csv().as_bytes())?;
            }
            run.finish()?
        }
        Stage::Compare => {
            let rp = run.input(Stage::Evaluate, REPORT_REF)?;
            let pp = run.input(Stage::Evaluate, REPORT_PRED)?;
            let load = |p: &Path| -> Result<ChaosReport> {
                serde_json::from_str(&fs::read_to_string(p)?)
                    .map_err(|e| Error::Format(format!("{}: {e}", p.display())))
            };
            let table = compare_reports(&load(&rp)?, &load(&pp)?)?;
            let text = table.to_text();
            log(text.trim_end());
            run.output(COMPARISON, serde_json::to_string_pretty(&table)?.as_bytes())?;
            run.output(COMPARISON_TEXT, text.as_bytes())?;
            run.finish()?
        }
    };
    write_manifest(dirs, &manifest)?;
    Ok(manifest)
}

/// Every stage in order, reading and writing `dir`.
pub fn run_all(cfg: &ExperimentConfig, dir: &Path, log: &mut dyn FnMut(&str)) -> Result<Vec<StageManifest>> {
    let dirs = StageDirs::same(dir);
    let mut out = Vec::new();
    for stage in Stage::ALL {
        log(&format!("== {}", stage.name()));
        out.push(run_stage(stage, cfg, &dirs, log)?);
    }
    Ok(out)
}

/// Process exit code for a pipeline error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 2,
        Error::UpstreamMissing(_) | Error::StaleArtifact { .. } | Error::Format(_) => 3,
        Error::TrainingDiverged { .. } => 4,
        _ => 1,
    }
}
