//! Experiment configuration and file-based pipeline stages.
//!
//! Each stage reads upstream artifacts from one directory, checks them against
//! the upstream manifest, and writes its outputs plus `<stage>.manifest.json`.

mod config;
mod stages;

pub use config::{
    preset, smoke_preset, validate_config, ExperimentConfig, ModelConfig, SimulateConfig, TestConfig, PRESET_NAMES,
};
pub use stages::{
    exit_code, require_upstream, run_all, run_stage, write_atomic, Stage, StageDirs, StageManifest, COMPARISON,
    COMPARISON_TEXT, DATASET, LOSS_HISTORY, MODEL, POINTWISE_ERROR, PREDICTION, PREDICTION_RUN, REPORT_PRED,
    REPORT_REF, TEST_REFERENCE, TRAIN_TRAJECTORY,
};
