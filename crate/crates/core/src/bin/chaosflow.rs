use std::path::PathBuf;
use std::process::ExitCode;

use chaosflow::pipeline::{exit_code, preset, run_all, run_stage, ExperimentConfig, Stage, StageDirs, PRESET_NAMES};
use chaosflow::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chaosflow", version, about = "Learn flow maps of chaotic systems and compare their statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config JSON path, or `preset:<name>`.
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long, default_value = "runs/out")]
    out: PathBuf,
    /// Directory holding upstream artifacts (defaults to --out).
    #[arg(long)]
    stage_in: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "CHAOSFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    Simulate(Common),
    MakeDataset(Common),
    Train(Common),
    Predict(Common),
    Evaluate(Common),
    Compare(Common),
    /// All stages in order, in one directory.
    RunAll(Common),
    /// Checks a config and lists every violation.
    ValidateConfig {
        #[arg(long)]
        config: String,
    },
    /// Prints a built-in preset as JSON.
    ShowPreset {
        name: String,
    },
}

fn load_config(spec: &str) -> Result<ExperimentConfig> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return preset(name).ok_or_else(|| {
            Error::InvalidConfig(vec![format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", "))])
        });
    }
    let text = std::fs::read_to_string(spec)?;
    ExperimentConfig::from_json(&text).map_err(|e| Error::InvalidConfig(vec![format!("{spec}: {e}")]))
}

fn prepare(c: &Common) -> Result<ExperimentConfig> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    let mut cfg = load_config(&c.config)?;
    if let Some(seed) = c.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let stage = |c: Common, s: Stage| -> Result<()> {
        let cfg = prepare(&c)?;
        let dirs = StageDirs { input: c.stage_in.clone().unwrap_or_else(|| c.out.clone()), output: c.out.clone() };
        let quiet = c.quiet;
        let m = run_stage(s, &cfg, &dirs, &mut |l| {
            if !quiet {
                eprintln!("{l}");
            }
        })?;
        if m.rollout_diverged == Some(true) {
            eprintln!("warning: rollout diverged at step {}", m.diverged_at.unwrap_or(0));
        }
        Ok(())
    };
    match cli.command {
        Command::Simulate(c) => stage(c, Stage::Simulate),
        Command::MakeDataset(c) => stage(c, Stage::MakeDataset),
        Command::Train(c) => stage(c, Stage::Train),
        Command::Predict(c) => stage(c, Stage::Predict),
        Command::Evaluate(c) => stage(c, Stage::Evaluate),
        Command::Compare(c) => stage(c, Stage::Compare),
        Command::RunAll(c) => {
            let cfg = prepare(&c)?;
            let quiet = c.quiet;
            run_all(&cfg, &c.out, &mut |l| {
                if !quiet {
                    eprintln!("{l}");
                }
            })?;
            Ok(())
        }
        Command::ValidateConfig { config } => {
            load_config(&config)?.validate()?;
            println!("ok");
            Ok(())
        }
        Command::ShowPreset { name } => {
            let cfg = load_config(&format!("preset:{name}"))?;
            println!("{}", cfg.to_json()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::InvalidConfig(v) => {
                    eprintln!("error: invalid config");
                    for line in v {
                        eprintln!("  {line}");
                    }
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
