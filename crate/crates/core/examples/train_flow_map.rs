//! Learns the Lorenz 63 flow map from full-state data and rolls it out from a new initial condition.
//!
//! `cargo run --release --example train_flow_map -- [epochs]`

use chaosflow::dataset::{sample_sequences, DatasetSpec};
use chaosflow::dynamics::{integrate, SystemSpec};
use chaosflow::flownet::{train_with_progress, FlowMapModel, TrainConfig};
use chaosflow::rollout::{pointwise_log_abs_error, predict_along};

fn main() -> chaosflow::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let system = SystemSpec::lorenz63();
    let train_traj = integrate(&system, &[1.0, 1.0, 1.0], 0.01, 50_000, 10)?;
    let test_traj = integrate(&system, &[10.0, 10.0, 20.0], 0.01, 1000, 10)?;

    let spec = DatasetSpec { m_sequences: 2000, memory_len: 0, recurrent_len: 5, seed: 1, normalize: false };
    let dataset = sample_sequences(&train_traj, &spec)?;
    let cfg = TrainConfig {
        epochs,
        batch_size: 50,
        learning_rate: 1e-3,
        recurrent_len: 5,
        seed: 1,
        shuffle: true,
        select_best: true,
    };
    let model = FlowMapModel::init(3, 0, &[20, 20, 20], 1)?;
    let every = (epochs / 10).max(1);
    let outcome = train_with_progress(model, &dataset, &cfg, |e, l| {
        if (e + 1) % every == 0 {
            println!("epoch {:>5}  loss {l:.5}", e + 1);
        }
    })?;
    if let Some(e) = outcome.best_epoch {
        println!("kept epoch {}", e + 1);
    }

    let run = predict_along(&outcome.model, &test_traj)?;
    if let Some(step) = run.diverged_at {
        println!("rollout diverged at step {step}");
    }
    let err = pointwise_log_abs_error(&run.predicted, &test_traj)?;
    println!("\n  t     log10|x err|  log10|y err|  log10|z err|");
    for i in (0..err[0].len()).step_by(100) {
        println!("{:>5.1} {:>12.2} {:>13.2} {:>13.2}", test_traj.time(i), err[0][i], err[1][i], err[2][i]);
    }
    Ok(())
}
