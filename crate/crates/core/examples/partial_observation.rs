//! Observes only x and y of Lorenz 63 and compensates with a memory of past states.
//!
//! `cargo run --release --example partial_observation -- [memory_len] [epochs]`

use chaosflow::chaostats::{compare_reports, evaluate_pair, MetricsConfig};
use chaosflow::dataset::{project_observed, sample_sequences, DatasetSpec, ObservationSpec};
use chaosflow::dynamics::{integrate, SystemSpec};
use chaosflow::flownet::{train, FlowMapModel, TrainConfig};
use chaosflow::rollout::predict_along;

fn main() -> chaosflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n_m = args.first().copied().unwrap_or(10);
    let epochs = args.get(1).copied().unwrap_or(500);

    let system = SystemSpec::lorenz63();
    let obs = ObservationSpec::new(vec![0, 1]);
    let train_traj = project_observed(&integrate(&system, &[1.0, 1.0, 1.0], 0.01, 100_000, 10)?, &obs)?;
    let test_traj = project_observed(&integrate(&system, &[10.0, 10.0, 20.0], 0.01, 5000, 10)?, &obs)?;

    let spec = DatasetSpec { m_sequences: 2000, memory_len: n_m, recurrent_len: 5, seed: 2, normalize: false };
    let cfg = TrainConfig {
        epochs,
        batch_size: 50,
        learning_rate: 1e-3,
        recurrent_len: 5,
        seed: 2,
        shuffle: true,
        select_best: true,
    };
    let model = FlowMapModel::init(2, n_m, &[20, 20, 20], 2)?;
    let outcome = train(model, &sample_sequences(&train_traj, &spec)?, &cfg)?;
    println!("memory {n_m}, final loss {:.4}", outcome.loss_history.last().unwrap());

    let run = predict_along(&outcome.model, &test_traj)?;
    if let Some(step) = run.diverged_at {
        println!("rollout diverged at step {step}; statistics are not meaningful");
        return Ok(());
    }
    let mut metrics = MetricsConfig::for_system(2);
    metrics.corr_dim.n_points = 2000;
    let ((r, _), (p, _)) = evaluate_pair(&test_traj, &run.predicted, &metrics)?;
    print!("{}", compare_reports(&r, &p)?.to_text());
    Ok(())
}
