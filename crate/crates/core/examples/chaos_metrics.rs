//! Chaos statistics of a Lorenz 63 trajectory.
//!
//! `cargo run --release --example chaos_metrics -- [steps] [x0 y0 z0]`

use chaosflow::chaostats::{evaluate, MetricsConfig};
use chaosflow::dynamics::{integrate, SystemSpec};

fn main() -> chaosflow::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let steps = args.first().map_or(10_000, |&v| v as usize);
    let x0 = if args.len() >= 4 { args[1..4].to_vec() } else { vec![10.0, 10.0, 20.0] };

    let system = SystemSpec::lorenz63();
    let traj = integrate(&system, &x0, 0.01, steps, 10)?;
    let (report, diag) = evaluate(&traj, &MetricsConfig::for_system(3), None)?;

    let show = |name: &str, m: &chaosflow::chaostats::Metric| match (m.value, &m.reason) {
        (Some(v), _) => println!("{name:<24} {v:.4}"),
        (None, Some(r)) => println!("{name:<24} n/a ({r})"),
        (None, None) => println!("{name:<24} n/a"),
    };
    println!("{} samples, dt = {}", report.n_samples, report.dt);
    show("correlation dimension", &report.corr_dim);
    show("approximate entropy", &report.approx_entropy);
    show("lyapunov exponent", &report.lyapunov);
    println!("lyapunov min separation  {:?}", report.configs.lyapunov.min_separation);
    for (label, h) in report.labels.iter().zip(&report.histogram) {
        let m = h.mode_bin();
        println!("{label} histogram mode      [{:.2}, {:.2})", h.edges[m], h.edges[m + 1]);
    }
    println!("\nlog R, log C(R)");
    for (r, c) in diag.log_r.iter().zip(&diag.log_c) {
        println!("{r:>8.3} {c:>8.3}");
    }
    Ok(())
}
