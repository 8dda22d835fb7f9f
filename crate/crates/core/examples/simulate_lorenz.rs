//! Integrates Lorenz 63 or Lorenz 96 and writes the trajectory as text.
//!
//! `cargo run --release --example simulate_lorenz -- [l63|l96] [steps] [out.csv]`

use chaosflow::dynamics::{integrate, SystemSpec};

fn main() -> chaosflow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let which = args.first().map_or("l63", String::as_str);
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let (system, x0) = match which {
        "l96" => {
            let mut x0 = vec![8.0; 40];
            x0[0] += 0.01;
            (SystemSpec::lorenz96(40), x0)
        }
        _ => (SystemSpec::lorenz63(), vec![1.0, 1.0, 1.0]),
    };
    let traj = integrate(&system, &x0, 0.01, steps, 10)?;

    let env = traj.abs_envelope();
    println!("{} rows × {} columns, t ∈ [0, {}]", traj.len(), traj.dim(), traj.time(traj.len() - 1));
    for (j, label) in traj.labels().iter().enumerate().take(5) {
        let col = traj.column(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        println!("{label:>4}: mean {mean:>8.3}, max |x| {:>7.3}", env[j]);
    }
    match args.get(2) {
        Some(path) => {
            traj.save(std::path::Path::new(path))?;
            println!("wrote {path} (fingerprint {})", &traj.fingerprint()[..16]);
        }
        None => println!("final state (first columns) {:?}", &traj.row(traj.len() - 1)[..traj.dim().min(5)]),
    }
    Ok(())
}
