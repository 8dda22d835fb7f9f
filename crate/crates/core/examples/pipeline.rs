//! Runs every pipeline stage for a preset and prints the comparison table.
//!
//! `cargo run --release --example pipeline -- [preset] [out_dir]`
//!
//! Defaults to a seconds-long smoke version of `ex1-desk`; pass a preset name to run it in full.

use std::path::PathBuf;

use chaosflow::pipeline::{preset, run_all, smoke_preset, COMPARISON_TEXT};

fn main() -> chaosflow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match args.first() {
        Some(name) => preset(name),
        None => smoke_preset("ex1-desk"),
    }
    .ok_or_else(|| chaosflow::Error::InvalidConfig(vec![format!("unknown preset {:?}", args[0])]))?;
    let out = args.get(1).map_or_else(|| std::env::temp_dir().join("chaosflow-example"), PathBuf::from);

    let manifests = run_all(&cfg, &out, &mut |line| println!("  {line}"))?;
    for m in &manifests {
        println!("{:<13} {:>8.2} s", m.stage.name(), m.wall_time_s);
    }
    print!("\n{}", std::fs::read_to_string(out.join(COMPARISON_TEXT))?);
    println!("artifacts in {}", out.display());
    Ok(())
}
