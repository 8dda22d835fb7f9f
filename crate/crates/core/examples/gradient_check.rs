//! Compares the analytic recurrent-loss gradient with central differences.
//!
//! `cargo run --example gradient_check`

use chaosflow::flownet::{loss_gradient, recurrent_loss, FlowMapModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chaosflow::Result<()> {
    let (m, n_m, k) = (2, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut model = FlowMapModel::init(m, n_m, &[6, 6], 7)?;
    for p in model.params_mut() {
        *p += rng.random_range(-0.1..0.1);
    }
    let data: Vec<f64> = (0..4 * m * (n_m + k + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let batch: Vec<&[f64]> = data.chunks(m * (n_m + k + 1)).collect();

    let (loss, grad) = loss_gradient(&model, &batch)?;
    println!("loss {loss:.6}, {} parameters", grad.len());
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (i, &g) in grad.iter().enumerate() {
        let p = model.params()[i];
        model.params_mut()[i] = p + h;
        let up = recurrent_loss(&model, &batch)?;
        model.params_mut()[i] = p - h;
        let down = recurrent_loss(&model, &batch)?;
        model.params_mut()[i] = p;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    println!("max relative error vs finite differences: {worst:.2e}");
    Ok(())
}
