//! Invariants checked over random inputs through the public API.

use chaosflow::chaostats::{
    approximate_entropy, compare_reports, correlation_integral, delay_embed_series, evaluate_pair, ApEnConfig,
    EmbeddingSpec, MetricsConfig,
};
use chaosflow::dataset::{sample_offsets, sample_sequences, DatasetSpec};
use chaosflow::dynamics::{integrate, lorenz63_rhs, lorenz96_rhs, Lorenz63Params, Lorenz96Params, SystemSpec};
use chaosflow::flownet::{loss_gradient, recurrent_rollout, FlowMapModel};
use chaosflow::rollout::predict;
use chaosflow::Trajectory;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(m: usize, n_m: usize, hidden: &[usize], seed: u64) -> FlowMapModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = FlowMapModel::zeros(m, n_m, hidden).unwrap();
    for p in model.params_mut() {
        *p = rng.random_range(-0.6..0.6);
    }
    model
}

fn random_traj(rows: usize, dim: usize, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..rows * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    Trajectory::with_default_labels(0.01, 0.0, dim, states).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lorenz96_rhs_commutes_with_rotation(n in 4usize..16, shift in 0usize..16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p = Lorenz96Params { n, ..Default::default() };
        let j = shift % n;
        let mut rotated = x.clone();
        rotated.rotate_right(j);
        let mut expected = lorenz96_rhs(&x, &p).unwrap();
        expected.rotate_right(j);
        prop_assert_eq!(lorenz96_rhs(&rotated, &p).unwrap(), expected);
    }

    #[test]
    fn integration_is_deterministic(x in -15.0f64..15.0, y in -15.0f64..15.0, z in 5.0f64..40.0) {
        let sys = SystemSpec::lorenz63();
        let a = integrate(&sys, &[x, y, z], 0.01, 200, 4).unwrap();
        let b = integrate(&sys, &[x, y, z], 0.01, 200, 4).unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn windows_are_exact_slices(rows in 20usize..80, dim in 1usize..4, n_m in 0usize..4, k in 1usize..4, seed in any::<u64>()) {
        let traj = random_traj(rows, dim, seed);
        let spec = DatasetSpec { m_sequences: 25, memory_len: n_m, recurrent_len: k, seed, normalize: false };
        let ds = sample_sequences(&traj, &spec).unwrap();
        let offsets = sample_offsets(rows, &spec).unwrap();
        prop_assert_eq!(ds.len(), offsets.len());
        for (seq, &o) in ds.iter().zip(&offsets) {
            prop_assert_eq!(seq, traj.slice_rows(o, spec.sequence_len()));
        }
        prop_assert_eq!(ds.to_bytes().unwrap(), sample_sequences(&traj, &spec).unwrap().to_bytes().unwrap());
    }

    #[test]
    fn zero_model_extends_the_newest_state(m in 1usize..4, n_m in 0usize..4, k in 1usize..6, seed in any::<u64>()) {
        let model = FlowMapModel::zeros(m, n_m, &[5, 3]).unwrap();
        let window = random_traj(n_m + 1, m, seed).states().to_vec();
        let out = recurrent_rollout(&model, &window, k).unwrap();
        let newest = &window[n_m * m..];
        for row in out.chunks(m) {
            prop_assert_eq!(row, newest);
        }
    }

    #[test]
    fn memoryless_rollout_is_the_plain_resnet_recursion(m in 1usize..4, k in 1usize..8, seed in any::<u64>()) {
        let model = random_model(m, 0, &[6, 6], seed);
        let z0 = random_traj(1, m, seed ^ 1).states().to_vec();
        let out = recurrent_rollout(&model, &z0, k).unwrap();
        let mut z = z0;
        for row in out.chunks(m) {
            let step = model.net_forward(&z, None).unwrap();
            z = z.iter().zip(&step).map(|(a, b)| a + b).collect();
            prop_assert_eq!(row, &z[..]);
        }
    }

    #[test]
    fn batch_order_does_not_change_the_step(batch in 2usize..12, seed in any::<u64>()) {
        let (m, n_m, k) = (2, 1, 3);
        let model = random_model(m, n_m, &[4, 4], seed);
        let data = random_traj(batch * (n_m + k + 1), m, seed ^ 7);
        let seqs: Vec<&[f64]> = data.states().chunks(m * (n_m + k + 1)).collect();
        let mut shuffled = seqs.clone();
        shuffled.reverse();
        shuffled.rotate_left(seed as usize % batch);
        let (la, ga) = loss_gradient(&model, &seqs).unwrap();
        let (lb, gb) = loss_gradient(&model, &shuffled).unwrap();
        prop_assert!((la - lb).abs() <= 1e-12 * la.abs().max(1.0));
        for (a, b) in ga.iter().zip(&gb) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn checkpoint_reload_reproduces_outputs(m in 1usize..4, n_m in 0usize..3, seed in any::<u64>()) {
        let model = random_model(m, n_m, &[7, 5], seed);
        let back = FlowMapModel::from_checkpoint_bytes(&model.to_checkpoint_bytes().unwrap()).unwrap();
        let window = random_traj(n_m + 1, m, seed ^ 3).states().to_vec();
        let a = recurrent_rollout(&model, &window, 5).unwrap();
        let b = recurrent_rollout(&back, &window, 5).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn prediction_composes(a in 1usize..20, b in 1usize..20, n_m in 0usize..3, seed in any::<u64>()) {
        let model = random_model(2, n_m, &[6], seed);
        let seed_traj = random_traj(n_m + 1, 2, seed ^ 5);
        let full = predict(&model, &seed_traj, a + b).unwrap();
        let first = predict(&model, &seed_traj, a).unwrap();
        let cont_seed = Trajectory::with_default_labels(0.01, 0.0, 2, first.final_window()).unwrap();
        let second = predict(&model, &cont_seed, b).unwrap();
        let w = n_m + 1;
        let mut joined = first.predicted.states().to_vec();
        joined.extend_from_slice(&second.predicted.states()[w * 2..]);
        prop_assert_eq!(full.predicted.states(), &joined[..]);
    }

    #[test]
    fn embedding_row_count(len in 10usize..200, dim in 1usize..5, lag in 1usize..5) {
        let series: Vec<f64> = (0..len).map(|i| (i as f64 * 0.3).sin()).collect();
        let spec = EmbeddingSpec::new(dim, lag);
        let span = (dim - 1) * lag;
        match delay_embed_series(&series, spec) {
            Ok(e) => prop_assert_eq!(e.len(), len - span),
            Err(_) => prop_assert!(len <= span),
        }
    }

    #[test]
    fn correlation_integral_is_a_cdf(n in 5usize..60, seed in any::<u64>()) {
        let traj = random_traj(n, 2, seed);
        let emb = delay_embed_series(&traj.column(0), EmbeddingSpec::new(2, 1)).unwrap();
        let radii: Vec<f64> = (1..=30).map(|i| i as f64 * 0.5).collect();
        let c = correlation_integral(&emb, &radii);
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        // The infinity-norm diameter is at most 10 for points in [-5, 5).
        prop_assert_eq!(*c.last().unwrap(), 1.0);
    }

    #[test]
    fn apen_of_a_constant_is_zero(value in -100.0f64..100.0, len in 20usize..200) {
        let s = vec![value; len];
        let v = approximate_entropy(&[&s], EmbeddingSpec::new(2, 1), &ApEnConfig::default()).unwrap();
        prop_assert_eq!(v, 0.0);
    }
}

#[test]
fn equilibria_have_zero_velocity() {
    let p = Lorenz63Params::default();
    let c = (p.beta * (p.rho - 1.0)).sqrt();
    for x in [[0.0, 0.0, 0.0], [c, c, p.rho - 1.0], [-c, -c, p.rho - 1.0]] {
        let v = lorenz63_rhs(x, &p);
        assert!(v.iter().map(|a| a * a).sum::<f64>().sqrt() < 1e-12, "{v:?}");
    }
    let p = Lorenz96Params::default();
    let v = lorenz96_rhs(&vec![p.forcing; p.n], &p).unwrap();
    assert!(v.iter().map(|a| a * a).sum::<f64>().sqrt() < 1e-12);
}

#[test]
fn offsets_cover_uniformly() {
    // 10 valid offsets, 20,000 draws: chi-square with 9 degrees of freedom, 1% critical value 21.67.
    let spec = DatasetSpec { m_sequences: 20_000, memory_len: 1, recurrent_len: 1, seed: 11, normalize: false };
    let offsets = sample_offsets(12, &spec).unwrap();
    let mut counts = [0usize; 10];
    for o in offsets {
        counts[o] += 1;
    }
    let expected = 2000.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 21.67, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn comparison_detects_mismatch_both_ways() {
    let sys = SystemSpec::lorenz63();
    let a = integrate(&sys, &[1.0, 1.0, 1.0], 0.01, 1500, 5).unwrap();
    let b = integrate(&sys, &[-3.0, 2.0, 30.0], 0.01, 1500, 5).unwrap();
    let mut cfg = MetricsConfig::for_system(3);
    cfg.corr_dim.n_points = 400;
    cfg.lyapunov.k_max = 20;

    let ((ra, _), (ra2, _)) = evaluate_pair(&a, &a, &cfg).unwrap();
    let same = compare_reports(&ra, &ra2).unwrap();
    assert!(same.rows.iter().all(|r| r.relative_error == Some(0.0)));

    let ((ra, _), (rb, _)) = evaluate_pair(&a, &b, &cfg).unwrap();
    let ab = compare_reports(&ra, &rb).unwrap();
    let ba = compare_reports(&rb, &ra).unwrap();
    for (x, y) in ab.rows.iter().zip(&ba.rows) {
        assert!(x.relative_error.unwrap() > 0.0 && y.relative_error.unwrap() > 0.0, "{x:?} {y:?}");
    }
    assert_eq!(ab.acf_max_abs_diff, ba.acf_max_abs_diff);
    assert_eq!(ab.histogram_max_abs_diff, ba.histogram_max_abs_diff);
}
