use super::*;
use crate::dataset::{generate_trajectories, GenerationConfig, Preset, Split};
use crate::ffno::FfnoConfig;
use crate::spectral::Grid2;

fn toy(train: usize) -> TrajectoryDataset {
    let mut cfg = GenerationConfig::preset(Preset::TorusKochkov, 11);
    cfg.solver = cfg.solver.with_grid(Grid2::two_pi(16).unwrap());
    cfg.solver.dt = 0.02;
    cfg.solver.nu = 1e-2;
    cfg.frames = 6;
    cfg.record_dt = 0.2;
    cfg.burn_in = 0.4;
    cfg.train = train;
    generate_trajectories(&cfg, Split::Train).unwrap()
}

fn small_model(seed: u64) -> FfnoModel {
    FfnoModel::init(FfnoConfig::new(2, 6, 4), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn short_cfg(steps: usize) -> TrainConfig {
    let mut c = TrainConfig::new(steps, 5);
    c.warmup_steps = steps / 10;
    c.batch_size = 4;
    c
}

#[test]
fn pairs_stay_inside_trajectories() {
    let ds = toy(3);
    let pairs = make_training_pairs(&ds);
    assert_eq!(pairs.len(), 3 * 5);
    assert!(pairs.iter().all(|p| p.t + 1 < ds.frames && p.trajectory < 3));
    assert_eq!(shuffled_pairs(&pairs, 9, 2), shuffled_pairs(&pairs, 9, 2));
    assert_ne!(shuffled_pairs(&pairs, 9, 2), shuffled_pairs(&pairs, 9, 3));
    let mut sorted = shuffled_pairs(&pairs, 9, 2);
    sorted.sort_by_key(|p| (p.trajectory, p.t));
    assert_eq!(sorted, pairs);
}

#[test]
fn batches_cover_each_epoch_once() {
    let pairs: Vec<Pair> = (0..10).map(|t| Pair { trajectory: 0, t }).collect();
    let mut seen: Vec<Pair> = (0..5).flat_map(|s| batch_for_step(&pairs, 2, 1, s)).collect();
    seen.sort_by_key(|p| p.t);
    assert_eq!(seen, pairs);
    // batch 3 straddles the end of epoch 0
    assert_eq!(batch_for_step(&pairs, 3, 1, 3)[0], shuffled_pairs(&pairs, 1, 0)[9]);
}

#[test]
fn zero_rate_and_noise_leave_weights_unchanged() {
    let ds = toy(2);
    let data = TrainingData::new(&ds, Default::default()).unwrap();
    let mut model = small_model(1);
    let before = model.clone();
    let mut cfg = short_cfg(10);
    cfg.peak_lr = 0.0;
    cfg.noise_std = 0.0;
    let mut state = AdamState::zeros_like(model.params());
    let batch = batch_for_step(&data.pairs, 4, 5, 3);
    let loss = train_step(&mut model, &mut state, &data, &batch, &cfg, 3).unwrap();
    assert!(loss.is_finite() && loss > 0.0);
    assert_eq!(model, before);
}

#[test]
fn non_finite_loss_is_reported_with_step() {
    let ds = toy(2);
    let data = TrainingData::new(&ds, Default::default()).unwrap();
    let mut model = small_model(1);
    model.param_mut("proj.b2").unwrap().data_mut()[0] = 1e308;
    model.param_mut("proj.w2").unwrap().data_mut().iter_mut().for_each(|v| *v = 1e308);
    let mut state = AdamState::zeros_like(model.params());
    let batch = batch_for_step(&data.pairs, 2, 5, 0);
    let err = train_step(&mut model, &mut state, &data, &batch, &short_cfg(10), 7).unwrap_err();
    assert!(matches!(err, TrainError::NonFiniteLoss { step: 7 }), "{err}");
}

#[test]
fn smoothed_loss_decreases() {
    let ds = toy(2);
    let data = TrainingData::new(&ds, Default::default()).unwrap();
    let ckpt = Checkpoint::new(small_model(2), data.norm.clone(), short_cfg(200));
    let mut losses = Vec::new();
    train(ckpt, &ds, 200, |r| losses.push(r.loss)).unwrap();
    let head: f64 = losses[..20].iter().sum::<f64>() / 20.0;
    let tail: f64 = losses[180..].iter().sum::<f64>() / 20.0;
    assert!(tail < head, "{head} -> {tail}");
}

#[test]
fn resume_is_bit_identical() {
    let ds = toy(2);
    let data = TrainingData::new(&ds, Default::default()).unwrap();
    let fresh = || Checkpoint::new(small_model(3), data.norm.clone(), short_cfg(24));
    let mut straight = Vec::new();
    let full = train(fresh(), &ds, 24, |r| straight.push(r.loss.to_bits())).unwrap();

    let mut split = Vec::new();
    let half = train(fresh(), &ds, 12, |r| split.push(r.loss.to_bits())).unwrap();
    let reloaded = Checkpoint::from_bytes(&half.to_bytes().unwrap()).unwrap();
    assert_eq!(reloaded, half);
    assert_eq!(reloaded.rng_state().next_step, 12);
    let resumed = train(reloaded, &ds, 24, |r| split.push(r.loss.to_bits())).unwrap();

    assert_eq!(straight, split);
    assert_eq!(resumed, full);
}

#[test]
fn prediction_path_is_noise_free() {
    let ds = toy(2);
    let data = TrainingData::new(&ds, Default::default()).unwrap();
    let model = small_model(4);
    let meta = &ds.trajectories[0];
    let ctx = FrameContext { nu: meta.viscosity, forcing: &meta.forcing, t: ds.frame_time(0) };
    let a = predict_next(&model, &data.norm, &ds.frame_field(0, 0), &ctx).unwrap();
    let b = predict_next(&model, &data.norm, &ds.frame_field(0, 0), &ctx).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_validation() {
    assert!(TrainConfig::new(2000, 1).validate().is_ok());
    assert!(TrainConfig::new(400, 1).validate().is_err());
    let mut c = TrainConfig::new(2000, 1);
    c.betas = [0.9, 1.0];
    assert!(c.validate().is_err());
    let parsed: TrainConfig = serde_json::from_str(r#"{"steps": 1000, "seed": 3}"#).unwrap();
    assert_eq!(parsed, TrainConfig::new(1000, 3));
    assert!(serde_json::from_str::<TrainConfig>(r#"{"steps": 1000}"#).is_err());
}
