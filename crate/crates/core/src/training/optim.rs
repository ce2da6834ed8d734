use std::f64::consts::PI;

use super::TrainConfig;
use crate::autodiff::Tensor;

/// Linear warmup from 0 to `peak_lr`, then half-cosine decay to 0 at `steps`.
pub fn cosine_lr(step: usize, cfg: &TrainConfig) -> f64 {
    if step < cfg.warmup_steps {
        return cfg.peak_lr * step as f64 / cfg.warmup_steps as f64;
    }
    let span = cfg.steps.saturating_sub(cfg.warmup_steps).max(1) as f64;
    let progress = ((step - cfg.warmup_steps) as f64 / span).min(1.0);
    cfg.peak_lr * 0.5 * (1.0 + (PI * progress).cos())
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn zeros_like(params: &[Tensor]) -> Self {
        let z: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self { m: z.clone(), v: z }
    }
}

/// Clamps every gradient entry to `[-clip, clip]`.
pub fn clip_by_value(grads: &mut [Tensor], clip: f64) {
    for g in grads {
        g.data_mut().iter_mut().for_each(|v| *v = v.clamp(-clip, clip));
    }
}

/// One bias-corrected Adam step at 0-based `step` with learning rate `lr`,
/// plus the decoupled decay `-lr * weight_decay * theta`.
pub fn adamw_update(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState, cfg: &TrainConfig, step: usize, lr: f64) {
    let [b1, b2] = cfg.betas;
    let t = step as i32 + 1;
    let (c1, c2) = (1.0 - b1.powi(t), 1.0 - b2.powi(t));
    let decay = 1.0 - lr * cfg.weight_decay;
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
        for (((theta, &g), m), v) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let step = (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
            *theta = *theta * decay - lr * step;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig::new(2000, 7)
    }

    #[test]
    fn schedule_shape() {
        let mut c = cfg();
        c.steps = 100_000;
        assert_eq!(cosine_lr(0, &c), 0.0);
        assert_eq!(cosine_lr(500, &c), 2.5e-3);
        assert!(cosine_lr(100_000, &c).abs() < 1e-18);
        let mid = 500 + (100_000 - 500) / 2;
        assert!((cosine_lr(mid, &c) - 1.25e-3).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for s in (500..=100_000).step_by(997) {
            let lr = cosine_lr(s, &c);
            assert!(lr <= prev);
            prev = lr;
        }
        assert!((cosine_lr(250, &c) - 1.25e-3).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut c = cfg();
        c.weight_decay = 0.0;
        let mut p = vec![Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap()];
        let before = p.clone();
        let mut s = AdamState::zeros_like(&p);
        adamw_update(&mut p, &[Tensor::zeros(&[3])], &mut s, &c, 0, 1e-3);
        assert_eq!(p, before);
    }

    #[test]
    fn decay_alone_shrinks_by_closed_form_factor() {
        let c = cfg();
        let mut p = vec![Tensor::new(vec![2], vec![3.0, -1.0]).unwrap()];
        let mut s = AdamState::zeros_like(&p);
        let lr = 2e-3;
        adamw_update(&mut p, &[Tensor::zeros(&[2])], &mut s, &c, 4, lr);
        let f = 1.0 - lr * c.weight_decay;
        assert_eq!(p[0].data(), &[3.0 * f, -1.0 * f]);
    }

    #[test]
    fn scalar_quadratic_converges() {
        let mut c = cfg();
        c.weight_decay = 0.0;
        let mut p = vec![Tensor::scalar(5.0)];
        let mut s = AdamState::zeros_like(&p);
        for step in 0..500 {
            let g = 2.0 * (p[0].item() - 1.5);
            adamw_update(&mut p, &[Tensor::scalar(g)], &mut s, &c, step, 0.05);
        }
        assert!((p[0].item() - 1.5).abs() < 1e-2, "{}", p[0].item());
    }

    #[test]
    fn clipping_bounds_entries() {
        let mut g = vec![Tensor::new(vec![4], vec![0.5, -3.0, 0.05, -0.1]).unwrap()];
        clip_by_value(&mut g, 0.1);
        assert_eq!(g[0].data(), &[0.1, -0.1, 0.05, -0.1]);
        assert!(g[0].max_abs() <= 0.1);
    }
}
