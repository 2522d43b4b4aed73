//! Adam over flat `f32` parameter buffers with `f64` moment estimates.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One bias-corrected update. Every parameter's moments decay, including
    /// those with a zero gradient this step.
    pub fn step(&mut self, params: &mut [f32], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let step = lr * c2.sqrt() / c1;
        let eps_hat = eps * c2.sqrt();
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p = (*p as f64 - step * *m / (v.sqrt() + eps_hat)) as f32;
        }
    }
}

/// Tracks the best validation checkpoint: higher NDCG@10 wins, an equal
/// NDCG@10 is broken by lower validation loss. Counts non-improving
/// validations for early stopping.
#[derive(Clone, Debug)]
pub struct BestTracker<T> {
    best: Option<(f64, f64, usize, T)>,
    stale: usize,
}

impl<T> Default for BestTracker<T> {
    fn default() -> Self {
        Self { best: None, stale: 0 }
    }
}

impl<T> BestTracker<T> {
    /// Offers a candidate; returns true if it became the new best.
    /// `snapshot` is only called when it does.
    pub fn offer(&mut self, ndcg: f64, loss: f64, epoch: usize, snapshot: impl FnOnce() -> T) -> bool {
        let better = match &self.best {
            None => true,
            Some((b_ndcg, b_loss, _, _)) => {
                ndcg > b_ndcg + 1e-12 || ((ndcg - b_ndcg).abs() <= 1e-12 && loss < *b_loss)
            }
        };
        if better {
            self.best = Some((ndcg, loss, epoch, snapshot()));
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        better
    }

    pub fn stale(&self) -> usize {
        self.stale
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.2)
    }

    /// (ndcg, loss, epoch, value)
    pub fn into_best(self) -> Option<(f64, f64, usize, T)> {
        self.best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction the first step is lr * sign(g).
        let mut p = [1.0f32, -1.0, 0.5];
        let mut opt = Adam::new(3, AdamConfig::with_lr(0.1));
        opt.step(&mut p, &[2.0, -3.0, 0.0]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
        assert_eq!(p[2], 0.5);
    }

    #[test]
    fn tracker_prefers_ndcg_then_loss() {
        let mut t = BestTracker::default();
        assert!(t.offer(0.5, 1.0, 1, || 1));
        assert!(!t.offer(0.4, 0.1, 2, || 2));
        assert!(t.offer(0.5, 0.9, 3, || 3));
        assert!(!t.offer(0.5, 0.95, 4, || 4));
        assert_eq!(t.stale(), 1);
        assert!(t.offer(0.6, 5.0, 5, || 5));
        assert_eq!(t.stale(), 0);
        assert_eq!(t.into_best().unwrap().3, 5);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = [5.0f32, -3.0];
        let mut opt = Adam::new(2, AdamConfig::with_lr(0.05));
        for _ in 0..2000 {
            let g = [2.0 * (p[0] as f64 - 1.0), 2.0 * (p[1] as f64 + 2.0)];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
        assert!((p[1] + 2.0).abs() < 1e-3);
    }
}
