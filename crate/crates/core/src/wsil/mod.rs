//! Weighted self-imitation fine-tuning: epsilon-greedy data collection into
//! a fixed-size FIFO buffer, logistic quality weighting of each stored
//! solution against the estimator's prediction, periodic annealing of the
//! weighting slack K, and joint sampler/estimator updates.

mod buffer;
mod run;

pub use buffer::{DemoSource, DemonstrationRecord, ReplayBuffer};
pub use run::{run_wsil, WsilLogRow, WsilRunError};

use serde::{Deserialize, Serialize};

/// Smallest value the annealed K may reach; keeps late-training weights
/// away from a degenerate all-zero regime.
pub const K_FLOOR: f64 = 1e-3;

/// Exponent clamp so the logistic weight stays strictly inside (0, 1) in
/// 64-bit arithmetic.
const WEIGHT_EXPONENT_CLAMP: f64 = 36.0;

/// Quality weight of a stored solution:
/// `w = 1 / (1 + exp(C_real - C_est - K))`.
///
/// Solutions shorter than predicted weigh close to 1; longer ones decay
/// toward 0. The exponent is clamped so the result never rounds to exactly
/// 0 or 1.
pub fn quality_weight(c_real: f64, c_est: f64, k: f64) -> f64 {
    let x = (c_real - c_est - k).clamp(-WEIGHT_EXPONENT_CLAMP, WEIGHT_EXPONENT_CLAMP);
    1.0 / (1.0 + x.exp())
}

/// Divides K by the annealing divisor at every `anneal_every`-th step
/// (step counting from 1), never dropping below [`K_FLOOR`].
pub fn anneal_k(k: f64, step: u64, config: &WsilConfig) -> f64 {
    assert!(k > 0.0);
    if step > 0 && step % config.anneal_every == 0 {
        (k / config.anneal_divisor).max(K_FLOOR)
    } else {
        k
    }
}

/// Fine-tuning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsilConfig {
    /// Initial weighting slack K, in workspace units.
    pub k0: f64,
    /// Divisor applied to K at each anneal point (> 1).
    pub anneal_divisor: f64,
    /// Steps between anneal points.
    pub anneal_every: u64,
    /// Entropy bonus coefficient.
    pub lambda_entropy: f64,
    /// Minibatch size.
    pub batch: usize,
    pub total_iterations: u64,
    pub buffer_capacity: usize,
    /// Exploration schedule: linear from `epsilon_start` to `epsilon_end`
    /// over the first `epsilon_anneal_frac` of the run, then constant.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_anneal_frac: f64,
    pub sampler_lr: f64,
    pub estimator_lr: f64,
    /// Probability of presenting a drawn record reversed.
    pub reverse_prob: f64,
    /// Points per scenario cloud fed to the models.
    pub point_cloud_size: usize,
}

impl Default for WsilConfig {
    fn default() -> Self {
        WsilConfig {
            k0: 8.0,
            anneal_divisor: 2.0,
            anneal_every: 500,
            lambda_entropy: 1e-3,
            batch: 16,
            total_iterations: 1000,
            buffer_capacity: 2048,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_anneal_frac: 0.5,
            sampler_lr: 1e-4,
            estimator_lr: 1e-3,
            reverse_prob: 0.5,
            point_cloud_size: crate::env::DEFAULT_POINT_CLOUD_SIZE,
        }
    }
}

impl WsilConfig {
    pub fn validate(&self) {
        assert!(self.k0 > 0.0, "K0 must be positive");
        assert!(self.anneal_divisor > 1.0, "anneal divisor must exceed 1");
        assert!(self.anneal_every > 0);
        assert!(self.lambda_entropy >= 0.0);
        assert!(self.batch > 0);
        assert!(self.buffer_capacity > 0);
        assert!((0.0..=1.0).contains(&self.epsilon_start));
        assert!((0.0..=1.0).contains(&self.epsilon_end));
        assert!((0.0..=1.0).contains(&self.epsilon_anneal_frac));
    }

    /// Exploration probability at iteration `i` of `total_iterations`.
    pub fn epsilon(&self, i: u64) -> f64 {
        let horizon = (self.total_iterations as f64 * self.epsilon_anneal_frac).ceil();
        if horizon <= 0.0 || i as f64 >= horizon {
            return self.epsilon_end;
        }
        let t = i as f64 / horizon;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }

    /// Closed form of the K schedule at iteration `i` (0-based): K is
    /// divided once per completed `anneal_every` block.
    pub fn k_at(&self, i: u64) -> f64 {
        let divisions = i / self.anneal_every;
        (self.k0 / self.anneal_divisor.powi(divisions as i32)).max(K_FLOOR)
    }
}
