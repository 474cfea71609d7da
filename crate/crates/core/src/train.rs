//! Batch assembly and the pretraining driver.

use crate::autodiff::{Optimizer, OptimizerConfig, OptimizerKind, Tensor};
use crate::env::Scenario;
use crate::estimator::LengthExample;
use crate::geometry::State;
use crate::planner::path_cost;
use crate::sampler::{ModelError, ModelExample, SamplerModel};
use crate::seed::{self, tag};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One collected demonstration: a scenario and a feasible path through it.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub scenario: Scenario,
    pub path: Vec<State>,
}

/// Normalized point cloud for a scenario at the requested size.
pub fn scenario_cloud(scenario: &Scenario, n_points: usize) -> Tensor {
    scenario
        .point_cloud(n_points)
        .normalized(&scenario.workspace.bounds)
}

/// Builds a sampler training example. A reversed presentation walks the
/// path backwards and conditions on the original start as its destination.
pub fn model_example(
    scenario: &Scenario,
    path: &[State],
    reversed: bool,
    cloud: &Tensor,
) -> ModelExample {
    let space = &scenario.space;
    let goal = if reversed { &scenario.start } else { &scenario.goal };
    let seq: Vec<Vec<f64>> = if reversed {
        path.iter().rev().map(|s| space.normalize_for_model(s)).collect()
    } else {
        path.iter().map(|s| space.normalize_for_model(s)).collect()
    };
    ModelExample {
        cloud: cloud.clone(),
        goal: space.normalize_for_model(goal),
        path: seq,
    }
}

/// Builds an estimator training example with the matching orientation.
pub fn length_example(
    scenario: &Scenario,
    c_real: f64,
    reversed: bool,
    cloud: &Tensor,
) -> LengthExample {
    let space = &scenario.space;
    let (s, g) = if reversed {
        (&scenario.goal, &scenario.start)
    } else {
        (&scenario.start, &scenario.goal)
    };
    LengthExample {
        cloud: cloud.clone(),
        start: space.normalize_for_model(s),
        goal: space.normalize_for_model(g),
        c_real,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub iterations: u64,
    pub batch: usize,
    pub lr: f64,
    pub plain_sgd: bool,
    pub reverse_prob: f64,
    pub point_cloud_size: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            iterations: 2000,
            batch: 16,
            lr: 1e-3,
            plain_sgd: false,
            reverse_prob: 0.5,
            point_cloud_size: crate::env::DEFAULT_POINT_CLOUD_SIZE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainLogRow {
    pub iteration: u64,
    pub loss: f64,
}

/// Teacher-forced negative log-likelihood pretraining over collected paths.
pub fn pretrain_sampler(
    model: &mut SamplerModel,
    samples: &[TrainSample],
    config: &PretrainConfig,
) -> Result<Vec<PretrainLogRow>, ModelError> {
    assert!(!samples.is_empty(), "pretraining needs at least one path");
    for s in samples {
        assert!(s.path.len() >= 2, "paths must contain at least two states");
        assert_eq!(s.scenario.space.tag(), model.config.space);
    }
    let clouds: Vec<Tensor> = samples
        .iter()
        .map(|s| scenario_cloud(&s.scenario, config.point_cloud_size))
        .collect();
    let opt_config = if config.plain_sgd {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            ..OptimizerConfig::sgd(config.lr)
        }
    } else {
        OptimizerConfig::adam(config.lr)
    };
    let mut opt = Optimizer::new(opt_config, &model.params);
    let mut rng = seed::rng_for(config.seed, &[tag::TRAIN]);
    let mut log = Vec::with_capacity(config.iterations as usize);
    for iteration in 0..config.iterations {
        let batch: Vec<ModelExample> = (0..config.batch)
            .map(|_| {
                let i = rng.random_range(0..samples.len());
                let reversed = rng.random_range(0.0..1.0) < config.reverse_prob;
                model_example(&samples[i].scenario, &samples[i].path, reversed, &clouds[i])
            })
            .collect();
        let (loss, grads) = model.nll_loss_grad(&batch)?;
        opt.step(&mut model.params, &grads);
        log.push(PretrainLogRow { iteration, loss });
    }
    Ok(log)
}

/// Measured length of a demonstration path under the scenario metric.
pub fn measured_length(scenario: &Scenario, path: &[State]) -> f64 {
    path_cost(&scenario.space, path)
}
