//! The fine-tuning loop: collect with an epsilon-greedy planner mix, weight
//! buffered solutions against the estimator's predictions, and take one
//! gradient step on each network per iteration.

use super::buffer::{DemoSource, DemonstrationRecord, ReplayBuffer};
use super::{anneal_k, quality_weight, WsilConfig};
use crate::autodiff::{Optimizer, OptimizerConfig, Tensor};
use crate::env::Scenario;
use crate::estimator::EstimatorModel;
use crate::planner::{bi_rrt_star, rrt, LearnedSampler, PlannerConfig, UniformSampler};
use crate::sampler::{ModelError, SamplerModel};
use crate::seed::{self, tag};
use crate::train::{length_example, measured_length, model_example, scenario_cloud};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WsilRunError {
    #[error("the scenario set is empty")]
    EmptyScenarioSet,
    #[error("restored buffer record points at unknown scenario {0}")]
    BadRestoredRecord(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One logged iteration. When the buffer was still empty the gradient step
/// is skipped and the loss/weight fields are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsilLogRow {
    pub iteration: u64,
    pub epsilon: f64,
    pub k: f64,
    pub buffer_len: usize,
    pub success: bool,
    pub mean_weight: f64,
    /// Smallest and largest quality weight in the minibatch (NaN when
    /// skipped); not part of the CSV schema.
    pub min_weight: f64,
    pub max_weight: f64,
    pub sampler_loss: f64,
    pub estimator_loss: f64,
    pub skipped: bool,
}

/// Runs the fine-tuning loop, mutating both models in place. Returns the
/// per-iteration log and the final buffer. Deterministic for a fixed master
/// seed. `initial_buffer` resumes from a previous run's dump; its records
/// re-queue in order under the configured capacity.
pub fn run_wsil(
    scenarios: &[Scenario],
    sampler: &mut SamplerModel,
    estimator: &mut EstimatorModel,
    wsil_config: &WsilConfig,
    planner_config: &PlannerConfig,
    master_seed: u64,
    initial_buffer: Option<ReplayBuffer>,
) -> Result<(Vec<WsilLogRow>, ReplayBuffer), WsilRunError> {
    wsil_config.validate();
    if scenarios.is_empty() {
        return Err(WsilRunError::EmptyScenarioSet);
    }
    for sc in scenarios {
        if sc.space.tag() != sampler.config.space {
            return Err(ModelError::SpaceMismatch {
                model: sampler.config.space,
                scenario: sc.space.tag(),
            }
            .into());
        }
    }

    let clouds: Vec<Tensor> = scenarios
        .iter()
        .map(|sc| scenario_cloud(sc, wsil_config.point_cloud_size))
        .collect();
    let mut opt_sampler = Optimizer::new(
        OptimizerConfig::adam(wsil_config.sampler_lr),
        &sampler.params,
    );
    let mut opt_estimator = Optimizer::new(
        OptimizerConfig::adam(wsil_config.estimator_lr),
        &estimator.params,
    );
    let mut buffer = ReplayBuffer::new(wsil_config.buffer_capacity);
    if let Some(prev) = initial_buffer {
        for record in prev.iter() {
            if record.scenario_id >= scenarios.len() {
                return Err(WsilRunError::BadRestoredRecord(record.scenario_id));
            }
            buffer.push(record.clone());
        }
    }
    let mut rng = seed::rng_for(master_seed, &[tag::TRAIN, 1]);
    let mut k = wsil_config.k0;
    let mut log = Vec::with_capacity(wsil_config.total_iterations as usize);

    for i in 0..wsil_config.total_iterations {
        let epsilon = wsil_config.epsilon(i);
        let scenario_id = rng.random_range(0..scenarios.len());
        let scenario = &scenarios[scenario_id];
        let use_learned = rng.random_range(0.0..1.0) > epsilon;
        let mut plan_rng = seed::rng_for(master_seed, &[tag::PLAN, i]);

        let (result, source) = if use_learned {
            let z_p = sampler.encode_state_space(&clouds[scenario_id]);
            let mut fwd = LearnedSampler::with_cached_latents(
                sampler,
                scenario,
                &scenario.goal,
                z_p.clone(),
            )?;
            let mut bwd =
                LearnedSampler::with_cached_latents(sampler, scenario, &scenario.start, z_p)?;
            (
                bi_rrt_star(scenario, &mut fwd, &mut bwd, planner_config, &mut plan_rng),
                DemoSource::SilRrtStar,
            )
        } else {
            let mut uniform =
                UniformSampler::new(scenario.goal.clone(), planner_config.goal_bias);
            (
                rrt(scenario, &mut uniform, planner_config, &mut plan_rng),
                DemoSource::Rrt,
            )
        };

        let success = result.success;
        if let Some(path) = result.path {
            let c_real = measured_length(scenario, &path);
            buffer.push(DemonstrationRecord {
                scenario_id,
                path,
                c_real,
                source,
            });
        }

        let row = if buffer.is_empty() {
            WsilLogRow {
                iteration: i,
                epsilon,
                k,
                buffer_len: 0,
                success,
                mean_weight: f64::NAN,
                min_weight: f64::NAN,
                max_weight: f64::NAN,
                sampler_loss: f64::NAN,
                estimator_loss: f64::NAN,
                skipped: true,
            }
        } else {
            let indices = buffer.sample_indices(wsil_config.batch, &mut rng);
            let mut batch_model = Vec::with_capacity(indices.len());
            let mut batch_est = Vec::with_capacity(indices.len());
            let mut weights = Vec::with_capacity(indices.len());
            for &idx in &indices {
                let record = buffer.get(idx);
                let sc = &scenarios[record.scenario_id];
                let cloud = &clouds[record.scenario_id];
                let reversed = rng.random_range(0.0..1.0) < wsil_config.reverse_prob;
                let est_ex = length_example(sc, record.c_real, reversed, cloud);
                // the weight uses the estimator as of the start of this
                // iteration, before its own update
                let c_est = estimator.estimate_length(cloud, &est_ex.start, &est_ex.goal);
                weights.push(quality_weight(record.c_real, c_est, k));
                batch_model.push(model_example(sc, &record.path, reversed, cloud));
                batch_est.push(est_ex);
            }
            let (sampler_loss, grads) = sampler.weighted_nll_loss_grad(
                &batch_model,
                &weights,
                wsil_config.lambda_entropy,
            )?;
            opt_sampler.step(&mut sampler.params, &grads);
            let (estimator_loss, egrads) = estimator.mse_loss_grad(&batch_est)?;
            opt_estimator.step(&mut estimator.params, &egrads);
            WsilLogRow {
                iteration: i,
                epsilon,
                k,
                buffer_len: buffer.len(),
                success,
                mean_weight: weights.iter().sum::<f64>() / weights.len() as f64,
                min_weight: weights.iter().cloned().fold(f64::INFINITY, f64::min),
                max_weight: weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                sampler_loss,
                estimator_loss,
                skipped: false,
            }
        };
        log.push(row);
        k = anneal_k(k, i + 1, wsil_config);
    }
    Ok((log, buffer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_scenario, generate_workspace, AgentGeometry};
    use crate::estimator::EstimatorConfig;
    use crate::geometry::SpaceTag;
    use crate::sampler::SamplerConfig;

    fn scenarios(n: usize) -> Vec<Scenario> {
        let bounds = [[0.0, 40.0], [0.0, 40.0]];
        let mut out = Vec::new();
        let mut seed = 100;
        while out.len() < n {
            seed += 1;
            let ws = generate_workspace(seed, &bounds, 3, [1.0, 3.0]).unwrap();
            if let Ok(sc) =
                generate_scenario(seed, ws, SpaceTag::Point2D, AgentGeometry::PointMass, 1.0)
            {
                out.push(sc);
            }
        }
        out
    }

    fn tiny_models() -> (SamplerModel, EstimatorModel) {
        let mut sc = SamplerConfig::for_space(SpaceTag::Point2D);
        sc.d_model = 16;
        sc.latent_len = 4;
        sc.n_heads = 2;
        sc.encoder_self_layers = 1;
        sc.decoder_self_layers = 1;
        let mut ec = EstimatorConfig::for_space(SpaceTag::Point2D);
        ec.d_model = 16;
        ec.latent_len = 4;
        ec.n_heads = 2;
        ec.encoder_self_layers = 1;
        (SamplerModel::init(sc, 1), EstimatorModel::init(ec, 2))
    }

    fn tiny_wsil_config(iterations: u64) -> WsilConfig {
        WsilConfig {
            total_iterations: iterations,
            batch: 4,
            point_cloud_size: 32,
            anneal_every: 10,
            ..WsilConfig::default()
        }
    }

    #[test]
    fn first_iteration_uses_the_uniform_branch() {
        // epsilon(0) = 1.0, so rand() > epsilon can never select the
        // learned planner on iteration 0; with a single iteration the
        // buffer holds at most one record and it must come from RRT.
        let scen = scenarios(3);
        let (mut s, mut e) = tiny_models();
        let cfg = tiny_wsil_config(1);
        let pc = PlannerConfig::default().with_max_samples(400);
        let (log, buffer) = run_wsil(&scen, &mut s, &mut e, &cfg, &pc, 7, None).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(cfg.epsilon(0), 1.0);
        for r in buffer.iter() {
            assert_eq!(r.source, DemoSource::Rrt);
        }
    }

    #[test]
    fn log_shape_and_k_schedule() {
        let scen = scenarios(3);
        let (mut s, mut e) = tiny_models();
        let cfg = tiny_wsil_config(25);
        let pc = PlannerConfig::default().with_max_samples(300);
        let (log, buffer) = run_wsil(&scen, &mut s, &mut e, &cfg, &pc, 8, None).unwrap();
        assert_eq!(log.len(), 25);
        let mut prev_k = f64::INFINITY;
        for (i, row) in log.iter().enumerate() {
            assert_eq!(row.iteration, i as u64);
            assert!(row.k <= prev_k, "K must be monotone non-increasing");
            assert_eq!(row.k, cfg.k_at(i as u64), "K follows the schedule");
            prev_k = row.k;
            if !row.skipped {
                assert!(row.mean_weight > 0.0 && row.mean_weight < 1.0);
                assert!(row.sampler_loss.is_finite());
                assert!(row.estimator_loss.is_finite());
            }
        }
        assert!(buffer.len() <= cfg.buffer_capacity);
    }

    #[test]
    fn failed_queries_add_nothing() {
        // A very tight budget in a cluttered workspace fails most queries;
        // every buffer record must still re-validate.
        let scen = scenarios(2);
        let (mut s, mut e) = tiny_models();
        let cfg = tiny_wsil_config(10);
        let pc = PlannerConfig::default().with_max_samples(3);
        let (log, buffer) = run_wsil(&scen, &mut s, &mut e, &cfg, &pc, 9, None).unwrap();
        let successes = log.iter().filter(|r| r.success).count();
        assert!(buffer.len() <= successes);
        for rec in buffer.iter() {
            let sc = &scen[rec.scenario_id];
            assert!((rec.c_real - measured_length(sc, &rec.path)).abs() < 1e-9);
            for w in rec.path.windows(2) {
                assert!(!crate::env::edge_in_collision(sc, &w[0], &w[1]));
            }
        }
    }

    #[test]
    fn run_is_deterministic_under_a_fixed_seed() {
        let scen = scenarios(2);
        let run = || {
            let (mut s, mut e) = tiny_models();
            let cfg = tiny_wsil_config(6);
            let pc = PlannerConfig::default().with_max_samples(200);
            let (log, _) = run_wsil(&scen, &mut s, &mut e, &cfg, &pc, 11, None).unwrap();
            (log, s.params, e.params)
        };
        let (la, psa, pea) = run();
        let (lb, psb, peb) = run();
        assert_eq!(la, lb);
        assert_eq!(psa, psb);
        assert_eq!(pea, peb);
    }

    #[test]
    fn empty_scenario_set_is_an_error() {
        let (mut s, mut e) = tiny_models();
        let cfg = tiny_wsil_config(1);
        let pc = PlannerConfig::default();
        assert!(matches!(
            run_wsil(&[], &mut s, &mut e, &cfg, &pc, 1, None),
            Err(WsilRunError::EmptyScenarioSet)
        ));
    }
}
