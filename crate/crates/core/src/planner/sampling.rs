//! Pluggable sample sources for the planners.

use super::tree::Tree;
use crate::autodiff::Tensor;
use crate::env::Scenario;
use crate::geometry::State;
use crate::sampler::{sample_next, ModelError, SamplerModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Where the next expansion target comes from.
pub trait SamplerPort {
    fn next_sample(&mut self, tree: &Tree, scenario: &Scenario, rng: &mut ChaCha8Rng) -> State;

    /// Learned samplers fall back to a uniform draw after repeated failed
    /// expansions; the uniform baseline never needs to.
    fn is_learned(&self) -> bool {
        false
    }
}

/// Uniform sampling with a goal bias.
pub struct UniformSampler {
    pub goal: State,
    pub goal_bias: f64,
}

impl UniformSampler {
    pub fn new(goal: State, goal_bias: f64) -> Self {
        UniformSampler { goal, goal_bias }
    }
}

impl SamplerPort for UniformSampler {
    fn next_sample(&mut self, _tree: &Tree, scenario: &Scenario, rng: &mut ChaCha8Rng) -> State {
        if rng.random_range(0.0..1.0) < self.goal_bias {
            self.goal.clone()
        } else {
            scenario.space.sample_uniform(rng)
        }
    }
}

/// Which node sequence conditions the decoder during planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// The branch from the root to the most recently inserted node (the
    /// node about to be extended).
    #[default]
    BranchPrefix,
    /// All tree nodes in insertion order.
    InsertionOrder,
}

/// Samples from the learned next-state distribution, conditioned on the
/// scenario's point-cloud latents and the growing tree.
pub struct LearnedSampler<'a> {
    model: &'a SamplerModel,
    z_p: Tensor,
    goal_norm: Vec<f64>,
    conditioning: Conditioning,
}

impl<'a> LearnedSampler<'a> {
    /// Encodes the scenario point cloud once and caches the latents. `goal`
    /// is the state the tree grows toward (the opposite root for
    /// bidirectional search).
    pub fn new(
        model: &'a SamplerModel,
        scenario: &Scenario,
        goal: &State,
        point_cloud_size: usize,
    ) -> Result<Self, ModelError> {
        if model.config.space != scenario.space.tag() {
            return Err(ModelError::SpaceMismatch {
                model: model.config.space,
                scenario: scenario.space.tag(),
            });
        }
        let cloud = scenario
            .point_cloud(point_cloud_size)
            .normalized(&scenario.workspace.bounds);
        let z_p = model.encode_state_space(&cloud);
        Ok(LearnedSampler {
            model,
            z_p,
            goal_norm: scenario.space.normalize_for_model(goal),
            conditioning: Conditioning::BranchPrefix,
        })
    }

    pub fn with_conditioning(mut self, conditioning: Conditioning) -> Self {
        self.conditioning = conditioning;
        self
    }

    /// Reuses already-computed latents (shared between the two directions
    /// of a bidirectional search).
    pub fn with_cached_latents(
        model: &'a SamplerModel,
        scenario: &Scenario,
        goal: &State,
        z_p: Tensor,
    ) -> Result<Self, ModelError> {
        if model.config.space != scenario.space.tag() {
            return Err(ModelError::SpaceMismatch {
                model: model.config.space,
                scenario: scenario.space.tag(),
            });
        }
        Ok(LearnedSampler {
            model,
            z_p,
            goal_norm: scenario.space.normalize_for_model(goal),
            conditioning: Conditioning::BranchPrefix,
        })
    }
}

impl SamplerPort for LearnedSampler<'_> {
    fn next_sample(&mut self, tree: &Tree, scenario: &Scenario, rng: &mut ChaCha8Rng) -> State {
        let space = &scenario.space;
        let nodes: Vec<Vec<f64>> = match self.conditioning {
            Conditioning::BranchPrefix => tree
                .branch_states(tree.newest())
                .iter()
                .map(|s| space.normalize_for_model(s))
                .collect(),
            Conditioning::InsertionOrder => tree
                .iter()
                .map(|n| space.normalize_for_model(&n.state))
                .collect(),
        };
        let step = self.model.decode_next(&self.z_p, &self.goal_norm, &nodes);
        sample_next(&step, space, rng)
    }

    fn is_learned(&self) -> bool {
        true
    }
}
