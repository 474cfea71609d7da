//! RRT, RRT* and bidirectional RRT* over a pluggable sample source.
//!
//! All planners share the same expansion machinery: draw a sample, steer
//! from the nearest node, collision-check the edge, and (for the starred
//! variants) choose the lowest-cost parent in a shrinking neighbourhood and
//! rewire that neighbourhood through the new node. A query terminates on
//! the first tree node inside the goal region unless the refinement flag
//! keeps it running to the sample budget.

mod bidirectional;
mod search;
mod sampling;
mod tree;

pub use bidirectional::bi_rrt_star;
pub use sampling::{Conditioning, LearnedSampler, SamplerPort, UniformSampler};
pub use search::{rrt, rrt_star};
pub use tree::{extract_path, path_cost, Tree, TreeNode};

use crate::geometry::{SpaceTag, State};
use serde::{Deserialize, Serialize};

/// Default sample budget for learned planners and 2D/rigid uniform RRT*.
pub const DEFAULT_MAX_SAMPLES: u64 = 200;
/// Raised budget for uniform RRT* in 3D.
pub const DEFAULT_MAX_SAMPLES_UNIFORM_3D: u64 = 400;
/// Default steering step, in workspace units.
pub const DEFAULT_STEP_SIZE: f64 = 2.0;
/// Default goal bias for the uniform baseline.
pub const DEFAULT_GOAL_BIAS: f64 = 0.05;
/// Rejected expansions tolerated per accepted sample before a query gives
/// up (keeps every query finite).
pub const ATTEMPT_FACTOR: u64 = 50;
/// Consecutive failed learned expansions before one uniform fallback draw.
pub const LEARNED_FALLBACK_AFTER: u32 = 20;

/// Which sample source a planner configuration is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    Uniform,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub max_samples: u64,
    pub step_size: f64,
    /// Rewiring radius constant in `r(n) = min(step, gamma (ln n / n)^(1/d))`.
    pub gamma_rewire: f64,
    pub goal_bias: f64,
    pub collision_step: f64,
    /// Keep sampling to the budget and return the best goal-region entry
    /// instead of stopping at the first one.
    pub refine_to_budget: bool,
    /// Verify tree invariants after every insertion and rewiring.
    pub audit: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_samples: DEFAULT_MAX_SAMPLES,
            step_size: DEFAULT_STEP_SIZE,
            gamma_rewire: 2.0 * DEFAULT_STEP_SIZE,
            goal_bias: DEFAULT_GOAL_BIAS,
            collision_step: crate::env::DEFAULT_COLLISION_STEP,
            refine_to_budget: false,
            audit: false,
        }
    }
}

impl PlannerConfig {
    /// The evaluation defaults: 200 samples everywhere except uniform RRT*
    /// in 3D, which gets 400.
    pub fn default_for(space: SpaceTag, sampler: SamplerKind) -> Self {
        let max_samples = match (sampler, space) {
            (SamplerKind::Uniform, SpaceTag::Point3D) => DEFAULT_MAX_SAMPLES_UNIFORM_3D,
            _ => DEFAULT_MAX_SAMPLES,
        };
        PlannerConfig {
            max_samples,
            ..PlannerConfig::default()
        }
    }

    pub fn with_max_samples(mut self, max_samples: u64) -> Self {
        self.max_samples = max_samples;
        self
    }

    pub(crate) fn near_radius(&self, n: usize, dim: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let n = n as f64;
        self.step_size
            .min(self.gamma_rewire * (n.ln() / n).powf(1.0 / dim as f64))
    }

    pub(crate) fn max_attempts(&self) -> u64 {
        ATTEMPT_FACTOR * self.max_samples
    }
}

/// A snapshot of one search tree for reporting and rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDump {
    pub states: Vec<State>,
    pub parents: Vec<Option<usize>>,
}

impl From<&Tree> for TreeDump {
    fn from(tree: &Tree) -> Self {
        TreeDump {
            states: tree.iter().map(|n| n.state.clone()).collect(),
            parents: tree.iter().map(|n| n.parent).collect(),
        }
    }
}

/// Outcome of one planning query. Failure is a result, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub success: bool,
    pub path: Option<Vec<State>>,
    pub path_length: f64,
    /// Accepted tree insertions (rejected samples do not count).
    pub samples_generated: u64,
    /// Individual state collision tests, including those inside edge checks.
    pub collision_checks: u64,
    pub wall_time: f64,
    pub trees: Vec<TreeDump>,
}

impl PlanResult {
    pub(crate) fn failure(samples: u64, checks: u64, wall_time: f64, trees: Vec<TreeDump>) -> Self {
        PlanResult {
            success: false,
            path: None,
            path_length: 0.0,
            samples_generated: samples,
            collision_checks: checks,
            wall_time,
            trees,
        }
    }
}
