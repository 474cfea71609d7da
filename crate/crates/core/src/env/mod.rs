//! Workspaces, obstacles, agents, scenarios and point clouds.
//!
//! Obstacles are axis-aligned boxes in the ambient workspace (2D or 3D).
//! A [`Scenario`] binds a workspace, a state space, an agent geometry and a
//! start/goal query; it is the unit of planning work. All types here are
//! immutable after construction and collision queries are read-only.

mod collision;
mod generate;
mod pointcloud;

pub use collision::{edge_in_collision, edge_in_collision_counted, state_in_collision, OrientedRect};
pub use generate::{generate_scenario, generate_workspace, GenerationError};
pub use pointcloud::{distance_to_boundary, sample_surface_point_cloud, PointCloud};

use crate::geometry::{SpaceTag, State, StateSpace};
use crate::seed::{self, tag};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default goal-region radius, in workspace units.
pub const DEFAULT_GOAL_RADIUS: f64 = 1.0;
/// Default number of points in an obstacle-surface point cloud.
pub const DEFAULT_POINT_CLOUD_SIZE: usize = 1000;
/// Default edge collision-check resolution along the metric.
pub const DEFAULT_COLLISION_STEP: f64 = 0.1;
/// Default rigid-body half extents.
pub const DEFAULT_RECT_HALF_W: f64 = 1.0;
pub const DEFAULT_RECT_HALF_H: f64 = 0.5;
/// Default snake link dimensions (three links).
pub const DEFAULT_SNAKE_LINK_LENGTH: f64 = 1.5;
pub const DEFAULT_SNAKE_HALF_WIDTH: f64 = 0.2;
/// Number of snake links.
pub const SNAKE_LINKS: usize = 3;

/// Axis-aligned box obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec<f64>,
    pub half_extents: Vec<f64>,
}

impl Obstacle {
    pub fn new(center: Vec<f64>, half_extents: Vec<f64>) -> Self {
        assert_eq!(center.len(), half_extents.len());
        assert!(half_extents.iter().all(|&h| h > 0.0));
        Obstacle {
            center,
            half_extents,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// True iff `p` lies inside or on the boundary.
    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.center
            .iter()
            .zip(&self.half_extents)
            .zip(p)
            .all(|((c, h), x)| (x - c).abs() <= *h)
    }

    /// Perimeter (2D) or surface area (3D) of the box boundary.
    pub fn surface_measure(&self) -> f64 {
        match self.dim() {
            2 => 4.0 * (self.half_extents[0] + self.half_extents[1]),
            3 => {
                let [a, b, c] = [
                    self.half_extents[0],
                    self.half_extents[1],
                    self.half_extents[2],
                ];
                8.0 * (a * b + b * c + c * a)
            }
            d => panic!("unsupported obstacle dimension {d}"),
        }
    }
}

/// The ambient workspace: bounds plus a list of box obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub bounds: Vec<[f64; 2]>,
    pub obstacles: Vec<Obstacle>,
}

impl Workspace {
    pub fn new(bounds: Vec<[f64; 2]>, obstacles: Vec<Obstacle>) -> Self {
        assert!(matches!(bounds.len(), 2 | 3), "ambient dimension must be 2 or 3");
        for b in &bounds {
            assert!(b[0] < b[1]);
        }
        for o in &obstacles {
            assert_eq!(o.dim(), bounds.len(), "obstacle/workspace dim mismatch");
        }
        Workspace { bounds, obstacles }
    }

    pub fn ambient_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(p)
            .all(|(b, x)| *x >= b[0] && *x <= b[1])
    }
}

/// Physical footprint of the planning agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentGeometry {
    PointMass,
    Rectangle { half_w: f64, half_h: f64 },
    SnakeLinks { link_length: f64, half_width: f64 },
}

impl AgentGeometry {
    /// Default agent for a state space.
    pub fn default_for(tag: SpaceTag) -> Self {
        match tag {
            SpaceTag::Point2D | SpaceTag::Point3D => AgentGeometry::PointMass,
            SpaceTag::RigidBody2D => AgentGeometry::Rectangle {
                half_w: DEFAULT_RECT_HALF_W,
                half_h: DEFAULT_RECT_HALF_H,
            },
            SpaceTag::Snake5Dof => AgentGeometry::SnakeLinks {
                link_length: DEFAULT_SNAKE_LINK_LENGTH,
                half_width: DEFAULT_SNAKE_HALF_WIDTH,
            },
        }
    }

    /// True iff this agent kind is valid for the given space.
    pub fn matches_space(&self, tag: SpaceTag) -> bool {
        matches!(
            (self, tag),
            (AgentGeometry::PointMass, SpaceTag::Point2D)
                | (AgentGeometry::PointMass, SpaceTag::Point3D)
                | (AgentGeometry::Rectangle { .. }, SpaceTag::RigidBody2D)
                | (AgentGeometry::SnakeLinks { .. }, SpaceTag::Snake5Dof)
        )
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let ok = match *self {
            AgentGeometry::PointMass => true,
            AgentGeometry::Rectangle { half_w, half_h } => half_w > 0.0 && half_h > 0.0,
            AgentGeometry::SnakeLinks {
                link_length,
                half_width,
            } => link_length > 0.0 && half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::InvalidAgent)
        }
    }
}

/// Errors raised when constructing a [`Scenario`] from untrusted parts.
#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("agent kind does not match the state space")]
    AgentSpaceMismatch,
    #[error("agent dimensions must be positive")]
    InvalidAgent,
    #[error("goal radius must be positive")]
    InvalidGoalRadius,
    #[error("start state is in collision or out of bounds")]
    StartInCollision,
    #[error("goal state is in collision or out of bounds")]
    GoalInCollision,
    #[error("start is already inside the goal region")]
    StartInsideGoalRegion,
    #[error("obstacle does not fit inside the workspace bounds")]
    ObstacleOutOfBounds,
}

/// A planning query: workspace, state space, agent, start, goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workspace: Workspace,
    pub space: StateSpace,
    pub agent: AgentGeometry,
    pub start: State,
    pub goal: State,
    pub goal_radius: f64,
    /// Seed this scenario was generated from; also keys derived streams
    /// such as the obstacle-surface point cloud.
    pub seed: u64,
}

impl Scenario {
    /// Validates all invariants and builds the scenario.
    pub fn new(
        workspace: Workspace,
        space: StateSpace,
        agent: AgentGeometry,
        start: State,
        goal: State,
        goal_radius: f64,
        seed: u64,
    ) -> Result<Self, ScenarioError> {
        if !agent.matches_space(space.tag()) {
            return Err(ScenarioError::AgentSpaceMismatch);
        }
        agent.validate()?;
        if goal_radius <= 0.0 {
            return Err(ScenarioError::InvalidGoalRadius);
        }
        for o in &workspace.obstacles {
            let fits = o
                .center
                .iter()
                .zip(&o.half_extents)
                .zip(&workspace.bounds)
                .all(|((c, h), b)| c - h >= b[0] - 1e-9 && c + h <= b[1] + 1e-9);
            if !fits {
                return Err(ScenarioError::ObstacleOutOfBounds);
            }
        }
        let sc = Scenario {
            workspace,
            space,
            agent,
            start,
            goal,
            goal_radius,
            seed,
        };
        if state_in_collision(&sc, &sc.start) {
            return Err(ScenarioError::StartInCollision);
        }
        if state_in_collision(&sc, &sc.goal) {
            return Err(ScenarioError::GoalInCollision);
        }
        if sc.space.distance(&sc.start, &sc.goal) <= sc.goal_radius {
            return Err(ScenarioError::StartInsideGoalRegion);
        }
        Ok(sc)
    }

    /// The obstacle-surface point cloud for this scenario, derived
    /// deterministically from the scenario seed.
    pub fn point_cloud(&self, n: usize) -> PointCloud {
        let mut rng = seed::rng_for(self.seed, &[tag::POINT_CLOUD]);
        sample_surface_point_cloud(&self.workspace, n, &mut rng)
    }

    /// True iff `s` is inside the goal region.
    pub fn in_goal_region(&self, s: &State) -> bool {
        self.space.distance(s, &self.goal) <= self.goal_radius
    }
}

/// Forward kinematics for the snake agent: returns the three link segments
/// as `(start, end, heading)` in workspace coordinates.
pub fn snake_forward_kinematics(state: &State, link_length: f64) -> [([f64; 2], [f64; 2], f64); SNAKE_LINKS] {
    assert_eq!(state.dim(), 5, "snake FK requires a 5-DoF state");
    let (x, y) = (state.coords[0], state.coords[1]);
    let mut heading = state.coords[2];
    let mut start = [x, y];
    let mut out = [([0.0; 2], [0.0; 2], 0.0); SNAKE_LINKS];
    for (i, seg) in out.iter_mut().enumerate() {
        if i > 0 {
            heading += state.coords[2 + i];
        }
        let end = [
            start[0] + link_length * heading.cos(),
            start[1] + link_length * heading.sin(),
        ];
        *seg = (start, end, heading);
        start = end;
    }
    out
}

// ---------------------------------------------------------------------------
// Scenario file format
// ---------------------------------------------------------------------------

/// On-disk scenario record. Angles are serialized in radians; field order is
/// canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub space: String,
    pub bounds: Vec<[f64; 2]>,
    pub obstacles: Vec<Obstacle>,
    pub agent: AgentGeometry,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub goal_radius: f64,
    pub seed: u64,
}

/// Errors decoding a scenario file.
#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("unknown space name {0:?}")]
    UnknownSpace(String),
    #[error("space {space:?} needs {expected} ambient bounds, file has {found}")]
    BoundsMismatch {
        space: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed bounds: lo must be < hi")]
    MalformedBounds,
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

impl From<&Scenario> for ScenarioFile {
    fn from(sc: &Scenario) -> Self {
        ScenarioFile {
            space: sc.space.tag().name().to_string(),
            bounds: sc.workspace.bounds.clone(),
            obstacles: sc.workspace.obstacles.clone(),
            agent: sc.agent,
            start: sc.start.coords.clone(),
            goal: sc.goal.coords.clone(),
            goal_radius: sc.goal_radius,
            seed: sc.seed,
        }
    }
}

impl ScenarioFile {
    /// Validates and converts into a [`Scenario`].
    pub fn into_scenario(self) -> Result<Scenario, ScenarioFileError> {
        let tag = SpaceTag::parse(&self.space)
            .ok_or_else(|| ScenarioFileError::UnknownSpace(self.space.clone()))?;
        if self.bounds.len() != tag.ambient_dim() {
            return Err(ScenarioFileError::BoundsMismatch {
                space: self.space.clone(),
                expected: tag.ambient_dim(),
                found: self.bounds.len(),
            });
        }
        if self.bounds.iter().any(|b| b[0] >= b[1]) {
            return Err(ScenarioFileError::MalformedBounds);
        }
        let workspace = Workspace::new(self.bounds.clone(), self.obstacles);
        let space = StateSpace::new(tag, &self.bounds);
        Ok(Scenario::new(
            workspace,
            space,
            self.agent,
            State::new(self.start),
            State::new(self.goal),
            self.goal_radius,
            self.seed,
        )?)
    }
}

// Re-exported so callers can assert the joint-limit default in one place.
pub use crate::geometry::SNAKE_JOINT_LIMIT as SNAKE_JOINT_LIMIT_RAD;
