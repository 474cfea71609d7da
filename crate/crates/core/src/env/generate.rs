//! Random workspace and scenario generation.
//!
//! Generation is a pure function of (seed, config): the same seed always
//! yields a bit-identical result.

use super::collision::agent_state_in_collision;
use super::{AgentGeometry, Obstacle, Scenario, ScenarioError, Workspace};
use crate::geometry::{SpaceTag, StateSpace};
use crate::seed::{self, tag};
use rand::Rng;
use thiserror::Error;

const MAX_REJECTION_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("an obstacle with half extent {0} cannot fit inside the bounds")]
    ObstacleTooLarge(f64),
    #[error("could not place a collision-free start/goal pair in {0} attempts")]
    RejectionBudgetExhausted(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Generates a workspace with `n_obstacles` axis-aligned boxes. Half extents
/// are uniform in `size_range`; centers are uniform such that each box fits
/// fully inside the bounds. Obstacles may overlap each other.
pub fn generate_workspace(
    seed: u64,
    bounds: &[[f64; 2]],
    n_obstacles: usize,
    size_range: [f64; 2],
) -> Result<Workspace, GenerationError> {
    assert!(size_range[0] > 0.0 && size_range[0] <= size_range[1]);
    let mut rng = seed::rng_for(seed, &[tag::WORKSPACE]);
    let mut obstacles = Vec::with_capacity(n_obstacles);
    for _ in 0..n_obstacles {
        let half_extents: Vec<f64> = bounds
            .iter()
            .map(|_| rng.random_range(size_range[0]..=size_range[1]))
            .collect();
        let mut center = Vec::with_capacity(bounds.len());
        for (b, h) in bounds.iter().zip(&half_extents) {
            let (lo, hi) = (b[0] + h, b[1] - h);
            if lo > hi {
                return Err(GenerationError::ObstacleTooLarge(*h));
            }
            center.push(rng.random_range(lo..=hi));
        }
        obstacles.push(Obstacle::new(center, half_extents));
    }
    Ok(Workspace::new(bounds.to_vec(), obstacles))
}

/// Generates a scenario by rejection sampling: start and goal are drawn
/// uniformly until both are collision-free and their metric distance
/// exceeds `max(goal_radius, 0.25 x translational diagonal)`.
pub fn generate_scenario(
    seed: u64,
    workspace: Workspace,
    space_tag: SpaceTag,
    agent: AgentGeometry,
    goal_radius: f64,
) -> Result<Scenario, GenerationError> {
    if !agent.matches_space(space_tag) {
        return Err(ScenarioError::AgentSpaceMismatch.into());
    }
    let space = StateSpace::new(space_tag, &workspace.bounds);
    let min_separation = goal_radius.max(0.25 * space.translational_diagonal());
    let mut rng = seed::rng_for(seed, &[tag::SCENARIO]);

    let mut attempts = 0;
    let start = loop {
        attempts += 1;
        if attempts > MAX_REJECTION_ATTEMPTS {
            return Err(GenerationError::RejectionBudgetExhausted(attempts - 1));
        }
        let s = space.sample_uniform(&mut rng);
        if !agent_state_in_collision(&workspace, agent, &s) {
            break s;
        }
    };
    let goal = loop {
        attempts += 1;
        if attempts > MAX_REJECTION_ATTEMPTS {
            return Err(GenerationError::RejectionBudgetExhausted(attempts - 1));
        }
        let g = space.sample_uniform(&mut rng);
        if !agent_state_in_collision(&workspace, agent, &g)
            && space.distance(&start, &g) > min_separation
        {
            break g;
        }
    };

    Ok(Scenario::new(
        workspace, space, agent, start, goal, goal_radius, seed,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{state_in_collision, DEFAULT_GOAL_RADIUS};

    const BOUNDS: [[f64; 2]; 2] = [[0.0, 40.0], [0.0, 40.0]];

    #[test]
    fn obstacle_counts_match_request() {
        for n in [0, 10, 15] {
            let ws = generate_workspace(7, &BOUNDS, n, [1.0, 4.0]).unwrap();
            assert_eq!(ws.obstacles.len(), n);
            for o in &ws.obstacles {
                for ((c, h), b) in o.center.iter().zip(&o.half_extents).zip(&ws.bounds) {
                    assert!(c - h >= b[0] && c + h <= b[1], "obstacle pokes out of bounds");
                }
                for h in &o.half_extents {
                    assert!((1.0..=4.0).contains(h));
                }
            }
        }
    }

    #[test]
    fn workspace_generation_is_deterministic() {
        let a = generate_workspace(9, &BOUNDS, 10, [1.0, 4.0]).unwrap();
        let b = generate_workspace(9, &BOUNDS, 10, [1.0, 4.0]).unwrap();
        assert_eq!(a, b);
        let c = generate_workspace(10, &BOUNDS, 10, [1.0, 4.0]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn oversized_obstacle_is_an_error() {
        let err = generate_workspace(1, &BOUNDS, 1, [25.0, 30.0]).unwrap_err();
        assert!(matches!(err, GenerationError::ObstacleTooLarge(_)));
    }

    #[test]
    fn scenario_generation_basics() {
        let ws = generate_workspace(3, &BOUNDS, 5, [1.0, 4.0]).unwrap();
        let sc = generate_scenario(
            21,
            ws,
            SpaceTag::Point2D,
            AgentGeometry::PointMass,
            DEFAULT_GOAL_RADIUS,
        )
        .unwrap();
        assert!(!state_in_collision(&sc, &sc.start));
        assert!(!state_in_collision(&sc, &sc.goal));
        let diag = (2.0 * 40.0f64 * 40.0).sqrt();
        assert!(sc.space.distance(&sc.start, &sc.goal) > 0.25 * diag);
        assert_eq!(sc.goal_radius, 1.0);
    }

    #[test]
    fn scenario_generation_is_deterministic() {
        let ws = generate_workspace(3, &BOUNDS, 5, [1.0, 4.0]).unwrap();
        let a = generate_scenario(
            5,
            ws.clone(),
            SpaceTag::RigidBody2D,
            AgentGeometry::default_for(SpaceTag::RigidBody2D),
            1.0,
        )
        .unwrap();
        let b = generate_scenario(
            5,
            ws,
            SpaceTag::RigidBody2D,
            AgentGeometry::default_for(SpaceTag::RigidBody2D),
            1.0,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fully_obstructed_workspace_fails() {
        // One obstacle covering the entire workspace (boundary inclusive).
        let ws = Workspace::new(
            vec![[0.0, 40.0], [0.0, 40.0]],
            vec![Obstacle::new(vec![20.0, 20.0], vec![20.0, 20.0])],
        );
        let err = generate_scenario(1, ws, SpaceTag::Point2D, AgentGeometry::PointMass, 1.0);
        assert!(matches!(
            err,
            Err(GenerationError::RejectionBudgetExhausted(_))
        ));
    }

    #[test]
    fn empty_workspace_always_succeeds() {
        let ws = Workspace::new(vec![[0.0, 40.0], [0.0, 40.0]], vec![]);
        for seed in 0..20 {
            generate_scenario(seed, ws.clone(), SpaceTag::Point2D, AgentGeometry::PointMass, 1.0)
                .unwrap();
        }
    }
}
