//! Agent-aware collision checking.
//!
//! Point agents use a point-in-box test. The rectangle and snake agents use
//! an exact separating-axis test between each oriented rectangle and each
//! axis-aligned obstacle. Leaving the workspace bounds counts as collision.

use super::{snake_forward_kinematics, AgentGeometry, Obstacle, Scenario, Workspace};
use crate::geometry::State;

/// An oriented rectangle in the plane: center, axis directions, half extents.
#[derive(Debug, Clone, Copy)]
pub struct OrientedRect {
    pub center: [f64; 2],
    /// Unit vector along the rectangle's long axis.
    pub axis: [f64; 2],
    pub half_len: f64,
    pub half_wid: f64,
}

impl OrientedRect {
    pub fn from_pose(center: [f64; 2], heading: f64, half_len: f64, half_wid: f64) -> Self {
        OrientedRect {
            center,
            axis: [heading.cos(), heading.sin()],
            half_len,
            half_wid,
        }
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (ux, uy) = (self.axis[0], self.axis[1]);
        let (vx, vy) = (-uy, ux);
        let (a, b) = (self.half_len, self.half_wid);
        let (cx, cy) = (self.center[0], self.center[1]);
        [
            [cx + a * ux + b * vx, cy + a * uy + b * vy],
            [cx + a * ux - b * vx, cy + a * uy - b * vy],
            [cx - a * ux + b * vx, cy - a * uy + b * vy],
            [cx - a * ux - b * vx, cy - a * uy - b * vy],
        ]
    }

    /// Exact overlap test against an axis-aligned box via the separating
    /// axis theorem (axes: e_x, e_y, u, v).
    pub fn intersects_aabb(&self, obs: &Obstacle) -> bool {
        debug_assert_eq!(obs.dim(), 2);
        let (ux, uy) = (self.axis[0], self.axis[1]);
        let (vx, vy) = (-uy, ux);
        let dx = self.center[0] - obs.center[0];
        let dy = self.center[1] - obs.center[1];
        let (hw, hh) = (obs.half_extents[0], obs.half_extents[1]);
        let (a, b) = (self.half_len, self.half_wid);

        // axis e_x
        if dx.abs() > hw + a * ux.abs() + b * vx.abs() {
            return false;
        }
        // axis e_y
        if dy.abs() > hh + a * uy.abs() + b * vy.abs() {
            return false;
        }
        // axis u
        if (dx * ux + dy * uy).abs() > a + hw * ux.abs() + hh * uy.abs() {
            return false;
        }
        // axis v
        if (dx * vx + dy * vy).abs() > b + hw * vx.abs() + hh * vy.abs() {
            return false;
        }
        true
    }
}

fn rect_in_bounds(rect: &OrientedRect, ws: &Workspace) -> bool {
    rect.corners().iter().all(|c| ws.contains_point(c))
}

/// Agent footprint for a state, as zero or more oriented rectangles.
fn agent_rects_for(agent: AgentGeometry, state: &State) -> Vec<OrientedRect> {
    match agent {
        AgentGeometry::PointMass => Vec::new(),
        AgentGeometry::Rectangle { half_w, half_h } => {
            vec![OrientedRect::from_pose(
                [state.coords[0], state.coords[1]],
                state.coords[2],
                half_w,
                half_h,
            )]
        }
        AgentGeometry::SnakeLinks {
            link_length,
            half_width,
        } => snake_forward_kinematics(state, link_length)
            .iter()
            .map(|(a, b, heading)| {
                OrientedRect::from_pose(
                    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5],
                    *heading,
                    link_length * 0.5,
                    half_width,
                )
            })
            .collect(),
    }
}

/// True iff the agent at `state` overlaps an obstacle or leaves the
/// workspace bounds.
pub fn state_in_collision(scenario: &Scenario, state: &State) -> bool {
    agent_state_in_collision(&scenario.workspace, scenario.agent, state)
}

pub(super) fn agent_state_in_collision(
    ws: &Workspace,
    agent: AgentGeometry,
    state: &State,
) -> bool {
    match agent {
        AgentGeometry::PointMass => {
            let p = state.position(ws.ambient_dim());
            if !ws.contains_point(p) {
                return true;
            }
            ws.obstacles.iter().any(|o| o.contains_point(p))
        }
        _ => {
            let rects = agent_rects_for(agent, state);
            if rects.iter().any(|r| !rect_in_bounds(r, ws)) {
                return true;
            }
            ws.obstacles
                .iter()
                .any(|o| rects.iter().any(|r| r.intersects_aabb(o)))
        }
    }
}

/// Checks the motion from `a` to `b` at the configured resolution along the
/// metric, endpoints included. `checks` counts individual state tests.
pub fn edge_in_collision_counted(
    scenario: &Scenario,
    a: &State,
    b: &State,
    collision_step: f64,
    checks: &mut u64,
) -> bool {
    assert!(collision_step > 0.0);
    let dist = scenario.space.distance(a, b);
    let steps = (dist / collision_step).ceil() as usize;
    for k in 0..=steps {
        let t = if steps == 0 { 0.0 } else { k as f64 / steps as f64 };
        let s = scenario.space.interpolate(a, b, t);
        *checks += 1;
        if state_in_collision(scenario, &s) {
            return true;
        }
    }
    false
}

/// [`edge_in_collision_counted`] without the counter, at the default
/// resolution.
pub fn edge_in_collision(scenario: &Scenario, a: &State, b: &State) -> bool {
    let mut n = 0;
    edge_in_collision_counted(scenario, a, b, super::DEFAULT_COLLISION_STEP, &mut n)
}
