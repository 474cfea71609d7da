//! Static SVG rendering of scenarios and search trees.
//!
//! 2D spaces render directly; 3D scenarios render as an axis-projection
//! triptych (xy, xz, yz). Output is deterministic: identical inputs give
//! byte-identical SVG.

use crate::error::BenchError;
use crate::eval::QueryDump;
use silrrt_core::env::{snake_forward_kinematics, AgentGeometry, Scenario};
use silrrt_core::geometry::{SpaceTag, State};
use silrrt_core::planner::TreeDump;
use std::fmt::Write as _;

const TREE_COLORS: [&str; 2] = ["#4a90d9", "#52a352"];
const MARGIN: f64 = 1.0;

fn f(v: f64) -> String {
    format!("{v:.4}")
}

struct Projection {
    ax: usize,
    ay: usize,
    label: &'static str,
}

fn projections(dim: usize) -> Vec<Projection> {
    if dim == 2 {
        vec![Projection {
            ax: 0,
            ay: 1,
            label: "xy",
        }]
    } else {
        vec![
            Projection { ax: 0, ay: 1, label: "xy" },
            Projection { ax: 0, ay: 2, label: "xz" },
            Projection { ax: 1, ay: 2, label: "yz" },
        ]
    }
}

/// Renders a scenario, optionally with a planning result (trees plus the
/// final path highlighted).
pub fn render_svg(scenario: &Scenario, dump: Option<&QueryDump>) -> Result<String, BenchError> {
    let dim = scenario.workspace.ambient_dim();
    if !(2..=3).contains(&dim) {
        return Err(BenchError::Unsupported(format!(
            "cannot render ambient dimension {dim}"
        )));
    }
    let bounds = &scenario.workspace.bounds;
    let projs = projections(dim);
    let panel_w: f64 = bounds.iter().map(|b| b[1] - b[0]).fold(0.0, f64::max) + 2.0 * MARGIN;
    let panel_h = panel_w;
    let total_w = panel_w * projs.len() as f64;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n",
        f(total_w),
        f(panel_h),
        f(total_w * 12.0),
        f(panel_h * 12.0)
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");

    for (i, proj) in projs.iter().enumerate() {
        let offset_x = i as f64 * panel_w;
        render_panel(&mut svg, scenario, dump, proj, offset_x, panel_h);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render_panel(
    svg: &mut String,
    scenario: &Scenario,
    dump: Option<&QueryDump>,
    proj: &Projection,
    offset_x: f64,
    panel_h: f64,
) {
    let bounds = &scenario.workspace.bounds;
    // svg y grows downward: flip the vertical axis; inputs are the two
    // already-projected coordinates
    let map = |px: f64, py: f64| -> (f64, f64) {
        let x = offset_x + MARGIN + (px - bounds[proj.ax][0]);
        let y = panel_h - MARGIN - (py - bounds[proj.ay][0]);
        (x, y)
    };

    let _ = write!(svg, "<g data-panel=\"{}\">\n", proj.label);
    // workspace frame
    let (fx, fy) = (
        offset_x + MARGIN,
        panel_h - MARGIN - (bounds[proj.ay][1] - bounds[proj.ay][0]),
    );
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"0.1\"/>\n",
        f(fx),
        f(fy),
        f(bounds[proj.ax][1] - bounds[proj.ax][0]),
        f(bounds[proj.ay][1] - bounds[proj.ay][0]),
    );

    for o in &scenario.workspace.obstacles {
        let (x, y) = map(
            o.center[proj.ax] - o.half_extents[proj.ax],
            o.center[proj.ay] + o.half_extents[proj.ay],
        );
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#b0b0b0\"/>\n",
            f(x),
            f(y),
            f(2.0 * o.half_extents[proj.ax]),
            f(2.0 * o.half_extents[proj.ay]),
        );
    }

    // obstacle-surface point cloud (a light sprinkling is enough visually)
    let cloud = scenario.point_cloud(200);
    for p in cloud.iter() {
        if !scenario.workspace.contains_point(p) {
            continue; // sentinel points of empty workspaces stay off-canvas
        }
        let (x, y) = map(p[proj.ax], p[proj.ay]);
        let _ = write!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"0.12\" fill=\"#7a5c99\"/>\n",
            f(x),
            f(y)
        );
    }

    if let Some(d) = dump {
        for (t_idx, tree) in d.result.trees.iter().enumerate() {
            render_tree(svg, tree, proj, &map, TREE_COLORS[t_idx % TREE_COLORS.len()]);
        }
        if let Some(path) = &d.result.path {
            let pts: Vec<String> = path
                .iter()
                .map(|s| {
                    let (x, y) = map(s.coords[proj.ax], s.coords[proj.ay]);
                    format!("{},{}", f(x), f(y))
                })
                .collect();
            let _ = write!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#d93025\" stroke-width=\"0.25\"/>\n",
                pts.join(" ")
            );
        }
    }

    // start and goal markers with the goal region
    let (gx, gy) = map(scenario.goal.coords[proj.ax], scenario.goal.coords[proj.ay]);
    let _ = write!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#d93025\" stroke-width=\"0.12\" stroke-dasharray=\"0.4 0.3\"/>\n",
        f(gx),
        f(gy),
        f(scenario.goal_radius)
    );
    let _ = write!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"0.3\" fill=\"#d93025\"/>\n",
        f(gx),
        f(gy)
    );
    let (sx, sy) = map(scenario.start.coords[proj.ax], scenario.start.coords[proj.ay]);
    let _ = write!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"0.3\" fill=\"#1a73e8\"/>\n",
        f(sx),
        f(sy)
    );

    // agent footprint at the start pose for shaped agents
    render_agent(svg, scenario, &scenario.start, &map);
    svg.push_str("</g>\n");
}

fn render_tree(
    svg: &mut String,
    tree: &TreeDump,
    proj: &Projection,
    map: &impl Fn(f64, f64) -> (f64, f64),
    color: &str,
) {
    for (i, parent) in tree.parents.iter().enumerate() {
        let Some(p) = parent else { continue };
        let a = &tree.states[*p];
        let b = &tree.states[i];
        let (x1, y1) = map(a.coords[proj.ax], a.coords[proj.ay]);
        let (x2, y2) = map(b.coords[proj.ax], b.coords[proj.ay]);
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"0.06\"/>\n",
            f(x1),
            f(y1),
            f(x2),
            f(y2),
            color
        );
    }
}

fn render_agent(
    svg: &mut String,
    scenario: &Scenario,
    state: &State,
    map: &impl Fn(f64, f64) -> (f64, f64),
) {
    match scenario.agent {
        AgentGeometry::PointMass => {}
        AgentGeometry::Rectangle { half_w, half_h } => {
            if scenario.space.tag() != SpaceTag::RigidBody2D {
                return;
            }
            let (cx, cy, th) = (state.coords[0], state.coords[1], state.coords[2]);
            let (c, s) = (th.cos(), th.sin());
            let corners = [
                (half_w, half_h),
                (half_w, -half_h),
                (-half_w, -half_h),
                (-half_w, half_h),
            ];
            let pts: Vec<String> = corners
                .iter()
                .map(|(dx, dy)| {
                    let (x, y) = map(cx + c * dx - s * dy, cy + s * dx + c * dy);
                    format!("{},{}", f(x), f(y))
                })
                .collect();
            let _ = write!(
                svg,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"#1a73e8\" stroke-width=\"0.12\"/>\n",
                pts.join(" ")
            );
        }
        AgentGeometry::SnakeLinks { link_length, .. } => {
            if scenario.space.tag() != SpaceTag::Snake5Dof {
                return;
            }
            for (a, b, _) in snake_forward_kinematics(state, link_length) {
                let (x1, y1) = map(a[0], a[1]);
                let (x2, y2) = map(b[0], b[1]);
                let _ = write!(
                    svg,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#1a73e8\" stroke-width=\"0.3\" stroke-linecap=\"round\"/>\n",
                    f(x1),
                    f(y1),
                    f(x2),
                    f(y2),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use silrrt_core::env::{generate_scenario, generate_workspace, AgentGeometry};
    use silrrt_core::planner::{rrt_star, PlannerConfig, UniformSampler};
    use silrrt_core::seed::{rng_for, tag};

    fn scenario_2d(seed: u64) -> Scenario {
        let bounds = [[0.0, 40.0], [0.0, 40.0]];
        let ws = generate_workspace(seed, &bounds, 4, [1.0, 3.0]).unwrap();
        generate_scenario(seed, ws, SpaceTag::Point2D, AgentGeometry::PointMass, 1.0).unwrap()
    }

    #[test]
    fn scenario_only_render_is_deterministic() {
        let sc = scenario_2d(3);
        let a = render_svg(&sc, None).unwrap();
        let b = render_svg(&sc, None).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("<rect"));
    }

    #[test]
    fn tree_render_has_one_edge_per_non_root_node() {
        let sc = scenario_2d(5);
        let config = PlannerConfig::default().with_max_samples(200);
        let mut sampler = UniformSampler::new(sc.goal.clone(), config.goal_bias);
        let mut rng = rng_for(5, &[tag::PLAN]);
        let result = rrt_star(&sc, &mut sampler, &config, &mut rng);
        let nodes: usize = result.trees.iter().map(|t| t.states.len()).sum();
        let dump = QueryDump {
            planner: "rrtstar".into(),
            scenario_id: 0,
            trial: 0,
            seed: 5,
            config,
            result,
        };
        let svg = render_svg(&sc, Some(&dump)).unwrap();
        let edges = svg.matches("<line").count();
        let polylines = svg.matches("<polyline").count();
        // every non-root node contributes exactly one edge line
        assert_eq!(edges, nodes - dump.result.trees.len());
        assert_eq!(polylines, usize::from(dump.result.success));
    }

    #[test]
    fn triptych_for_3d() {
        let bounds = [[0.0, 40.0], [0.0, 40.0], [0.0, 40.0]];
        let ws = generate_workspace(8, &bounds, 3, [1.0, 3.0]).unwrap();
        let sc =
            generate_scenario(8, ws, SpaceTag::Point3D, AgentGeometry::PointMass, 1.0).unwrap();
        let svg = render_svg(&sc, None).unwrap();
        assert_eq!(svg.matches("data-panel").count(), 3);
    }
}
