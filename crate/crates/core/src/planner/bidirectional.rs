//! Bidirectional RRT*: alternating forward and backward tree expansions
//! with a connect attempt after every successful insertion.

use super::search::Expansion;
use super::sampling::SamplerPort;
use super::tree::Tree;
use super::{PlanResult, PlannerConfig, TreeDump, LEARNED_FALLBACK_AFTER};
use crate::env::Scenario;
use crate::geometry::State;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

struct Connection {
    /// Node in the start tree.
    start_node: usize,
    /// Node in the goal tree.
    goal_node: usize,
    total_cost: f64,
}

/// Grows one tree from the start and one from the goal, alternating turn by
/// turn. After each insertion the nearest node of the opposite tree is
/// probed; if it lies within one step and the joining edge is free, the two
/// branches compose into a path (the backward branch reversed).
pub fn bi_rrt_star<'a>(
    scenario: &Scenario,
    sampler_fwd: &'a mut dyn SamplerPort,
    sampler_bwd: &'a mut dyn SamplerPort,
    config: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> PlanResult {
    let t0 = Instant::now();
    let space = &scenario.space;
    let mut start_tree = Tree::new(scenario.start.clone());
    let mut goal_tree = Tree::new(scenario.goal.clone());
    let mut exp = Expansion::new(scenario, config);
    let mut attempts = 0u64;
    let mut consecutive_failures = [0u32; 2];
    let mut best: Option<Connection> = None;

    loop {
        let samples = (start_tree.len() + goal_tree.len()) as u64 - 2;
        if samples >= config.max_samples || attempts >= config.max_attempts() {
            break;
        }
        let forward = attempts % 2 == 0;
        attempts += 1;
        let (active, other, sampler) = if forward {
            (&mut start_tree, &goal_tree, &mut *sampler_fwd)
        } else {
            (&mut goal_tree, &start_tree, &mut *sampler_bwd)
        };
        let fail_slot = usize::from(!forward);

        let x_rand = if sampler.is_learned()
            && consecutive_failures[fail_slot] >= LEARNED_FALLBACK_AFTER
        {
            consecutive_failures[fail_slot] = 0;
            space.sample_uniform(rng)
        } else {
            sampler.next_sample(active, scenario, rng)
        };

        let inserted = exp.try_expand(active, &x_rand, true);
        let idx = match inserted {
            Some(idx) => {
                consecutive_failures[fail_slot] = 0;
                idx
            }
            None => {
                consecutive_failures[fail_slot] += 1;
                continue;
            }
        };

        // connect attempt toward the opposite tree
        let x_new = active.node(idx).state.clone();
        let nearest_other = other.nearest(space, &x_new);
        let d = space.distance(&x_new, &other.node(nearest_other).state);
        if d <= config.step_size
            && !crate::env::edge_in_collision_counted(
                scenario,
                &x_new,
                &other.node(nearest_other).state,
                config.collision_step,
                &mut exp.checks,
            )
        {
            let (s_node, g_node) = if forward {
                (idx, nearest_other)
            } else {
                (nearest_other, idx)
            };
            let total_cost = start_tree.node(s_node).cost + d + goal_tree.node(g_node).cost;
            let better = best
                .as_ref()
                .map(|b| total_cost < b.total_cost)
                .unwrap_or(true);
            if better {
                best = Some(Connection {
                    start_node: s_node,
                    goal_node: g_node,
                    total_cost,
                });
            }
            if !config.refine_to_budget {
                break;
            }
        }
    }

    let samples = (start_tree.len() + goal_tree.len()) as u64 - 2;
    let wall_time = t0.elapsed().as_secs_f64();
    let trees = vec![TreeDump::from(&start_tree), TreeDump::from(&goal_tree)];
    match best {
        Some(conn) => {
            let mut path: Vec<State> = start_tree.branch_states(conn.start_node);
            let mut back = goal_tree.branch_states(conn.goal_node);
            back.reverse(); // now runs from the connect point to the goal
            if let (Some(last), Some(first)) = (path.last(), back.first()) {
                if last == first {
                    back.remove(0);
                }
            }
            path.extend(back);
            PlanResult {
                success: true,
                path_length: super::tree::path_cost(space, &path),
                path: Some(path),
                samples_generated: samples,
                collision_checks: exp.checks,
                wall_time,
                trees,
            }
        }
        None => PlanResult::failure(samples, exp.checks, wall_time, trees),
    }
}
