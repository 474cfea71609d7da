//! Single-tree search: plain RRT and RRT*.

use super::sampling::SamplerPort;
use super::tree::{extract_path, Tree};
use super::{PlanResult, PlannerConfig, TreeDump, LEARNED_FALLBACK_AFTER};
use crate::env::{edge_in_collision_counted, state_in_collision, Scenario};
use crate::geometry::State;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

pub(super) struct Expansion<'a> {
    pub scenario: &'a Scenario,
    pub config: &'a PlannerConfig,
    pub checks: u64,
}

impl<'a> Expansion<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a PlannerConfig) -> Self {
        Expansion {
            scenario,
            config,
            checks: 0,
        }
    }

    fn state_free(&mut self, s: &State) -> bool {
        self.checks += 1;
        !state_in_collision(self.scenario, s)
    }

    fn edge_free(&mut self, a: &State, b: &State) -> bool {
        !edge_in_collision_counted(self.scenario, a, b, self.config.collision_step, &mut self.checks)
    }

    /// One expansion attempt: steer from the nearest node toward `x_rand`,
    /// pick the cheapest collision-free parent in the neighbourhood, insert,
    /// and (when `rewire`) re-route neighbours through the new node.
    pub fn try_expand(&mut self, tree: &mut Tree, x_rand: &State, rewire: bool) -> Option<usize> {
        let space = &self.scenario.space;
        let nearest = tree.nearest(space, x_rand);
        let x_new = space.steer(&tree.node(nearest).state, x_rand, self.config.step_size);
        if space.distance(&tree.node(nearest).state, &x_new) < 1e-12 {
            return None; // degenerate: sample collapsed onto an existing node
        }
        if !self.state_free(&x_new) {
            return None;
        }

        let radius = self.config.near_radius(tree.len(), space.dim());
        let (parent, edge_cost) = if rewire {
            let mut candidates: Vec<(usize, f64)> = tree
                .near(space, &x_new, radius)
                .into_iter()
                .map(|i| (i, space.distance(&tree.node(i).state, &x_new)))
                .collect();
            if !candidates.iter().any(|&(i, _)| i == nearest) {
                candidates.push((nearest, space.distance(&tree.node(nearest).state, &x_new)));
            }
            candidates.sort_by(|a, b| {
                let ca = tree.node(a.0).cost + a.1;
                let cb = tree.node(b.0).cost + b.1;
                ca.partial_cmp(&cb).unwrap().then(a.0.cmp(&b.0))
            });
            let mut chosen = None;
            for (i, d) in candidates {
                if self.edge_free(&tree.node(i).state, &x_new) {
                    chosen = Some((i, d));
                    break;
                }
            }
            chosen?
        } else {
            let d = space.distance(&tree.node(nearest).state, &x_new);
            if !self.edge_free(&tree.node(nearest).state, &x_new) {
                return None;
            }
            (nearest, d)
        };

        let idx = tree.insert(x_new.clone(), parent, edge_cost);
        if self.config.audit {
            tree.audit(space).expect("tree invariants after insertion");
        }

        if rewire {
            for i in tree.near(space, &x_new, radius) {
                if i == idx || i == parent || i == 0 {
                    continue;
                }
                let d = space.distance(&x_new, &tree.node(i).state);
                let through_new = tree.node(idx).cost + d;
                if through_new + 1e-12 < tree.node(i).cost
                    && self.edge_free(&x_new, &tree.node(i).state)
                {
                    let before = tree.node(i).cost;
                    tree.reparent(i, idx, d);
                    debug_assert!(tree.node(i).cost <= before);
                    if self.config.audit {
                        assert!(
                            tree.node(i).cost <= before,
                            "rewiring must not increase cost-to-come"
                        );
                        tree.audit(space).expect("tree invariants after rewiring");
                    }
                }
            }
        }
        Some(idx)
    }
}

fn run_single_tree(
    scenario: &Scenario,
    sampler: &mut dyn SamplerPort,
    config: &PlannerConfig,
    rng: &mut ChaCha8Rng,
    rewire: bool,
) -> PlanResult {
    let t0 = Instant::now();
    let mut tree = Tree::new(scenario.start.clone());
    let mut exp = Expansion::new(scenario, config);
    let mut goal_nodes: Vec<usize> = Vec::new();
    let mut attempts = 0u64;
    let mut consecutive_failures = 0u32;

    while (tree.len() as u64 - 1) < config.max_samples && attempts < config.max_attempts() {
        attempts += 1;
        let x_rand = if sampler.is_learned() && consecutive_failures >= LEARNED_FALLBACK_AFTER {
            consecutive_failures = 0;
            scenario.space.sample_uniform(rng)
        } else {
            sampler.next_sample(&tree, scenario, rng)
        };
        match exp.try_expand(&mut tree, &x_rand, rewire) {
            Some(idx) => {
                consecutive_failures = 0;
                if scenario.in_goal_region(&tree.node(idx).state) {
                    goal_nodes.push(idx);
                    if !config.refine_to_budget {
                        break;
                    }
                }
            }
            None => consecutive_failures += 1,
        }
    }

    let samples = tree.len() as u64 - 1;
    let best = goal_nodes
        .into_iter()
        .min_by(|&a, &b| tree.node(a).cost.partial_cmp(&tree.node(b).cost).unwrap());
    let wall_time = t0.elapsed().as_secs_f64();
    match best {
        Some(goal_idx) => {
            let path = extract_path(&tree, goal_idx);
            PlanResult {
                success: true,
                path_length: tree.node(goal_idx).cost,
                path: Some(path),
                samples_generated: samples,
                collision_checks: exp.checks,
                wall_time,
                trees: vec![TreeDump::from(&tree)],
            }
        }
        None => PlanResult::failure(samples, exp.checks, wall_time, vec![TreeDump::from(&tree)]),
    }
}

/// RRT*: choose-parent and rewiring enabled.
pub fn rrt_star(
    scenario: &Scenario,
    sampler: &mut dyn SamplerPort,
    config: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> PlanResult {
    run_single_tree(scenario, sampler, config, rng, true)
}

/// Plain RRT: nearest-parent insertion, no rewiring.
pub fn rrt(
    scenario: &Scenario,
    sampler: &mut dyn SamplerPort,
    config: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> PlanResult {
    run_single_tree(scenario, sampler, config, rng, false)
}
