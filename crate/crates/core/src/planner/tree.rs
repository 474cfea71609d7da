//! The search tree: states, parent links, cost-to-come, and rewiring.

use crate::geometry::{State, StateSpace};

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub state: State,
    pub parent: Option<usize>,
    /// Accumulated path cost from the root.
    pub cost: f64,
    children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn new(root: State) -> Self {
        Tree {
            nodes: vec![TreeNode {
                state: root,
                parent: None,
                cost: 0.0,
                children: Vec::new(),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    /// Index of the most recently inserted node (the root if none).
    pub fn newest(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn insert(&mut self, state: State, parent: usize, edge_cost: f64) -> usize {
        debug_assert!(parent < self.nodes.len());
        debug_assert!(edge_cost >= 0.0);
        let idx = self.nodes.len();
        let cost = self.nodes[parent].cost + edge_cost;
        self.nodes.push(TreeNode {
            state,
            parent: Some(parent),
            cost,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    /// Re-parents `node` through `new_parent`, updating subtree costs.
    pub fn reparent(&mut self, node: usize, new_parent: usize, new_edge_cost: f64) {
        debug_assert!(node != 0, "the root cannot be re-parented");
        debug_assert!(node != new_parent);
        let old_parent = self.nodes[node].parent.expect("non-root node has a parent");
        if old_parent == new_parent {
            return;
        }
        let pos = self.nodes[old_parent]
            .children
            .iter()
            .position(|&c| c == node)
            .expect("child link consistent");
        self.nodes[old_parent].children.swap_remove(pos);
        self.nodes[new_parent].children.push(node);
        self.nodes[node].parent = Some(new_parent);
        let new_cost = self.nodes[new_parent].cost + new_edge_cost;
        let delta = new_cost - self.nodes[node].cost;
        // propagate the delta through the whole subtree
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            self.nodes[i].cost += delta;
            stack.extend_from_slice(&self.nodes[i].children);
        }
    }

    /// Index of the metrically nearest node (smallest index wins ties).
    pub fn nearest(&self, space: &StateSpace, s: &State) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = space.distance(&n.state, s);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Indices of all nodes within `radius` of `s`, in index order.
    pub fn near(&self, space: &StateSpace, s: &State, radius: f64) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| space.distance(&n.state, s) <= radius)
            .map(|(i, _)| i)
            .collect()
    }

    /// States along the branch from the root to `i`, root first.
    pub fn branch_states(&self, i: usize) -> Vec<State> {
        let mut rev = Vec::new();
        let mut cur = Some(i);
        while let Some(c) = cur {
            rev.push(self.nodes[c].state.clone());
            cur = self.nodes[c].parent;
        }
        rev.reverse();
        rev
    }

    /// Verifies the structural invariants: the root has no parent and zero
    /// cost, every cost equals the parent cost plus the edge length, the
    /// parent graph is acyclic and child links are consistent.
    pub fn audit(&self, space: &StateSpace) -> Result<(), String> {
        if self.nodes[0].parent.is_some() || self.nodes[0].cost != 0.0 {
            return Err("root must have no parent and zero cost".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let edge = space.distance(&self.nodes[p].state, &n.state);
                let expect = self.nodes[p].cost + edge;
                if (n.cost - expect).abs() > 1e-9 {
                    return Err(format!(
                        "cost inconsistency at node {i}: {} vs {}",
                        n.cost, expect
                    ));
                }
                if !self.nodes[p].children.contains(&i) {
                    return Err(format!("missing child link {p} -> {i}"));
                }
            } else if i != 0 {
                return Err(format!("non-root node {i} has no parent"));
            }
            // acyclicity: the parent chain must reach the root within len steps
            let mut cur = n.parent;
            let mut hops = 0;
            while let Some(c) = cur {
                hops += 1;
                if hops > self.nodes.len() {
                    return Err(format!("cycle through node {i}"));
                }
                cur = self.nodes[c].parent;
            }
        }
        Ok(())
    }
}

/// States along the branch to `goal_node`, root first.
pub fn extract_path(tree: &Tree, goal_node: usize) -> Vec<State> {
    tree.branch_states(goal_node)
}

/// Total metric length of a path.
pub fn path_cost(space: &StateSpace, path: &[State]) -> f64 {
    path.windows(2).map(|w| space.distance(&w[0], &w[1])).sum()
}
