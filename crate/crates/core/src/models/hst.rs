//! Streaming Half-Space Trees.
//!
//! Trees are complete binary trees of fixed depth over a randomly perturbed
//! workspace. Node `i` has children `2i + 1` / `2i + 2`; its split dimension
//! is a seeded hash of `(tree seed, i)` and its split value is the midpoint of
//! the node's sub-range, so the structure is fixed at construction and never
//! needs to be stored. Only nodes that carry mass are materialized.
//!
//! Each node keeps a reference mass (previous window) and a latest mass
//! (current window); every `window` fits the latest masses become the
//! reference. Scoring descends until the reference mass drops below
//! `0.1 * window` or the depth limit is reached and adds `mass * 2^depth`.
//! The returned score is the negated sum, so sparse regions score higher.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{Detector, Label, StreamShape};
use crate::error::{check_finite, Result, SadError};
use crate::rng;
use crate::state::Persist;

const SIZE_LIMIT_FRACTION: f64 = 0.1;
const MAX_DEPTH: u32 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HstParams {
    pub trees: usize,
    pub depth: u32,
    pub window: usize,
    /// Nominal range of every feature; the workspace is perturbed around it.
    pub range: (f64, f64),
}

impl Default for HstParams {
    fn default() -> Self {
        HstParams {
            trees: 25,
            depth: 15,
            window: 250,
            range: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMass {
    pub reference: u64,
    pub latest: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Tree {
    seed: u64,
    nodes: BTreeMap<u64, NodeMass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceTrees {
    params: HstParams,
    seed: u64,
    shape: StreamShape,
    /// Per-dimension `(min, max)`; empty until the dimension is bound.
    workspace: Vec<(f64, f64)>,
    trees: Vec<Tree>,
    in_window: usize,
    windows_completed: u64,
}

fn depth_of(node: u64) -> u32 {
    63 - (node + 1).leading_zeros()
}

impl HalfSpaceTrees {
    pub fn new(params: HstParams, seed: u64) -> Result<Self> {
        if params.trees == 0 || params.window == 0 {
            return Err(SadError::bad_parameter(
                "hst trees and window must be at least 1",
            ));
        }
        let (lo, hi) = params.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SadError::bad_parameter("hst range needs finite min < max"));
        }
        if params.depth > MAX_DEPTH {
            return Err(SadError::bad_parameter(format!(
                "hst depth must be at most {MAX_DEPTH}"
            )));
        }
        Ok(HalfSpaceTrees {
            params,
            seed,
            shape: StreamShape::default(),
            workspace: Vec::new(),
            trees: Vec::new(),
            in_window: 0,
            windows_completed: 0,
        })
    }

    /// Uses an explicit workspace instead of the random perturbation; binds
    /// the dimension to `workspace.len()`.
    pub fn with_workspace(
        params: HstParams,
        workspace: Vec<(f64, f64)>,
        seed: u64,
    ) -> Result<Self> {
        let mut state = Self::new(params, seed)?;
        if workspace.is_empty() {
            return Err(SadError::EmptyInput);
        }
        for &(lo, hi) in &workspace {
            check_finite(&[lo, hi])?;
            if lo >= hi {
                return Err(SadError::bad_parameter("workspace needs min < max"));
            }
        }
        state.shape.admit(&vec![0.0; workspace.len()])?;
        state.workspace = workspace;
        state.plant_trees();
        Ok(state)
    }

    pub fn params(&self) -> &HstParams {
        &self.params
    }

    pub fn workspace(&self) -> &[(f64, f64)] {
        &self.workspace
    }

    /// Instances absorbed into the current (latest) window.
    pub fn in_window(&self) -> usize {
        self.in_window
    }

    pub fn node_mass(&self, tree: usize, node: u64) -> NodeMass {
        self.trees[tree]
            .nodes
            .get(&node)
            .copied()
            .unwrap_or_default()
    }

    /// Materialized `(node id, mass)` pairs of one tree in id order.
    pub fn nodes(&self, tree: usize) -> impl Iterator<Item = (u64, NodeMass)> + '_ {
        self.trees[tree].nodes.iter().map(|(&id, &m)| (id, m))
    }

    /// Sum of reference masses over the depth-limit nodes of one tree.
    pub fn leaf_reference_total(&self, tree: usize) -> u64 {
        self.trees[tree]
            .nodes
            .iter()
            .filter(|(&id, _)| depth_of(id) == self.params.depth)
            .map(|(_, m)| m.reference)
            .sum()
    }

    /// Materialized nodes across all trees.
    pub fn stored_nodes(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }

    fn perturb_workspace(&mut self, m: usize) {
        let mut rng = rng::seeded(self.seed);
        let (lo, hi) = self.params.range;
        self.workspace = (0..m)
            .map(|_| {
                let s = rng.random_range(lo..hi);
                let r = 2.0 * (s - lo).max(hi - s);
                (s - r, s + r)
            })
            .collect();
    }

    fn plant_trees(&mut self) {
        self.trees = (0..self.params.trees as u64)
            .map(|t| Tree {
                seed: rng::derive_seed(self.seed, t),
                nodes: BTreeMap::new(),
            })
            .collect();
    }

    /// Visits the path of `x` in tree `t`, calling `visit(node, depth)` until
    /// it returns `false` or the depth limit is passed.
    fn walk(&self, t: usize, x: &[f64], mut visit: impl FnMut(u64, u32) -> bool) {
        let tree_seed = self.trees[t].seed;
        let m = self.workspace.len() as u64;
        let mut bounds = self.workspace.clone();
        let mut node = 0u64;
        for depth in 0..=self.params.depth {
            if !visit(node, depth) || depth == self.params.depth {
                return;
            }
            let q = (rng::mix64(tree_seed ^ rng::mix64(node)) % m) as usize;
            let (lo, hi) = bounds[q];
            let mid = 0.5 * (lo + hi);
            if x[q] < mid {
                bounds[q].1 = mid;
                node = 2 * node + 1;
            } else {
                bounds[q].0 = mid;
                node = 2 * node + 2;
            }
        }
    }

    fn rotate_window(&mut self) {
        for tree in &mut self.trees {
            for mass in tree.nodes.values_mut() {
                mass.reference = mass.latest;
                mass.latest = 0;
            }
            tree.nodes.retain(|_, m| m.reference > 0);
        }
        self.in_window = 0;
        self.windows_completed += 1;
    }
}

impl Detector for HalfSpaceTrees {
    fn fit_partial(&mut self, x: &[f64], _label: Option<Label>) -> Result<()> {
        if self.shape.admit(x)? {
            self.perturb_workspace(x.len());
            self.plant_trees();
        }
        for t in 0..self.trees.len() {
            let mut path = Vec::with_capacity(self.params.depth as usize + 1);
            self.walk(t, x, |node, _| {
                path.push(node);
                true
            });
            let nodes = &mut self.trees[t].nodes;
            for node in path {
                nodes.entry(node).or_default().latest += 1;
            }
        }
        self.in_window += 1;
        if self.in_window == self.params.window {
            self.rotate_window();
        }
        self.shape.record();
        Ok(())
    }

    fn score_partial(&self, x: &[f64]) -> Result<f64> {
        self.shape.check(x)?;
        if self.trees.is_empty() {
            return Ok(0.0);
        }
        // Until the first window closes there is no reference profile; the
        // partial latest window stands in for it.
        let cold = self.windows_completed == 0;
        let size_limit = if cold {
            SIZE_LIMIT_FRACTION * self.in_window as f64
        } else {
            SIZE_LIMIT_FRACTION * self.params.window as f64
        };
        let max_depth = self.params.depth;
        let mut mass = 0.0;
        for t in 0..self.trees.len() {
            let nodes = &self.trees[t].nodes;
            self.walk(t, x, |node, depth| {
                let r = nodes
                    .get(&node)
                    .map_or(0, |m| if cold { m.latest } else { m.reference })
                    as f64;
                if depth == max_depth || r < size_limit {
                    mass += r * 2f64.powi(depth as i32);
                    return false;
                }
                true
            });
        }
        Ok(-mass)
    }

    fn instances_seen(&self) -> u64 {
        self.shape.seen()
    }

    fn dim(&self) -> Option<usize> {
        self.shape.dim()
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn retained_instances(&self) -> usize {
        0
    }

    fn memory_budget(&self) -> usize {
        0
    }
}

impl Persist for HalfSpaceTrees {
    const KIND: &'static str = "hst";
}
