//! Single-level abstraction problems: candidate groups, distances, metric
//! checks and clustering into abstract information sets.

mod build;
mod cluster;
mod distance;
mod groups;

use thiserror::Error;

use crate::crswf::CrswfError;

pub use build::{
    build_abstraction, check_consistency, group_instance, level_distances, solve_level, LevelPlan, LevelSolution, Method,
    ObjectiveKind,
};
pub use cluster::{exact_cluster, exact_cluster_limited, gonzalez_cluster, validate_metric, MetricCheck, MetricViolation};
pub use distance::{group_distances, DeltaMode, GroupDistances};
pub use groups::{find_groups, is_head, merge_groups, SlapGroup};

/// Largest number of distinct items [`exact_cluster`] accepts by default.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum AbstractionError {
    #[error(transparent)]
    Crswf(#[from] CrswfError),
    #[error("cluster budget {k} outside 1..={n}")]
    Budget { k: usize, n: usize },
    #[error("{n} distinct items exceed the exact-search limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("distance {first}-{second}: clustering used {expected}, report gives {found}")]
    Inconsistent {
        first: String,
        second: String,
        expected: f64,
        found: f64,
    },
    #[error("no candidate groups at level {0}")]
    NoGroups(usize),
}

/// Root error as a function of per-item costs.
#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveTree {
    Leaf(usize),
    Max(Vec<ObjectiveTree>),
    Sum(Vec<(f64, ObjectiveTree)>),
}

impl ObjectiveTree {
    pub fn eval(&self, values: &[f64]) -> f64 {
        match self {
            ObjectiveTree::Leaf(i) => values[*i],
            ObjectiveTree::Max(c) => c.iter().map(|t| t.eval(values)).fold(0.0, f64::max),
            ObjectiveTree::Sum(c) => c.iter().map(|(w, t)| w * t.eval(values)).sum(),
        }
    }
}

/// How item costs combine into the clustering objective.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Objective {
    /// Largest item cost; the largest cluster diameter for plain instances.
    #[default]
    Diameter,
    /// Σ weight·cost.
    Weighted,
    Tree(ObjectiveTree),
}

impl Objective {
    fn separable(&self) -> bool {
        !matches!(self, Objective::Tree(_))
    }
}

/// Per-slot costs of multi-slot candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotCosts {
    /// `slot[k][x][y]`: cost charged to x's slot k for sharing a cluster with y.
    pub slot: Vec<Vec<Vec<f64>>>,
    /// Per item: its cost from the per-slot maxima over its cluster.
    pub trees: Vec<ObjectiveTree>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlapInstance {
    pub labels: Vec<String>,
    pub dist: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub objective: Objective,
    /// Costs that replace `max_y dist[x][y]` as an item's cost when present.
    pub costs: Option<SlotCosts>,
}

impl SlapInstance {
    /// Plain instance: unit weights, diameter objective.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Self {
        let n = dist.len();
        SlapInstance {
            labels,
            dist,
            weights: vec![1.0; n],
            objective: Objective::Diameter,
            costs: None,
        }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Cost of item x when clustered with `cluster` (which may include x).
    pub fn item_cost(&self, x: usize, cluster: &[usize]) -> f64 {
        match &self.costs {
            None => cluster.iter().map(|&y| self.dist[x][y]).fold(0.0, f64::max),
            Some(c) => {
                let m: Vec<f64> = c
                    .slot
                    .iter()
                    .map(|s| cluster.iter().filter(|&&y| y != x).map(|&y| s[x][y]).fold(0.0, f64::max))
                    .collect();
                c.trees[x].eval(&m)
            }
        }
    }

    fn combine(&self, costs: &[f64]) -> f64 {
        match &self.objective {
            Objective::Diameter => costs.iter().copied().fold(0.0, f64::max),
            Objective::Weighted => costs.iter().zip(&self.weights).map(|(c, w)| c * w).sum(),
            Objective::Tree(t) => t.eval(costs),
        }
    }

    /// Objective of a partition; items left out cost nothing.
    pub fn evaluate(&self, clusters: &[Vec<usize>]) -> f64 {
        let mut costs = vec![0.0; self.len()];
        for c in clusters {
            for &x in c {
                costs[x] = self.item_cost(x, c);
            }
        }
        self.combine(&costs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Clusters of item indices, each sorted, ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
    pub objective: f64,
}

impl Clustering {
    /// Normalizes the order and recomputes objective and representatives.
    pub fn new(instance: &SlapInstance, mut clusters: Vec<Vec<usize>>) -> Self {
        clusters.retain(|c| !c.is_empty());
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_by_key(|c| c[0]);
        let representatives = clusters
            .iter()
            .map(|c| {
                let radius = |x: usize| c.iter().map(|&y| instance.dist[x][y]).fold(0.0, f64::max);
                c.iter().copied().fold(c[0], |b, x| if radius(x) < radius(b) { x } else { b })
            })
            .collect();
        let objective = instance.evaluate(&clusters);
        Clustering {
            clusters,
            representatives,
            objective,
        }
    }

    /// Cluster index of every item.
    pub fn assignment(&self, n: usize) -> Vec<usize> {
        let mut a = vec![usize::MAX; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &x in members {
                a[x] = c;
            }
        }
        a
    }
}
