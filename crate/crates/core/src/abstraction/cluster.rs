use super::{AbstractionError, Clustering, Objective, SlapInstance, EXACT_LIMIT};

const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricViolation {
    /// d(x,x) ≠ 0 or d(x,y) < 0.
    Nonnegativity(usize, usize),
    Symmetry(usize, usize),
    /// d(x,z) > d(x,y) + d(y,z).
    Triangle(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricCheck {
    pub holds: bool,
    pub violation: Option<MetricViolation>,
    /// Zero-distance classes merged before the checks.
    pub merged: Vec<Vec<usize>>,
}

fn zero_classes(inst: &SlapInstance, twins: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..inst.len() {
        match classes.iter_mut().find(|c| twins(c[0], x)) {
            Some(c) => c.push(x),
            None => classes.push(vec![x]),
        }
    }
    classes
}

/// Checks the metric axioms after merging zero-distance items.
pub fn validate_metric(inst: &SlapInstance) -> MetricCheck {
    let d = &inst.dist;
    let n = inst.len();
    let merged = zero_classes(inst, |a, b| d[a][b] == 0.0 && d[b][a] == 0.0);
    let check = || {
        for x in 0..n {
            if d[x][x] != 0.0 {
                return Some(MetricViolation::Nonnegativity(x, x));
            }
            for y in 0..n {
                if d[x][y] < 0.0 || d[x][y].is_nan() {
                    return Some(MetricViolation::Nonnegativity(x, y));
                }
                if d[x][y] != d[y][x] {
                    return Some(MetricViolation::Symmetry(x.min(y), x.max(y)));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if d[x][z] > d[x][y] + d[y][z] + TRIANGLE_TOL {
                        return Some(MetricViolation::Triangle(x, y, z));
                    }
                }
            }
        }
        None
    };
    let violation = check();
    MetricCheck {
        holds: violation.is_none(),
        violation,
        merged,
    }
}

fn check_budget(inst: &SlapInstance, k: usize) -> Result<(), AbstractionError> {
    if k == 0 || k > inst.len() {
        return Err(AbstractionError::Budget { k, n: inst.len() });
    }
    Ok(())
}

/// Farthest-point traversal from item 0, then nearest-center assignment.
pub fn gonzalez_cluster(inst: &SlapInstance, k: usize) -> Result<Clustering, AbstractionError> {
    check_budget(inst, k)?;
    let d = &inst.dist;
    let n = inst.len();
    let mut centers = vec![0];
    let mut near: Vec<f64> = (0..n).map(|x| d[x][0]).collect();
    while centers.len() < k {
        let far = (0..n)
            .filter(|x| !centers.contains(x))
            .fold(None, |b: Option<usize>, x| match b {
                Some(b) if near[b] >= near[x] => Some(b),
                _ => Some(x),
            })
            .unwrap();
        centers.push(far);
        for x in 0..n {
            near[x] = near[x].min(d[x][far]);
        }
    }
    let mut order = centers.clone();
    order.sort_unstable();
    let mut clusters = vec![Vec::new(); k];
    for x in 0..n {
        let c = match order.binary_search(&x) {
            Ok(c) => c,
            Err(_) => (0..k).fold(0, |b, c| if d[x][order[c]] < d[x][order[b]] { c } else { b }),
        };
        clusters[c].push(x);
    }
    Ok(Clustering::new(inst, clusters))
}

/// Optimal partition into at most k clusters under the instance objective.
pub fn exact_cluster(inst: &SlapInstance, k: usize) -> Result<Clustering, AbstractionError> {
    exact_cluster_limited(inst, k, EXACT_LIMIT)
}

/// Items with identical distance and cost rows at distance zero: keeping
/// them together never hurts.
fn twins(inst: &SlapInstance, a: usize, b: usize) -> bool {
    let same = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(p, q)| (p - q).abs() <= 1e-12);
    if inst.dist[a][b] != 0.0 || !same(&inst.dist[a], &inst.dist[b]) {
        return false;
    }
    match &inst.costs {
        None => true,
        Some(c) => c.slot.iter().all(|s| {
            s[a][b] == 0.0
                && s[b][a] == 0.0
                && same(&s[a], &s[b])
                && (0..inst.len()).all(|y| (s[y][a] - s[y][b]).abs() <= 1e-12)
        }),
    }
}

pub fn exact_cluster_limited(inst: &SlapInstance, k: usize, limit: usize) -> Result<Clustering, AbstractionError> {
    check_budget(inst, k)?;
    let groups = zero_classes(inst, |a, b| twins(inst, a, b));
    let m = groups.len();
    if m > limit {
        return Err(AbstractionError::TooLarge { n: m, limit });
    }
    if k >= m {
        return Ok(Clustering::new(inst, groups));
    }
    let expand = |parts: &[Vec<usize>]| -> Vec<Vec<usize>> {
        parts
            .iter()
            .map(|p| p.iter().flat_map(|&g| groups[g].iter().copied()).collect())
            .collect()
    };
    let parts = if inst.objective.separable() && m <= 16 {
        subset_dp(inst, &groups, k)
    } else {
        let incumbent = gonzalez_cluster(inst, k)?;
        branch_and_bound(inst, &groups, k, incumbent)
    };
    Ok(Clustering::new(inst, expand(&parts)))
}

/// Cost of one cluster of super-items and how cluster costs combine.
fn cluster_cost(inst: &SlapInstance, members: &[usize]) -> f64 {
    let costs = members.iter().map(|&x| inst.item_cost(x, members));
    match inst.objective {
        Objective::Weighted => costs.zip(members).map(|(c, &x)| c * inst.weights[x]).sum(),
        _ => costs.fold(0.0, f64::max),
    }
}

fn subset_dp(inst: &SlapInstance, groups: &[Vec<usize>], k: usize) -> Vec<Vec<usize>> {
    let m = groups.len();
    let full = (1usize << m) - 1;
    let weighted = inst.objective == Objective::Weighted;
    let join = |a: f64, b: f64| if weighted { a + b } else { a.max(b) };
    let cost: Vec<f64> = (0..=full)
        .map(|t| {
            let members: Vec<usize> = (0..m).filter(|g| t >> g & 1 == 1).flat_map(|g| groups[g].iter().copied()).collect();
            if members.is_empty() {
                0.0
            } else {
                cluster_cost(inst, &members)
            }
        })
        .collect();
    // f[j][S]: best objective covering S with at most j clusters; pick[j][S] the cluster holding S's lowest item.
    let mut f = vec![vec![f64::INFINITY; full + 1]; k + 1];
    let mut pick = vec![vec![0usize; full + 1]; k + 1];
    f[0][0] = 0.0;
    for j in 1..=k {
        f[j][0] = 0.0;
        for s in 1..=full {
            let low = s & s.wrapping_neg();
            let rest = s ^ low;
            let mut sub = rest;
            let (mut best, mut arg) = (f64::INFINITY, 0);
            loop {
                let t = sub | low;
                let v = join(cost[t], f[j - 1][s ^ t]);
                if v < best {
                    best = v;
                    arg = t;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            f[j][s] = best;
            pick[j][s] = arg;
        }
    }
    let mut parts = Vec::new();
    let (mut s, mut j) = (full, k);
    while s != 0 {
        let t = pick[j][s];
        parts.push((0..m).filter(|g| t >> g & 1 == 1).collect());
        s ^= t;
        j -= 1;
    }
    parts
}

struct Search<'a> {
    inst: &'a SlapInstance,
    groups: &'a [Vec<usize>],
    k: usize,
    /// Clusters as lists of original items.
    open: Vec<Vec<usize>>,
    parts: Vec<Vec<usize>>,
    costs: Vec<f64>,
    best: f64,
    best_parts: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn bound(&self) -> f64 {
        match &self.inst.objective {
            Objective::Tree(t) => t.eval(&self.costs),
            Objective::Weighted => self.costs.iter().zip(&self.inst.weights).map(|(c, w)| c * w).sum(),
            Objective::Diameter => self.costs.iter().copied().fold(0.0, f64::max),
        }
    }

    fn place(&mut self, c: usize, g: usize) -> Vec<(usize, f64)> {
        let members = &self.groups[g];
        self.open[c].extend(members.iter().copied());
        self.parts[c].push(g);
        let mut undo = Vec::new();
        for &x in &self.open[c] {
            undo.push((x, self.costs[x]));
            self.costs[x] = self.inst.item_cost(x, &self.open[c]);
        }
        undo
    }

    fn unplace(&mut self, c: usize, g: usize, undo: Vec<(usize, f64)>) {
        let len = self.open[c].len() - self.groups[g].len();
        self.open[c].truncate(len);
        self.parts[c].pop();
        for (x, v) in undo {
            self.costs[x] = v;
        }
    }

    fn run(&mut self, g: usize) {
        if g == self.groups.len() {
            let v = self.bound();
            if v < self.best {
                self.best = v;
                self.best_parts = self.parts.iter().filter(|p| !p.is_empty()).cloned().collect();
            }
            return;
        }
        let used = self.parts.iter().filter(|p| !p.is_empty()).count();
        for c in 0..(used + 1).min(self.k) {
            let undo = self.place(c, g);
            if self.bound() < self.best {
                self.run(g + 1);
            }
            self.unplace(c, g, undo);
        }
    }
}

fn branch_and_bound(inst: &SlapInstance, groups: &[Vec<usize>], k: usize, incumbent: Clustering) -> Vec<Vec<usize>> {
    let group_of: Vec<usize> = {
        let mut a = vec![0; inst.len()];
        for (g, members) in groups.iter().enumerate() {
            for &x in members {
                a[x] = g;
            }
        }
        a
    };
    let start: Vec<Vec<usize>> = incumbent
        .clusters
        .iter()
        .map(|c| {
            let mut gs: Vec<usize> = c.iter().map(|&x| group_of[x]).collect();
            gs.dedup();
            gs
        })
        .collect();
    let mut s = Search {
        inst,
        groups,
        k,
        open: vec![Vec::new(); k],
        parts: vec![Vec::new(); k],
        costs: vec![0.0; inst.len()],
        best: incumbent.objective + 1e-12,
        best_parts: start,
    };
    s.run(0);
    s.best_parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::ObjectiveTree;

    fn line(points: &[f64]) -> SlapInstance {
        let dist = points
            .iter()
            .map(|a| points.iter().map(|b| (a - b).abs()).collect())
            .collect();
        SlapInstance::new(points.iter().map(|p| p.to_string()).collect(), dist)
    }

    #[test]
    fn gonzalez_extremes() {
        let inst = line(&[0.0, 1.0, 5.0, 6.0, 9.0]);
        assert_eq!(gonzalez_cluster(&inst, 5).unwrap().objective, 0.0);
        assert_eq!(gonzalez_cluster(&inst, 1).unwrap().objective, 9.0);
        // Centers 0 and 9; 5 is closer to 9.
        let c = gonzalez_cluster(&inst, 2).unwrap();
        assert_eq!(c.clusters, vec![vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(c.objective, 4.0);
        let c = gonzalez_cluster(&line(&[0.0, 4.0, 3.0, 8.0]), 2).unwrap();
        // 4 is equidistant from centers 0 and 8 and joins the lower one.
        assert_eq!(c.clusters, vec![vec![0, 1, 2], vec![3]]);
        assert!(matches!(gonzalez_cluster(&inst, 0), Err(AbstractionError::Budget { .. })));
        assert!(matches!(gonzalez_cluster(&inst, 6), Err(AbstractionError::Budget { .. })));
    }

    #[test]
    fn exact_beats_gonzalez_on_a_line() {
        let inst = line(&[0.0, 3.0, 4.0, 8.0]);
        assert_eq!(gonzalez_cluster(&inst, 2).unwrap().objective, 4.0);
        let c = exact_cluster(&inst, 2).unwrap();
        assert_eq!(c.objective, 4.0);
        let inst = line(&[0.0, 2.0, 3.0, 5.0, 10.0]);
        assert_eq!(gonzalez_cluster(&inst, 2).unwrap().objective, 5.0);
        assert_eq!(exact_cluster(&inst, 2).unwrap().objective, 5.0);
        assert_eq!(exact_cluster(&inst, 3).unwrap().objective, 2.0);
    }

    #[test]
    fn metric_checks() {
        assert!(validate_metric(&line(&[3.0])).holds);
        let mut inst = line(&[0.0, 1.0, 2.0]);
        assert!(validate_metric(&inst).holds);
        inst.dist[0][2] = 2.5;
        inst.dist[2][0] = 2.5;
        assert_eq!(validate_metric(&inst).violation, Some(MetricViolation::Triangle(0, 1, 2)));
        inst.dist[2][0] = 2.0;
        assert_eq!(validate_metric(&inst).violation, Some(MetricViolation::Symmetry(0, 2)));
        let dup = line(&[0.0, 0.0, 1.0]);
        let check = validate_metric(&dup);
        assert!(check.holds);
        assert_eq!(check.merged, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn tree_objective_search_matches_subset_search() {
        let mut inst = line(&[0.0, 0.5, 2.0, 3.5, 4.0, 7.0, 7.5]);
        inst.weights = vec![0.1, 0.3, 0.2, 0.05, 0.15, 0.1, 0.1];
        inst.objective = Objective::Weighted;
        let tree = SlapInstance {
            objective: Objective::Tree(ObjectiveTree::Sum(
                inst.weights.iter().enumerate().map(|(i, &w)| (w, ObjectiveTree::Leaf(i))).collect(),
            )),
            ..inst.clone()
        };
        for k in 1..=7 {
            let a = exact_cluster(&inst, k).unwrap();
            let b = exact_cluster(&tree, k).unwrap();
            assert!((a.objective - b.objective).abs() < 1e-12, "k={k}: {} {}", a.objective, b.objective);
        }
    }

    #[test]
    fn twins_are_grouped_before_search() {
        let inst = line(&[0.0, 0.0, 0.0, 4.0, 4.0]);
        let c = exact_cluster_limited(&inst, 2, 2).unwrap();
        assert_eq!(c.clusters, vec![vec![0, 1, 2], vec![3, 4]]);
        assert_eq!(c.objective, 0.0);
        assert!(matches!(exact_cluster_limited(&line(&[0.0, 1.0, 2.0]), 1, 2), Err(AbstractionError::TooLarge { .. })));
    }
}
