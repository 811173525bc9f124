use num::One;

use super::{
    exact_cluster, find_groups, gonzalez_cluster, group_distances, merge_groups, AbstractionError, Clustering,
    DeltaMode, GroupDistances, Objective, SlapGroup, SlapInstance, SlotCosts,
};
use crate::bounds::psi_bracket;
use crate::crswf::{find_leaf_bijection, verify_crswf, AbstractionMap, ErrorReport};
use crate::efg::GameTree;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Gonzalez,
    Exact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ObjectiveKind {
    #[default]
    Diameter,
    Weighted,
}

/// How to abstract one level: every group gets `k` clusters (capped at its size).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelPlan {
    pub level: usize,
    pub k: usize,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub delta: DeltaMode,
}

impl LevelPlan {
    pub fn new(level: usize, k: usize) -> Self {
        LevelPlan {
            level,
            k,
            method: Method::Gonzalez,
            objective: ObjectiveKind::Diameter,
            delta: DeltaMode::Fixed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub groups: Vec<SlapGroup>,
    pub distances: Vec<GroupDistances>,
    pub instances: Vec<SlapInstance>,
    pub clusterings: Vec<Clustering>,
    pub map: AbstractionMap,
    pub report: ErrorReport,
}

/// The clustering instance of a group.
pub fn group_instance(game: &GameTree, group: &SlapGroup, d: &GroupDistances, objective: ObjectiveKind) -> SlapInstance {
    SlapInstance {
        labels: group.heads().map(|h| game.infosets[h].id.clone()).collect(),
        dist: d.dist.clone(),
        weights: d.weights.clone(),
        objective: match objective {
            ObjectiveKind::Diameter => Objective::Diameter,
            ObjectiveKind::Weighted => Objective::Weighted,
        },
        costs: Some(SlotCosts {
            slot: d.slot_cost.clone(),
            trees: d.trees.clone(),
        }),
    }
}

/// Merges each group by its clustering on top of `base`, records the
/// scalings used, verifies the result and checks that its pair errors give
/// back the costs the clustering saw.
pub fn build_abstraction(
    game: &GameTree,
    base: &AbstractionMap,
    parts: &[(&SlapGroup, &Clustering, &GroupDistances)],
) -> Result<(AbstractionMap, ErrorReport), AbstractionError> {
    let merges: Vec<(&SlapGroup, &[Vec<usize>])> = parts.iter().map(|(g, c, _)| (*g, c.clusters.as_slice())).collect();
    let mut map = merge_groups(game, base, &merges);
    for (group, clustering, d) in parts {
        for cluster in &clustering.clusters {
            for &x in cluster {
                for &y in cluster {
                    for k in 0..group.num_slots() {
                        let delta = &d.deltas[k][x][y];
                        if x != y && !delta.is_one() {
                            map.set_delta(game, group.candidates[x][k], group.candidates[y][k], delta.clone())
                                .expect("pair shares a class");
                        }
                    }
                }
            }
        }
    }
    let report = verify_crswf(game, &map)?;
    check_consistency(game, &report, parts)?;
    Ok((map, report))
}

/// Every intra-cluster ψ bracket recomputed from `report` must match the
/// slot cost used for clustering within 1e-9.
pub fn check_consistency(
    game: &GameTree,
    report: &ErrorReport,
    parts: &[(&SlapGroup, &Clustering, &GroupDistances)],
) -> Result<(), AbstractionError> {
    let chance = game.chance_reach_all();
    for (group, clustering, d) in parts {
        for cluster in &clustering.clusters {
            for &x in cluster {
                for &y in cluster.iter().filter(|&&y| y != x) {
                    for k in 0..group.num_slots() {
                        let (a, b) = (group.candidates[x][k], group.candidates[y][k]);
                        let name = |i: usize| game.infosets[i].id.clone();
                        let found = report.pair(a, b).map_or(f64::NAN, |p| psi_bracket(game, &chance, p));
                        let expected = d.slot_cost[k][x][y];
                        if !((found - expected).abs() <= 1e-9) {
                            return Err(AbstractionError::Inconsistent {
                                first: name(a),
                                second: name(b),
                                expected,
                                found,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn merge_all(game: &GameTree, base: &AbstractionMap, groups: &[SlapGroup]) -> AbstractionMap {
    let all: Vec<Vec<Vec<usize>>> = groups.iter().map(|g| vec![(0..g.len()).collect()]).collect();
    let merges: Vec<(&SlapGroup, &[Vec<usize>])> = groups.iter().zip(&all).map(|(g, c)| (g, c.as_slice())).collect();
    merge_groups(game, base, &merges)
}

/// Structural groups split until every candidate has leaf bijections with
/// the rest of its group, slot by slot, under the map merging all groups.
/// Candidates of look-alike subtrees can still differ in the other
/// players' sets their leaves pass through.
fn mergeable_groups(game: &GameTree, base: &AbstractionMap, level: usize) -> (Vec<SlapGroup>, AbstractionMap) {
    let mut groups = find_groups(game, level);
    loop {
        let aligned = merge_all(game, base, &groups);
        let fits = |a: &[usize], b: &[usize]| {
            a.iter().zip(b).all(|(&x, &y)| {
                find_leaf_bijection(game, &aligned, x, y).is_ok() && find_leaf_bijection(game, &aligned, y, x).is_ok()
            })
        };
        let mut split = false;
        let mut next = Vec::with_capacity(groups.len());
        for g in &groups {
            let mut rest = g.candidates.clone();
            while !rest.is_empty() {
                let reference = rest.remove(0);
                let (same, other): (Vec<_>, Vec<_>) = rest.into_iter().partition(|c| fits(&reference, c));
                split |= !other.is_empty();
                if !same.is_empty() {
                    let mut candidates = vec![reference];
                    candidates.extend(same);
                    next.push(SlapGroup {
                        player: g.player,
                        level: g.level,
                        candidates,
                    });
                }
                rest = other;
            }
        }
        if !split {
            return (groups, aligned);
        }
        next.sort_by_key(|g| g.candidates[0][0]);
        groups = next;
    }
}

/// Distances of every group at the plan's level, with leaves aligned under
/// the map that merges all groups.
pub fn level_distances(
    game: &GameTree,
    base: &AbstractionMap,
    level: usize,
    delta: DeltaMode,
) -> Result<(Vec<SlapGroup>, Vec<GroupDistances>), AbstractionError> {
    let (groups, aligned) = mergeable_groups(game, base, level);
    if groups.is_empty() {
        return Err(AbstractionError::NoGroups(level));
    }
    let distances = groups
        .iter()
        .map(|g| group_distances(game, &aligned, g, delta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((groups, distances))
}

/// Finds, measures, clusters and merges every group of one level.
pub fn solve_level(game: &GameTree, base: &AbstractionMap, plan: &LevelPlan) -> Result<LevelSolution, AbstractionError> {
    let (groups, distances) = level_distances(game, base, plan.level, plan.delta)?;
    let instances: Vec<SlapInstance> = groups
        .iter()
        .zip(&distances)
        .map(|(g, d)| group_instance(game, g, d, plan.objective))
        .collect();
    let clusterings = instances
        .iter()
        .map(|inst| {
            let k = plan.k.clamp(1, inst.len());
            match plan.method {
                Method::Gonzalez => gonzalez_cluster(inst, k),
                Method::Exact => exact_cluster(inst, k),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<_> = groups
        .iter()
        .zip(&clusterings)
        .zip(&distances)
        .map(|((g, c), d)| (g, c, d))
        .collect();
    let (map, report) = build_abstraction(game, base, &parts)?;
    Ok(LevelSolution {
        groups,
        distances,
        instances,
        clusterings,
        map,
        report,
    })
}
