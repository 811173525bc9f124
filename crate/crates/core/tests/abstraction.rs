use crswf::abstraction::{
    build_abstraction, exact_cluster, find_groups, gonzalez_cluster, group_instance, level_distances, merge_groups, solve_level,
    validate_metric, Clustering, DeltaMode, LevelPlan, Method, MetricViolation, ObjectiveKind, SlapInstance,
};
use crswf::bounds::strategy_agnostic_bound;
use crswf::crswf::{verify_crswf, AbstractionMap};
use crswf::efg::{GameTree, Rational};
use crswf::games::{make_cdrp, make_drp, make_figure1_game, make_random_game, make_scaling_counterexample, DrpSpec, RandomGameSpec};
use proptest::prelude::*;

/// Every partition of 0..n into at most k blocks.
fn partitions(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, k: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            go(i + 1, n, k, cur, out);
            cur[b].pop();
        }
        if cur.len() < k {
            cur.push(vec![i]);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn brute_force(inst: &SlapInstance, k: usize) -> f64 {
    partitions(inst.len(), k)
        .iter()
        .map(|p| inst.evaluate(p))
        .fold(f64::INFINITY, f64::min)
}

fn points_instance(points: &[Vec<f64>]) -> SlapInstance {
    let dist = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
                .collect()
        })
        .collect();
    SlapInstance::new((0..points.len()).map(|i| i.to_string()).collect(), dist)
}

/// Sum of player 1's four dice from a set id like `P1:2.5:cc/`.
fn roll_sum(id: &str) -> u32 {
    id.split(':').nth(1).unwrap().split('.').map(|d| d.parse::<u32>().unwrap()).sum()
}

#[test]
fn scaling_counterexample_breaks_the_triangle_only_with_free_delta() {
    let g = make_scaling_counterexample();
    let base = AbstractionMap::identity(&g);
    let (groups, d) = level_distances(&g, &base, 2, DeltaMode::Optimized).unwrap();
    assert_eq!(groups.len(), 1);
    let ids: Vec<&str> = groups[0].heads().map(|h| g.infosets[h].id.as_str()).collect();
    assert_eq!(ids, ["I1", "I2", "I3"]);
    let dist = &d[0].dist;
    // d = 2·0.1·ε^R at the low-probability node.
    for (x, y, eps) in [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)] {
        assert!((dist[x][y] - 0.2 * eps).abs() < 1e-9, "{x}{y}: {}", dist[x][y]);
    }
    let deltas: Vec<Rational> = [(1, 0), (2, 1), (2, 0)].iter().map(|&(x, y)| d[0].deltas[0][x][y].clone()).collect();
    assert_eq!(deltas, [5, 2, 10].map(|v| Rational::from_integer(v.into())));
    let inst = group_instance(&g, &groups[0], &d[0], ObjectiveKind::Diameter);
    assert_eq!(validate_metric(&inst).violation, Some(MetricViolation::Triangle(0, 1, 2)));
    let (_, fixed) = level_distances(&g, &base, 2, DeltaMode::Fixed).unwrap();
    assert!(validate_metric(&group_instance(&g, &groups[0], &fixed[0], ObjectiveKind::Diameter)).holds);
}

#[test]
fn drp_distances_follow_dice_sums() {
    let g = make_drp(4).unwrap();
    let (groups, d) = level_distances(&g, &AbstractionMap::identity(&g), 2, DeltaMode::Fixed).unwrap();
    let group = &groups[0];
    assert_eq!(group.len(), 16);
    let sums: Vec<u32> = group.heads().map(|h| roll_sum(&g.infosets[h].id)).collect();
    let dist = &d[0].dist;
    for x in 0..16 {
        for y in 0..16 {
            assert_eq!(dist[x][y] == 0.0, sums[x] == sums[y], "{x} {y}");
            for z in 0..16 {
                // Farther along the line of sums means farther apart.
                if (sums[x] <= sums[y] && sums[y] < sums[z]) || (sums[x] >= sums[y] && sums[y] > sums[z]) {
                    assert!(dist[x][y] < dist[x][z], "{} {} {}", sums[x], sums[y], sums[z]);
                }
            }
        }
    }
    assert!(validate_metric(&group_instance(&g, group, &d[0], ObjectiveKind::Weighted)).holds);
}

#[test]
fn drp_exact_objective_is_the_game_bound() {
    let g = make_drp(4).unwrap();
    let base = AbstractionMap::identity(&g);
    let (groups, d) = level_distances(&g, &base, 2, DeltaMode::Fixed).unwrap();
    let inst = group_instance(&g, &groups[0], &d[0], ObjectiveKind::Weighted);
    let mut last = f64::INFINITY;
    for k in 1..=8 {
        let c = exact_cluster(&inst, k).unwrap();
        let (map, report) = build_abstraction(&g, &base, &[(&groups[0], &c, &d[0])]).unwrap();
        let bound = strategy_agnostic_bound(&g, &map, &report).unwrap().epsilon;
        assert!((bound - c.objective).abs() < 1e-9, "k={k}: {bound} {}", c.objective);
        assert!(c.objective <= last + 1e-12);
        last = c.objective;
        if k >= 7 {
            assert!(report.is_lossless());
        }
    }
}

#[test]
fn figure1_groups_rebuild_the_figure_map() {
    let (g, figure) = make_figure1_game();
    let groups: Vec<_> = [1, 2].into_iter().flat_map(|level| find_groups(&g, level)).collect();
    assert_eq!(groups.len(), 3);
    let all: Vec<Vec<Vec<usize>>> = groups.iter().map(|gr| vec![(0..gr.len()).collect()]).collect();
    let merges: Vec<_> = groups.iter().zip(&all).map(|(gr, c)| (gr, c.as_slice())).collect();
    let map = merge_groups(&g, &AbstractionMap::identity(&g), &merges);
    assert!(verify_crswf(&g, &map).is_ok());
    let mut got: Vec<Vec<usize>> = map.classes().to_vec();
    let mut want: Vec<Vec<usize>> = figure.classes().to_vec();
    got.sort();
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn singleton_clustering_is_the_identity() {
    let g = make_drp(3).unwrap();
    let base = AbstractionMap::identity(&g);
    let (groups, d) = level_distances(&g, &base, 2, DeltaMode::Fixed).unwrap();
    let clusterings: Vec<Clustering> = groups
        .iter()
        .zip(&d)
        .map(|(gr, dd)| gonzalez_cluster(&group_instance(&g, gr, dd, ObjectiveKind::Diameter), gr.len()).unwrap())
        .collect();
    let parts: Vec<_> = groups.iter().zip(&clusterings).zip(&d).map(|((a, b), c)| (a, b, c)).collect();
    let (map, report) = build_abstraction(&g, &base, &parts).unwrap();
    assert!(map.is_identity());
    assert!(report.pairs.is_empty());
}

#[test]
fn lossless_cdrp_abstraction_at_zero_correlation() {
    let g = make_cdrp(&DrpSpec::plain(4)).unwrap();
    let mut plan = LevelPlan::new(2, 7);
    plan.method = Method::Exact;
    plan.objective = ObjectiveKind::Weighted;
    let sol = solve_level(&g, &AbstractionMap::identity(&g), &plan).unwrap();
    assert!(sol.clusterings.iter().all(|c| c.objective == 0.0));
    assert!(sol.report.is_lossless());
    assert!(sol.map.num_classes() < g.infosets.len());
}

fn random_game(seed: u64) -> GameTree {
    let mut spec = RandomGameSpec::new(seed);
    spec.depth = 1 + seed as usize % 3;
    spec.members = 3 + seed as usize % 3;
    spec.groups = 1 + seed as usize % 2;
    make_random_game(&spec).game
}

#[test]
fn random_game_groups_match_the_generator() {
    for seed in 0..20 {
        let mut spec = RandomGameSpec::new(seed);
        spec.depth = 1 + seed as usize % 3;
        spec.groups = 1 + seed as usize % 2;
        let r = make_random_game(&spec);
        let canon = |mut gs: Vec<Vec<Vec<usize>>>| {
            for c in gs.iter_mut().flatten() {
                c.sort_unstable();
            }
            gs.sort();
            gs
        };
        let found = canon(find_groups(&r.game, 2).into_iter().map(|g| g.candidates).collect());
        let want = canon(r.slots.clone());
        assert_eq!(found, want, "seed {seed}");
    }
}

#[test]
fn look_alike_groups_are_split_by_mergeability() {
    // Both generator groups share one template shape here.
    let mut spec = RandomGameSpec::new(105);
    spec.depth = 1;
    spec.groups = 2;
    spec.members = 3;
    let r = make_random_game(&spec);
    assert_eq!(find_groups(&r.game, 2).len(), 1);
    let (groups, _) = level_distances(&r.game, &AbstractionMap::identity(&r.game), 2, DeltaMode::Fixed).unwrap();
    let mut got: Vec<Vec<Vec<usize>>> = groups.into_iter().map(|g| g.candidates).collect();
    got.sort();
    let mut want = r.slots.clone();
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn random_game_abstractions_round_trip() {
    for seed in 0..12 {
        let g = random_game(seed);
        for (method, objective) in [(Method::Gonzalez, ObjectiveKind::Diameter), (Method::Exact, ObjectiveKind::Weighted)] {
            let plan = LevelPlan {
                level: 2,
                k: 2,
                method,
                objective,
                delta: DeltaMode::Fixed,
            };
            let sol = solve_level(&g, &AbstractionMap::identity(&g), &plan).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            for inst in &sol.instances {
                assert!(validate_metric(inst).holds, "seed {seed}");
            }
            assert!(verify_crswf(&g, &sol.map).is_ok());
        }
    }
}

#[test]
fn optimized_delta_maps_verify() {
    for seed in 0..6 {
        let g = random_game(seed);
        let plan = LevelPlan {
            level: 2,
            k: 1,
            method: Method::Exact,
            objective: ObjectiveKind::Diameter,
            delta: DeltaMode::Optimized,
        };
        solve_level(&g, &AbstractionMap::identity(&g), &plan).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_matches_exhaustive_search(
        pts in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 2), 2..8),
        w in prop::collection::vec(0.01f64..1.0, 8),
        weighted in any::<bool>(),
    ) {
        let mut inst = points_instance(&pts);
        if weighted {
            inst.weights = w[..inst.len()].to_vec();
            inst.objective = crswf::abstraction::Objective::Weighted;
        }
        let mut last = f64::INFINITY;
        for k in 1..=inst.len() {
            let e = exact_cluster(&inst, k).unwrap();
            let oracle = brute_force(&inst, k);
            prop_assert!((e.objective - oracle).abs() < 1e-9, "k={} {} {}", k, e.objective, oracle);
            prop_assert!(e.objective <= last + 1e-12);
            last = e.objective;
            prop_assert!((inst.evaluate(&e.clusters) - e.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn gonzalez_is_within_twice_optimal(pts in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 2..10)) {
        let inst = points_instance(&pts);
        prop_assert!(validate_metric(&inst).holds);
        for k in 1..=inst.len() {
            let gz = gonzalez_cluster(&inst, k).unwrap();
            let covered: usize = gz.clusters.iter().map(Vec::len).sum();
            prop_assert_eq!(covered, inst.len());
            prop_assert!(gz.objective <= 2.0 * brute_force(&inst, k) + 1e-9);
        }
    }
}
