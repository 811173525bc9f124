//! Random small games with designated groups of mergeable information sets.
//!
//! Every group member is a clone of one template subtree hanging below the
//! root chance node: an optional opponent move shared by all members, a
//! chance node whose outcomes become the nodes of the member's head
//! information set, and the template itself. Clones differ only by bounded
//! perturbations of chance probabilities and leaf utilities, so any
//! partition of a group's heads is a valid merge.

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crswf::AbstractionMap;
use crate::efg::{GameBuilder, GameTree, Rational};

#[derive(Clone, Debug)]
pub struct RandomGameSpec {
    pub seed: u64,
    /// Decision/chance layers in the template below (and including) the head.
    pub depth: usize,
    /// Maximum actions per node.
    pub branching: usize,
    /// Number of independent groups.
    pub groups: usize,
    /// Members per group.
    pub members: usize,
    /// Largest change applied to a leaf utility of a clone.
    pub utility_radius: Rational,
    /// Largest change applied to a chance probability of a clone.
    pub prob_radius: Rational,
}

impl RandomGameSpec {
    pub fn new(seed: u64) -> Self {
        RandomGameSpec {
            seed,
            depth: 2,
            branching: 2,
            groups: 1,
            members: 3,
            utility_radius: Rational::new(1.into(), 10.into()),
            prob_radius: Rational::new(1.into(), 20.into()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomGame {
    pub game: GameTree,
    /// Head information sets of each group, one per member.
    pub groups: Vec<Vec<usize>>,
    /// Owner of each group's heads.
    pub group_player: Vec<usize>,
    /// `slots[g][m]`: the head of member m followed by its own later sets,
    /// aligned across members by template position.
    pub slots: Vec<Vec<Vec<usize>>>,
}

impl RandomGame {
    /// Merges the members of each group according to `clusters[g]` (lists
    /// of member indices), slot by slot.
    pub fn merge(&self, clusters: &[Vec<Vec<usize>>]) -> AbstractionMap {
        let mut classes = Vec::new();
        for (g, parts) in clusters.iter().enumerate() {
            for (c, part) in parts.iter().enumerate() {
                for k in 0..self.slots[g][0].len() {
                    let members = part.iter().map(|&m| self.slots[g][m][k]).collect();
                    classes.push((format!("G{g}c{c}s{k}"), members));
                }
            }
        }
        AbstractionMap::from_classes(&self.game, classes).expect("clusters are disjoint")
    }

    /// Every group collapsed into one abstract set per slot.
    pub fn merge_all(&self) -> AbstractionMap {
        let clusters: Vec<Vec<Vec<usize>>> = self.groups.iter().map(|g| vec![(0..g.len()).collect()]).collect();
        self.merge(&clusters)
    }
}

#[derive(Clone, Debug)]
enum Template {
    Leaf(Vec<Rational>),
    Chance(Vec<Rational>, Vec<Template>),
    Player(usize, Vec<Template>),
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| Rational::new(x.into(), total.into())).collect()
}

fn random_utils(rng: &mut ChaCha8Rng) -> Vec<Rational> {
    (0..2).map(|_| Rational::new(rng.gen_range(0..=100).into(), 10.into())).collect()
}

fn template(rng: &mut ChaCha8Rng, depth: usize, branching: usize) -> Template {
    if depth == 0 {
        return Template::Leaf(random_utils(rng));
    }
    let n = rng.gen_range(2..=branching.max(2));
    let kind = rng.gen_range(0..3);
    let kids = (0..n).map(|_| template(rng, depth - 1, branching)).collect();
    match kind {
        0 => Template::Chance(random_dist(rng, n), kids),
        k => Template::Player(k - 1, kids),
    }
}

/// (1-λ)p + λq for a random distribution q: still a distribution, and each
/// entry moves by at most λ.
fn perturb_dist(rng: &mut ChaCha8Rng, p: &[Rational], radius: &Rational) -> Vec<Rational> {
    if radius.is_zero() {
        return p.to_vec();
    }
    let q = random_dist(rng, p.len());
    p.iter()
        .zip(&q)
        .map(|(a, b)| (Rational::one() - radius) * a + radius * b)
        .collect()
}

fn perturb_utils(rng: &mut ChaCha8Rng, u: &[Rational], radius: &Rational) -> Vec<Rational> {
    u.iter()
        .map(|x| {
            let k: i64 = rng.gen_range(-100..=100);
            let v = x + radius * Rational::new(k.into(), 100.into());
            v.max(Rational::zero())
        })
        .collect()
}

fn action_label(player: usize, a: usize) -> String {
    format!("{}{a}", if player == 0 { 'x' } else { 'y' })
}

struct Emitter<'a> {
    b: GameBuilder,
    rng: &'a mut ChaCha8Rng,
    spec: &'a RandomGameSpec,
}

/// Where a clone is being emitted.
struct Clone_<'a> {
    group: usize,
    member: usize,
    owner: usize,
    /// Opponent action above the head (empty if there is none).
    above: &'a str,
}

impl Emitter<'_> {
    /// `path` holds every action label taken since the head.
    fn node(&mut self, id: &str, t: &Template, at: &Clone_, path: &str) {
        match t {
            Template::Leaf(u) => {
                let u = perturb_utils(self.rng, u, &self.spec.utility_radius);
                self.b.leaf(id, u).unwrap();
            }
            Template::Chance(p, kids) => {
                self.b.chance(id, "n").unwrap();
                let p = perturb_dist(self.rng, p, &self.spec.prob_radius);
                for (a, (k, pa)) in kids.iter().zip(p).enumerate() {
                    let label = format!("n{a}");
                    let child = format!("{id}{label}");
                    self.b.edge(id, &label, &child, Some(pa));
                    self.node(&child, k, at, &format!("{path}{label}"));
                }
            }
            Template::Player(p, kids) => {
                let (g, m) = (at.group, at.member);
                // Own sets are private to a clone; opponent sets are shared by
                // all clones so that opponent sequences agree across them.
                let set = if path.is_empty() {
                    format!("G{g}m{m}")
                } else if *p == at.owner {
                    format!("G{g}m{m}:{path}")
                } else {
                    format!("G{g}o{}:{path}", at.above)
                };
                self.b.decision(id, *p, &set).unwrap();
                for (a, k) in kids.iter().enumerate() {
                    let label = action_label(*p, a);
                    let child = format!("{id}{label}");
                    self.b.edge(id, &label, &child, None);
                    self.node(&child, k, at, &format!("{path}{label}"));
                }
            }
        }
    }

    /// The nature move that spreads a clone's head over several nodes.
    fn head_chance(&mut self, id: &str, template: &Template, dist: &[Rational], at: &Clone_) {
        self.b.chance(id, "n").unwrap();
        let p = perturb_dist(self.rng, dist, &self.spec.prob_radius);
        for (a, pa) in p.into_iter().enumerate() {
            let child = format!("{id}h{a}");
            self.b.edge(id, &format!("h{a}"), &child, Some(pa));
            self.node(&child, template, at, "");
        }
    }
}

/// Seeded random game; identical specs give identical games.
pub fn make_random_game(spec: &RandomGameSpec) -> RandomGame {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let depth = spec.depth.clamp(1, 5);
    let branching = spec.branching.clamp(2, 3);
    let members = spec.members.max(1);
    let groups = spec.groups.max(1);

    struct Plan {
        owner: usize,
        template: Template,
        head_dist: Vec<Rational>,
        opp_actions: usize,
    }
    let plans: Vec<Plan> = (0..groups)
        .map(|_| {
            let owner = rng.gen_range(0..2);
            let n = rng.gen_range(2..=branching);
            let kids = (0..n).map(|_| template(&mut rng, depth - 1, branching)).collect();
            let heads = rng.gen_range(1..=branching);
            Plan {
                owner,
                template: Template::Player(owner, kids),
                head_dist: random_dist(&mut rng, heads),
                opp_actions: if rng.gen_bool(0.5) { rng.gen_range(2..=branching) } else { 0 },
            }
        })
        .collect();

    let root_dist = random_dist(&mut rng, groups * members);
    let mut e = Emitter {
        b: GameBuilder::new(format!("random{}", spec.seed), 2),
        rng: &mut rng,
        spec,
    };
    e.b.chance("root", "root").unwrap();
    for (g, plan) in plans.iter().enumerate() {
        for m in 0..members {
            let base = format!("g{g}m{m}");
            e.b.edge("root", &base, &base, Some(root_dist[g * members + m].clone()));
            if plan.opp_actions == 0 {
                let at = Clone_ {
                    group: g,
                    member: m,
                    owner: plan.owner,
                    above: "",
                };
                e.head_chance(&base, &plan.template, &plan.head_dist, &at);
                continue;
            }
            let opp = 1 - plan.owner;
            e.b.decision(&base, opp, &format!("G{g}pre")).unwrap();
            for a in 0..plan.opp_actions {
                let label = action_label(opp, a);
                let child = format!("{base}{label}");
                e.b.edge(&base, &label, &child, None);
                let at = Clone_ {
                    group: g,
                    member: m,
                    owner: plan.owner,
                    above: &label,
                };
                e.head_chance(&child, &plan.template, &plan.head_dist, &at);
            }
        }
    }
    let game = e.b.build().expect("generated game is well formed");
    let groups_idx = (0..groups)
        .map(|g| {
            (0..members)
                .map(|m| game.infoset_by_id(&format!("G{g}m{m}")).unwrap())
                .collect()
        })
        .collect();
    let slots = (0..groups)
        .map(|g| {
            (0..members)
                .map(|m| {
                    let head = format!("G{g}m{m}");
                    let prefix = format!("{head}:");
                    let mut own: Vec<(&str, usize)> = game
                        .infosets
                        .iter()
                        .enumerate()
                        .filter_map(|(i, s)| s.id.strip_prefix(&prefix).map(|p| (p, i)))
                        .collect();
                    own.sort_unstable();
                    std::iter::once(game.infoset_by_id(&head).unwrap())
                        .chain(own.into_iter().map(|(_, i)| i))
                        .collect()
                })
                .collect()
        })
        .collect();
    RandomGame {
        game,
        groups: groups_idx,
        group_player: plans.iter().map(|p| p.owner).collect(),
        slots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_game() {
        let a = make_random_game(&RandomGameSpec::new(7));
        let b = make_random_game(&RandomGameSpec::new(7));
        assert_eq!(a.game, b.game);
        assert_eq!(a.groups, b.groups);
    }

    #[test]
    fn generated_games_have_perfect_recall() {
        for seed in 0..40 {
            let mut spec = RandomGameSpec::new(seed);
            spec.depth = 1 + (seed as usize % 4);
            spec.branching = 2 + (seed as usize % 2);
            spec.groups = 1 + (seed as usize % 2);
            let r = make_random_game(&spec);
            assert!(r.game.is_perfect_recall(), "seed {seed}");
            assert!(r.groups.iter().all(|g| g.len() == spec.members));
            for g in &r.slots {
                assert!(g.iter().all(|m| m.len() == g[0].len()));
            }
        }
    }
}
