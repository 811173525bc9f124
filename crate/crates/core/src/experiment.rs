//! Experiment drivers behind the `experiment` subcommand: the bound curve of
//! one DRP group as the cluster budget grows, and CFR convergence on
//! abstracted correlated DRP.

use std::fmt::Write as _;

use num::{BigInt, Integer, One, ToPrimitive, Zero};
use thiserror::Error;

use crate::abstraction::{
    build_abstraction, exact_cluster, gonzalez_cluster, group_instance, level_distances, solve_level, AbstractionError,
    DeltaMode, LevelPlan, Method, ObjectiveKind,
};
use crate::bounds::{strategy_agnostic_bound, BoundError};
use crate::cfr::{evaluate_in_original, lift_strategy, CfrError, Solver};
use crate::crswf::AbstractionMap;
use crate::efg::{GameTree, Rational, StrategyError};
use crate::games::{make_cdrp, make_drp, DrpError, DrpSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Drp(#[from] DrpError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Cfr(#[from] CfrError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("level {level} has {found} groups, group {group} requested")]
    NoSuchGroup { level: usize, group: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsConfig {
    pub sides: u32,
    pub level: usize,
    /// Index of the group to abstract among the level's groups.
    pub group: usize,
    pub ks: Vec<usize>,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub delta: DeltaMode,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            sides: 6,
            level: 2,
            group: 0,
            ks: (1..=12).collect(),
            method: Method::Exact,
            objective: ObjectiveKind::Weighted,
            delta: DeltaMode::Fixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsRow {
    pub k: usize,
    pub objective: f64,
    /// Strategy-agnostic bound of the whole game under the abstraction.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsCurve {
    /// Candidate information sets in the abstracted group.
    pub candidates: usize,
    pub rows: Vec<BoundsRow>,
}

/// Abstracts one group of DRP for every budget in `cfg.ks`.
pub fn bounds_curve(cfg: &BoundsConfig) -> Result<BoundsCurve, ExperimentError> {
    let game = make_drp(cfg.sides)?;
    let base = AbstractionMap::identity(&game);
    let (groups, dists) = level_distances(&game, &base, cfg.level, cfg.delta)?;
    let (group, d) = groups
        .get(cfg.group)
        .zip(dists.get(cfg.group))
        .ok_or(ExperimentError::NoSuchGroup {
            level: cfg.level,
            group: cfg.group,
            found: groups.len(),
        })?;
    let inst = group_instance(&game, group, d, cfg.objective);
    let mut rows = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        let k = k.clamp(1, inst.len());
        let clustering = match cfg.method {
            Method::Gonzalez => gonzalez_cluster(&inst, k)?,
            Method::Exact => exact_cluster(&inst, k)?,
        };
        let (map, report) = build_abstraction(&game, &base, &[(group, &clustering, d)])?;
        let bound = strategy_agnostic_bound(&game, &map, &report)?.epsilon;
        rows.push(BoundsRow {
            k,
            objective: clustering.objective,
            bound,
        });
    }
    Ok(BoundsCurve {
        candidates: group.len(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    pub sides: u32,
    pub correlations: Vec<Rational>,
    pub plan: LevelPlan,
    pub iterations: u64,
    pub samples_per_decade: u32,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        let mut plan = LevelPlan::new(2, 7);
        plan.method = Method::Exact;
        plan.objective = ObjectiveKind::Weighted;
        ConvergenceConfig {
            sides: 4,
            correlations: (0..=7).map(|c| Rational::new(BigInt::from(c), BigInt::from(100))).collect(),
            plan,
            iterations: 100_000,
            samples_per_decade: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSeries {
    pub correlation: Rational,
    pub lossless: bool,
    /// Σ_i of the strategy-agnostic per-player bounds.
    pub bound: f64,
    /// (iteration, r₁ + r₂)
    pub points: Vec<(u64, f64)>,
}

impl ConvergenceSeries {
    pub fn final_regret(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.1)
    }
}

/// Iteration counts 10^(j/per_decade), rounded and deduplicated, ending at `max`.
pub fn log_spaced(max: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut j = 0;
    loop {
        let t = (10f64.powf(j as f64 / per_decade.max(1) as f64).round() as u64).min(max);
        if out.last() != Some(&t) {
            out.push(t);
        }
        if t >= max {
            return out;
        }
        j += 1;
    }
}

/// r₁ + r₂ of the lifted average strategy at each sample point.
pub fn regret_curve(
    game: &GameTree,
    map: &AbstractionMap,
    samples: &[u64],
    seed: u64,
) -> Result<Vec<(u64, f64)>, ExperimentError> {
    let mut solver = Solver::new(game, map, seed)?;
    let mut points = Vec::with_capacity(samples.len());
    for &t in samples {
        solver.run_until(t);
        let lifted = lift_strategy(&solver.average_strategy(), map, game)?;
        points.push((t, evaluate_in_original(game, &lifted)?.iter().sum()));
    }
    Ok(points)
}

/// Least-squares slope of log10 y against log10 x.
pub fn loglog_slope(points: &[(u64, f64)]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(x, y)| ((x as f64).log10(), y.log10())).collect();
    let n = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / n, xy.iter().map(|p| p.1).sum::<f64>() / n);
    let num: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xy.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

fn convergence_series(cfg: &ConvergenceConfig, c: &Rational) -> Result<ConvergenceSeries, ExperimentError> {
    let game = make_cdrp(&DrpSpec::correlated(cfg.sides, c.clone()))?;
    let sol = solve_level(&game, &AbstractionMap::identity(&game), &cfg.plan)?;
    let bound = strategy_agnostic_bound(&game, &sol.map, &sol.report)?;
    let samples = log_spaced(cfg.iterations, cfg.samples_per_decade);
    Ok(ConvergenceSeries {
        correlation: c.clone(),
        lossless: sol.report.is_lossless(),
        bound: bound.players.iter().map(|p| p.epsilon).sum(),
        points: regret_curve(&game, &sol.map, &samples, cfg.seed)?,
    })
}

/// One series per correlation, run in parallel and returned in grid order.
pub fn convergence(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceSeries>, ExperimentError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .correlations
            .iter()
            .map(|c| scope.spawn(move || convergence_series(cfg, c)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("series thread panicked")).collect()
    })
}

/// Exact decimal when the denominator has only the factors 2 and 5.
pub fn decimal(r: &Rational) -> String {
    let mut den = r.denom().clone();
    let mut count = [0usize; 2];
    for (k, f) in [2, 5].into_iter().enumerate() {
        let f = BigInt::from(f);
        while den.is_multiple_of(&f) {
            den /= &f;
            count[k] += 1;
        }
    }
    if !den.is_one() {
        return format!("{:.16e}", r.to_f64().unwrap_or(f64::NAN));
    }
    let digits = count[0].max(count[1]);
    let scaled = num::pow(BigInt::from(10), digits) * r.numer() / r.denom();
    let sign = if scaled < BigInt::zero() { "-" } else { "" };
    let mut s = scaled.magnitude().to_string();
    if digits > 0 {
        while s.len() <= digits {
            s.insert(0, '0');
        }
        s.insert(s.len() - digits, '.');
    }
    format!("{sign}{s}")
}

pub fn bounds_csv(curve: &BoundsCurve) -> String {
    let mut out = String::from("k,objective,bound\n");
    for r in &curve.rows {
        writeln!(out, "{},{:.16e},{:.16e}", r.k, r.objective, r.bound).unwrap();
    }
    out
}

pub fn convergence_csv(series: &[ConvergenceSeries]) -> String {
    let mut out = String::from("c,iteration,regret_sum,bound\n");
    for s in series {
        let c = decimal(&s.correlation);
        for &(t, r) in &s.points {
            writeln!(out, "{c},{t},{r:.16e},{:.16e}", s.bound).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing() {
        assert_eq!(log_spaced(1000, 1), [1, 10, 100, 1000]);
        assert_eq!(log_spaced(50, 2), [1, 3, 10, 32, 50]);
        assert_eq!(log_spaced(1, 4), [1]);
    }

    #[test]
    fn decimals() {
        let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(decimal(&q(7, 100)), "0.07");
        assert_eq!(decimal(&q(0, 1)), "0");
        assert_eq!(decimal(&q(5, 2)), "2.5");
        assert_eq!(decimal(&q(-1, 8)), "-0.125");
        assert_eq!(decimal(&q(1, 3)), "3.3333333333333331e-1");
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(u64, f64)> = [10u64, 100, 1000].iter().map(|&t| (t, 3.0 / (t as f64).sqrt())).collect();
        assert!((loglog_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_bound_curve_is_monotone() {
        let cfg = BoundsConfig {
            sides: 3,
            ks: (1..=9).collect(),
            ..BoundsConfig::default()
        };
        let curve = bounds_curve(&cfg).unwrap();
        assert_eq!(curve.candidates, 9);
        for w in curve.rows.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
        for r in &curve.rows {
            assert!((r.objective - r.bound).abs() < 1e-9);
        }
        assert_eq!(curve.rows.last().unwrap().bound, 0.0);
    }
}
