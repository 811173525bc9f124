mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crswf::abstraction::{solve_level, validate_metric, AbstractionError, DeltaMode, LevelPlan, Method, ObjectiveKind};
use crswf::bounds::{strategy_agnostic_bound, theorem2_bound};
use crswf::cfr::{cfr_run, evaluate_in_original, profile_csv, read_profile_csv};
use crswf::crswf::{verify_crswf_with, AbstractionMap, DeltaPolicy};
use crswf::efg::{parse_game, parse_rational, GameTree, Rational};
use crswf::experiment::{
    bounds_csv, bounds_curve, convergence, convergence_csv, decimal, BoundsConfig, ConvergenceConfig, ExperimentError,
};
use crswf::games::{make_cdrp, make_drp, make_figure1_game, DrpSpec};

const SUBCOMMANDS: [&str; 5] = ["validate", "abstract", "solve", "eval", "experiment"];

/// Imperfect-recall abstraction of extensive-form games with solution-quality bounds.
#[derive(Parser)]
#[command(name = "crswf", version)]
struct Cli {
    /// File of key=value lines giving defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a map is a valid abstraction and print its error terms.
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
    /// Cluster the candidate sets of one level and write the resulting map.
    #[command(args_override_self = true)]
    Abstract(AbstractArgs),
    /// Run CFR on an abstraction and write the lifted average strategy.
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Measure the full-game regret of a strategy.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Produce bounds.csv and convergence.csv.
    #[command(args_override_self = true)]
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Game file, or one of `figure1`, `drp:<sides>`, `cdrp:<sides>:<c>`.
    #[arg(long)]
    game: String,
    /// Abstraction map file; the identity when absent.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value_t = DeltaArg::Fixed)]
    delta: DeltaArg,
}

#[derive(Args)]
struct AbstractArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 2)]
    level: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Gonzalez)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Diameter)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value_t = DeltaArg::Fixed)]
    delta: DeltaArg,
    /// Where to write the map; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 1000)]
    iterations: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strategy CSV for the original game; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Strategy CSV (`infoset_id,action_label,probability`).
    #[arg(long)]
    strategy: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Bounds,
    Convergence,
    All,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value_t = Which::All)]
    which: Which,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Die sides of the DRP bound curve.
    #[arg(long, default_value_t = 6)]
    drp_sides: u32,
    /// Group abstracted for the bound curve.
    #[arg(long, default_value_t = 0)]
    group: usize,
    /// Cluster budgets of the bound curve: `a..b` or a comma list.
    #[arg(long, default_value = "1..12")]
    ks: String,
    /// Die sides of correlated DRP.
    #[arg(long, default_value_t = 4)]
    cdrp_sides: u32,
    #[arg(long, default_value = "0,0.01,0.02,0.03,0.04,0.05,0.06,0.07")]
    correlations: String,
    /// Clusters per group in the convergence runs.
    #[arg(long, default_value_t = 7)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    level: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Weighted)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value_t = DeltaArg::Fixed)]
    delta: DeltaArg,
    #[arg(long, default_value_t = 100_000)]
    iterations: u64,
    #[arg(long, default_value_t = 4)]
    samples_per_decade: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Gonzalez,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Diameter,
    Weighted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeltaArg {
    Fixed,
    Optimized,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gonzalez => Method::Gonzalez,
            MethodArg::Exact => Method::Exact,
        }
    }
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Diameter => ObjectiveKind::Diameter,
            ObjectiveArg::Weighted => ObjectiveKind::Weighted,
        }
    }
}

impl From<DeltaArg> for DeltaMode {
    fn from(d: DeltaArg) -> Self {
        match d {
            DeltaArg::Fixed => DeltaMode::Fixed,
            DeltaArg::Optimized => DeltaMode::Optimized,
        }
    }
}

/// Errors that stop a command before any work is done.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())).into())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_game(spec: &str) -> Result<GameTree> {
    let parts: Vec<&str> = spec.split(':').collect();
    let sides = |s: &str| s.parse::<u32>().map_err(|_| Usage(format!("bad die size {s:?}")));
    match parts.as_slice() {
        ["figure1"] => Ok(make_figure1_game().0),
        ["drp", n] => Ok(make_drp(sides(n)?)?),
        ["cdrp", n, c] => {
            let c = parse_rational(c).ok_or_else(|| Usage(format!("bad correlation {c:?}")))?;
            Ok(make_cdrp(&DrpSpec::correlated(sides(n)?, c))?)
        }
        _ => Ok(parse_game(&read(Path::new(spec))?)?),
    }
}

fn load(args: &GameArgs) -> Result<(GameTree, AbstractionMap)> {
    let game = load_game(&args.game)?;
    let map = match &args.map {
        Some(p) => AbstractionMap::parse(&game, &read(p)?)?,
        None => AbstractionMap::identity(&game),
    };
    Ok((game, map))
}

/// Display value rounded to 12 decimals; CSV output keeps full precision.
fn show(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn validate(a: ValidateArgs) -> Result<()> {
    let (game, map) = load(&a.game)?;
    let policy = match a.delta {
        DeltaArg::Fixed => DeltaPolicy::Unit,
        DeltaArg::Optimized => DeltaPolicy::Optimize,
    };
    let report = verify_crswf_with(&game, &map, policy)?;
    let id = |i: usize| game.infosets[i].id.as_str();
    for p in &report.pairs {
        println!(
            "{} -> {}: delta={} transition={} reward={} distribution={}",
            id(p.from),
            id(p.to),
            p.delta,
            show(p.max_transition()),
            show(p.max_reward()),
            show(p.distribution)
        );
    }
    let bound = strategy_agnostic_bound(&game, &map, &report)?;
    for (i, p) in bound.players.iter().enumerate() {
        println!("bound_p{}={}", i + 1, show(p.epsilon));
    }
    println!("bound={}", show(bound.epsilon));
    println!("valid: {} merged pairs", report.pairs.len() / 2);
    Ok(())
}

fn abstract_cmd(a: AbstractArgs) -> Result<()> {
    let (game, base) = load(&a.game)?;
    if a.k == 0 {
        return usage("--k must be positive");
    }
    let plan = LevelPlan {
        level: a.level,
        k: a.k,
        method: a.method.into(),
        objective: a.objective.into(),
        delta: a.delta.into(),
    };
    let sol = solve_level(&game, &base, &plan)?;
    for (i, ((g, inst), c)) in sol.groups.iter().zip(&sol.instances).zip(&sol.clusterings).enumerate() {
        let check = validate_metric(inst);
        let metric = match check.violation {
            None => "metric".to_string(),
            Some(v) => format!("not a metric ({v:?})"),
        };
        eprintln!(
            "group {i}: player {} {} candidates x {} slots, {} clusters, objective {}, {metric}",
            g.player + 1,
            g.len(),
            g.num_slots(),
            c.clusters.len(),
            c.objective
        );
    }
    let bound = strategy_agnostic_bound(&game, &sol.map, &sol.report)?;
    eprintln!("{} abstract sets, bound {}", sol.map.num_classes(), bound.epsilon);
    write_or_print(a.out.as_deref(), &sol.map.emit(&game))
}

fn solve(a: SolveArgs) -> Result<()> {
    let (game, map) = load(&a.game)?;
    if a.iterations <= 0 {
        return usage("--iterations must be positive");
    }
    let out = cfr_run(&game, &map, a.iterations, a.seed)?;
    let regret = evaluate_in_original(&game, &out.lifted)?;
    for (i, r) in regret.iter().enumerate() {
        eprintln!("regret_p{}={r}", i + 1);
    }
    write_or_print(a.out.as_deref(), &profile_csv(&game, &out.lifted))
}

fn eval(a: EvalArgs) -> Result<()> {
    let (game, map) = load(&a.game)?;
    let sigma = read_profile_csv(&game, &read(&a.strategy)?)?;
    let regret = evaluate_in_original(&game, &sigma)?;
    for (i, r) in regret.iter().enumerate() {
        println!("regret_p{}={r}", i + 1);
    }
    println!("regret_sum={}", regret.iter().sum::<f64>());
    if a.game.map.is_some() {
        let report = verify_crswf_with(&game, &map, DeltaPolicy::Unit)?;
        println!("theorem2_bound={}", theorem2_bound(&game, &map, &report, &sigma)?.epsilon);
    }
    Ok(())
}

fn parse_ks(text: &str) -> Result<Vec<usize>> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| Usage(format!("bad budget {s:?}")));
    let ks = match text.split_once("..") {
        Some((a, b)) => (num(a)?..=num(b)?).collect(),
        None => text.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
    };
    if ks.is_empty() || ks.contains(&0) {
        return usage(format!("budgets {text:?} must be positive and non-empty"));
    }
    Ok(ks)
}

fn parse_correlations(text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .map(|c| parse_rational(c).ok_or_else(|| Usage(format!("bad correlation {c:?}")).into()))
        .collect()
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    if matches!(a.which, Which::Bounds | Which::All) {
        let cfg = BoundsConfig {
            sides: a.drp_sides,
            level: a.level,
            group: a.group,
            ks: parse_ks(&a.ks)?,
            method: a.method.into(),
            objective: a.objective.into(),
            delta: a.delta.into(),
        };
        let curve = bounds_curve(&cfg)?;
        let path = a.out_dir.join("bounds.csv");
        fs::write(&path, bounds_csv(&curve))?;
        eprintln!("{} candidates; wrote {}", curve.candidates, path.display());
    }
    if matches!(a.which, Which::Convergence | Which::All) {
        let plan = LevelPlan {
            level: a.level,
            k: a.k,
            method: a.method.into(),
            objective: a.objective.into(),
            delta: a.delta.into(),
        };
        let cfg = ConvergenceConfig {
            sides: a.cdrp_sides,
            correlations: parse_correlations(&a.correlations)?,
            plan,
            iterations: a.iterations,
            samples_per_decade: a.samples_per_decade,
            seed: a.seed,
        };
        if cfg.iterations == 0 {
            return usage("--iterations must be positive");
        }
        let series = convergence(&cfg)?;
        for s in &series {
            eprintln!(
                "c={}: final regret {}, bound {}{}",
                decimal(&s.correlation),
                s.final_regret(),
                s.bound,
                if s.lossless { " (lossless)" } else { "" }
            );
        }
        let path = a.out_dir.join("convergence.csv");
        fs::write(&path, convergence_csv(&series))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn too_large(e: &AbstractionError) -> bool {
    matches!(e, AbstractionError::TooLarge { .. })
}

/// 1 usage, 2 validation failure, 3 internal limit.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    let limit = e.downcast_ref::<AbstractionError>().is_some_and(too_large)
        || matches!(e.downcast_ref::<ExperimentError>(), Some(ExperimentError::Abstraction(a)) if too_large(a));
    if limit {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(a) => validate(a),
        Command::Abstract(a) => abstract_cmd(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crswf::crswf::CrswfError;

    #[test]
    fn budgets() {
        assert_eq!(parse_ks("1..4").unwrap(), [1, 2, 3, 4]);
        assert_eq!(parse_ks("2,5").unwrap(), [2, 5]);
        assert!(parse_ks("0..3").is_err());
        assert!(parse_ks("a").is_err());
    }

    #[test]
    fn builtin_games() {
        assert_eq!(load_game("figure1").unwrap().name, "figure1");
        assert!(load_game("drp:x").is_err());
        assert!(load_game("cdrp:4:1/100").is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Usage("x".into()).into()), 1);
        let limit = AbstractionError::TooLarge { n: 30, limit: 25 };
        assert_eq!(exit_code(&limit.into()), 3);
        assert_eq!(exit_code(&CrswfError::NoPerfectRecall(0).into()), 2);
    }
}
