//! `diffvote` command-line runner.
//!
//! Exit codes: 0 success, 1 property failure, 2 invalid input, 3 runtime
//! abort.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use diffvote::experiments::{
    gradients_csv, records_csv, run_exp1, run_exp2, run_exp3, summarize, summary_table,
    with_threads, Exp2Config, Exp3Config, ExperimentGrid, MetricsRecord, RecordLayout,
    INIT_SIGMA_REL,
};
use diffvote::oracles::{
    borda_scores, borda_winners, check_condorcet_criterion, condorcet_winner, copeland,
    expected_disagreement, kemeny_optimal, kemeny_optimal_set, kendall_to_set, AxiomStatus,
    Ranking, KEMENY_MAX_M,
};
use diffvote::{
    generate_regime, gradient_descent, induced_ranking, run_checks, CheckOptions, Family, Init,
    LossSpec, OptimConfig, OptimResult, PreferenceMatrix, RegimeKind, RegimeSpec,
};

#[derive(Debug)]
enum CliError {
    /// Exit 1.
    PropertyFailure,
    /// Exit 2.
    Invalid(String),
    /// Exit 3.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::PropertyFailure => 1,
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<diffvote::Error> for CliError {
    fn from(e: diffvote::Error) -> Self {
        match e {
            diffvote::Error::NonFinite { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "diffvote",
    version,
    about = "Differentiable voting losses, social-choice oracles and experiments"
)]
struct Cli {
    /// Global seed; falls back to DIFFVOTE_SEED.
    #[arg(long, global = true, env = "DIFFVOTE_SEED")]
    seed: Option<u64>,

    /// Maximum number of worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the preference matrix of a synthetic regime.
    Generate(GenerateArgs),
    /// Fit a loss to a preference matrix by gradient descent.
    Optimize(OptimizeArgs),
    /// Run one of the experiments and write its records.
    Experiment(ExperimentArgs),
    /// Run the gradient and limit-property self-checks.
    Check(CheckArgs),
}

fn parse_regime(s: &str) -> Result<RegimeKind, String> {
    s.parse().map_err(|e: diffvote::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: diffvote::Error| e.to_string())
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// transitive, near_tie, cyclic or sharply_transitive.
    #[arg(long, value_parser = parse_regime)]
    regime: Option<RegimeKind>,
    /// Number of alternatives.
    #[arg(long)]
    m: Option<usize>,
    /// Regime sharpness; defaults per regime.
    #[arg(long)]
    scale: Option<f64>,
    /// JSON file with any of `regime`, `m`, `scale`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print Copeland, Condorcet, Borda and Kemeny results.
    #[arg(long)]
    oracles: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateConfig {
    regime: Option<RegimeKind>,
    m: Option<usize>,
    scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitKind {
    Zeros,
    Gaussian,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Preference matrix JSON, as written by `generate`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// btl, soft_copeland, soft_kemeny, exponential or hinge.
    #[arg(long, value_parser = parse_family)]
    loss: Option<Family>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Step size; defaults per loss.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    /// Standard deviation of a Gaussian start.
    #[arg(long)]
    init_sigma: Option<f64>,
    /// Record the objective after every step.
    #[arg(long)]
    trajectory: bool,
    /// JSON file with any of `matrix`, `loss`, `optim`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeConfig {
    matrix: Option<PathBuf>,
    loss: Option<LossSpec>,
    optim: Option<OptimConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Exp1,
    Exp2,
    Exp3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Experiment config JSON; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides the per-loss step budget (exp1, exp2).
    #[arg(long)]
    steps: Option<usize>,
    /// Number of seeds per cell (exp1, exp2).
    #[arg(long)]
    seeds: Option<u64>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Emit a JSON report.
    #[arg(long)]
    json: bool,
    /// Perturb one family's analytic gradient to exercise failure reporting.
    #[arg(long, value_parser = parse_family)]
    inject_fault: Option<Family>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("cannot parse {}: {e}", path.display())))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> CliResult<T> {
    path.map_or_else(|| Ok(T::default()), |p| read_json(p))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn emit(out: Option<&PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn missing(flag: &str, key: &str, what: &str) -> CliError {
    CliError::Invalid(format!(
        "missing required flag --{flag} ({what}); pass --{flag} or set \"{key}\" in --config"
    ))
}

fn cmd_generate(args: &GenerateArgs, seed: Option<u64>) -> CliResult<()> {
    let cfg: GenerateConfig = read_config(args.config.as_ref())?;
    let kind = args
        .regime
        .or(cfg.regime)
        .ok_or_else(|| missing("regime", "regime", "preference regime"))?;
    let m = args
        .m
        .or(cfg.m)
        .ok_or_else(|| missing("m", "m", "number of alternatives"))?;
    let mut spec = RegimeSpec::new(kind, m);
    if let Some(scale) = args.scale.or(cfg.scale) {
        spec = spec.with_scale(scale);
    }
    spec.seed = seed.unwrap_or(0);
    let matrix = generate_regime(&spec)?;
    emit(args.out.as_ref(), &to_json(&matrix))?;
    if args.oracles {
        print!("{}", oracle_report(&matrix)?);
    }
    Ok(())
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(", "))
}

fn oracle_report(matrix: &PreferenceMatrix) -> CliResult<String> {
    let cop = copeland(matrix);
    let mut out = String::new();
    out.push_str(&format!("copeland_scores: {}\n", fmt_list(&cop.scores)));
    out.push_str(&format!("copeland_winners: {}\n", fmt_list(&cop.winners)));
    out.push_str(&format!(
        "condorcet_winner: {}\n",
        condorcet_winner(matrix).map_or_else(|| "none".to_string(), |w| w.to_string())
    ));
    out.push_str(&format!(
        "borda_scores: {}\n",
        fmt_list(&borda_scores(matrix))
    ));
    if matrix.m() <= KEMENY_MAX_M {
        let (ranking, value) = kemeny_optimal(matrix)?;
        out.push_str(&format!(
            "kemeny_optimum: {ranking} (disagreement {value})\n"
        ));
    } else {
        out.push_str(&format!("kemeny_optimum: skipped (m > {KEMENY_MAX_M})\n"));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct RunMetrics {
    copeland_winners: Vec<usize>,
    copeland_agreement: bool,
    condorcet_winner: Option<usize>,
    condorcet_status: AxiomStatus,
    borda_winners: Vec<usize>,
    expected_disagreement: f64,
    /// Absent when m exceeds the exhaustive-search limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    kemeny_optimal: Option<Vec<Ranking>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendall_to_kemeny: Option<usize>,
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    loss: LossSpec,
    config: OptimConfig,
    result: OptimResult,
    ranking: Ranking,
    metrics: RunMetrics,
}

fn resolve_loss(args: &OptimizeArgs, base: Option<LossSpec>) -> CliResult<LossSpec> {
    let family = args
        .loss
        .or(base.map(|s| s.family()))
        .ok_or_else(|| missing("loss", "loss", "loss family"))?;
    let base = base.filter(|s| s.family() == family);
    let pick = |flag: Option<f64>, from: fn(&LossSpec) -> Option<f64>| {
        flag.or_else(|| base.as_ref().and_then(from))
    };
    Ok(LossSpec::from_parts(
        family,
        pick(args.tau, LossSpec::tau),
        pick(args.beta, LossSpec::beta),
        pick(args.lambda, LossSpec::lambda),
    )?)
}

fn cmd_optimize(args: &OptimizeArgs, seed: Option<u64>) -> CliResult<()> {
    let cfg: OptimizeConfig = read_config(args.config.as_ref())?;
    let path = args
        .matrix
        .clone()
        .or(cfg.matrix)
        .ok_or_else(|| missing("matrix", "matrix", "preference matrix file"))?;
    let matrix: PreferenceMatrix = read_json(&path)?;
    let spec = resolve_loss(args, cfg.loss)?;

    let mut optim = cfg.optim.unwrap_or_else(|| OptimConfig::default_for(&spec));
    if let Some(lr) = args.lr {
        optim.learning_rate = lr;
    }
    if let Some(steps) = args.steps {
        optim.steps = steps;
    }
    let sigma = args
        .init_sigma
        .unwrap_or(INIT_SIGMA_REL * spec.margin_scale());
    match (args.init, optim.init) {
        (Some(InitKind::Zeros), _) => optim.init = Init::Zeros,
        (Some(InitKind::Gaussian), _) => {
            optim.init = Init::SeededGaussian {
                sigma,
                seed: seed.unwrap_or(0),
            }
        }
        (
            None,
            Init::SeededGaussian {
                sigma: s,
                seed: own,
            },
        ) => {
            optim.init = Init::SeededGaussian {
                sigma: args.init_sigma.unwrap_or(s),
                seed: seed.unwrap_or(own),
            }
        }
        (None, Init::Zeros) => {}
    }
    optim.record_trajectory |= args.trajectory;
    optim.validate()?;

    let result = gradient_descent(&spec, &matrix, &optim)?;
    let ranking = induced_ranking(&result.final_rewards);
    let top = ranking.top();
    let cop = copeland(&matrix);
    let (kemeny, kendall) = if matrix.m() <= KEMENY_MAX_M {
        let (set, _) = kemeny_optimal_set(&matrix)?;
        let d = kendall_to_set(&ranking, &set)?;
        (Some(set), Some(d))
    } else {
        (None, None)
    };
    let metrics = RunMetrics {
        copeland_agreement: cop.winners.contains(&top),
        copeland_winners: cop.winners,
        condorcet_winner: condorcet_winner(&matrix),
        condorcet_status: check_condorcet_criterion(top, &matrix),
        borda_winners: borda_winners(&matrix),
        expected_disagreement: expected_disagreement(&ranking, &matrix)?,
        kemeny_optimal: kemeny,
        kendall_to_kemeny: kendall,
    };
    let report = OptimizeReport {
        loss: spec,
        config: optim,
        result,
        ranking,
        metrics,
    };
    emit(args.out.as_ref(), &to_json(&report))
}

/// Replaces `seeds` by `start..start + count`, keeping the current count
/// unless `count` is given.
fn reseed(seeds: &mut Vec<u64>, start: Option<u64>, count: Option<u64>) -> CliResult<()> {
    if count == Some(0) {
        return Err(CliError::Invalid("--seeds must be >= 1".into()));
    }
    if start.is_none() && count.is_none() {
        return Ok(());
    }
    let n = count.unwrap_or(seeds.len() as u64);
    let first = start.unwrap_or_else(|| seeds.first().copied().unwrap_or(0));
    *seeds = (0..n).map(|k| first.wrapping_add(k)).collect();
    Ok(())
}

fn emit_records(
    args: &ExperimentArgs,
    records: &[MetricsRecord],
    layout: RecordLayout,
) -> CliResult<()> {
    let body = match args.format {
        Format::Csv => records_csv(records, layout),
        Format::Json => to_json(&records),
    };
    emit(args.out.as_ref(), &body)?;
    let table = summary_table(&summarize(records));
    if args.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    let failed = records.iter().filter(|r| r.is_failed()).count();
    if !records.is_empty() && failed == records.len() {
        return Err(CliError::Runtime(format!("all {failed} cells failed")));
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs, seed: Option<u64>) -> CliResult<()> {
    match args.experiment {
        Experiment::Exp1 => {
            let mut grid: ExperimentGrid = read_config(args.config.as_ref())?;
            reseed(&mut grid.seeds, seed, args.seeds)?;
            grid.steps = args.steps.or(grid.steps);
            let records = run_exp1(&grid)?;
            emit_records(args, &records, RecordLayout::Base)
        }
        Experiment::Exp2 => {
            let mut config: Exp2Config = read_config(args.config.as_ref())?;
            reseed(&mut config.seeds, seed, args.seeds)?;
            config.steps = args.steps.or(config.steps);
            let records = run_exp2(&config)?;
            emit_records(args, &records, RecordLayout::HiddenContext)
        }
        Experiment::Exp3 => {
            let config: Exp3Config = read_config(args.config.as_ref())?;
            let samples = run_exp3(&config)?;
            let body = match args.format {
                Format::Csv => gradients_csv(&samples),
                Format::Json => to_json(&samples),
            };
            emit(args.out.as_ref(), &body)?;
            let note = format!(
                "{} gradient samples for {} losses\n",
                samples.len(),
                config.losses.len()
            );
            if args.out.is_some() {
                print!("{note}");
            } else {
                eprint!("{note}");
            }
            Ok(())
        }
    }
}

fn cmd_check(args: &CheckArgs, seed: Option<u64>) -> CliResult<()> {
    let report = run_checks(&CheckOptions {
        seed: seed.unwrap_or(0),
        inject_fault: args.inject_fault,
    });
    if args.json {
        print!("{}", to_json(&report));
    } else {
        for p in &report.properties {
            let verdict = if p.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {}: {}", p.name, p.detail);
        }
        let passed = report.properties.iter().filter(|p| p.passed).count();
        println!("{passed}/{} properties passed", report.properties.len());
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::PropertyFailure)
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(args, cli.seed),
        Command::Optimize(args) => cmd_optimize(args, cli.seed),
        Command::Experiment(args) => cmd_experiment(args, cli.seed),
        Command::Check(args) => cmd_check(args, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = with_threads(cli.threads.map(|n| n as usize), || run(&cli))
        .map_err(CliError::from)
        .and_then(|r| r);
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::PropertyFailure => eprintln!("error: property check failed"),
                CliError::Invalid(msg) | CliError::Runtime(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.code())
        }
    }
}
