//! Command-line front end.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::features::FeatureSet;
use crate::formula::{Connective, Sequent};
use crate::gen::{generate_problems, GenConfig, GenError};
use crate::graph::build_graph;
use crate::par::{self, Execution};
use crate::problems::{
    csv_string, format_problems, read_problems, EpochRow, FoldRow, Label, ProblemFileError, StatsRow, EPOCH_HEADER,
    FOLD_HEADER, STATS_HEADER,
};
use crate::proof::{check_proof, proves, Proof, Verdict};
use crate::qlearn::{EpsilonSchedule, ModelFileError, QModel, DEFAULT_ALPHA, DEFAULT_GAMMA};
use crate::search::{
    cross_validate, evaluate, problem_rng, train, CvConfig, CvError, Outcome, SearchLimits, StrategySpec,
};
use crate::syntax::{parse_sequent, ParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INVALID_PROOF: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "coreq", version, about = "Proof search for Core Logic with heuristic and learned strategies")]
pub struct Cli {
    /// Worker threads for batch commands; 1 runs sequentially.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for proofs of an inline sequent or of every problem in a file.
    Prove(ProveArgs),
    /// Check a proof written by `prove --proof-json`.
    Check(CheckArgs),
    /// Train a Q model and write it to a model file.
    Train(TrainArgs),
    /// Cross-validate the Q strategy against the baseline.
    Cv(CvArgs),
    /// Run one strategy over a problem file and report per-problem stats.
    Bench(BenchArgs),
    /// Generate random problems decided by the baseline.
    Gen(GenArgs),
    /// Print the problem graph of a sequent in DOT format.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyName {
    Baseline,
    Q,
    Random,
}

#[derive(Args, Debug, Clone)]
struct SearchOpts {
    /// Budget on generated sub-problems.
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    max_depth: u32,
    #[arg(long, env = "COREQ_SEED", default_value_t = 0)]
    seed: u64,
}

impl SearchOpts {
    fn limits(&self) -> SearchLimits {
        SearchLimits::new(self.max_steps, self.max_depth)
    }
}

#[derive(Args, Debug, Clone)]
struct StrategyOpts {
    #[arg(long, value_enum, default_value_t = StrategyName::Baseline)]
    strategy: StrategyName,
    /// Model file for the q strategy.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Features for an untrained q strategy when no model is given.
    #[arg(long, default_value = "none", value_parser = parse_features)]
    features: FeatureSet,
}

#[derive(Args, Debug, Clone)]
struct LearnOpts {
    #[arg(long, default_value = "none", value_parser = parse_features)]
    features: FeatureSet,
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA, value_parser = parse_unit)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_unit)]
    epsilon: f64,
    /// Factor applied to epsilon after every problem attempt.
    #[arg(long, default_value_t = 0.995, value_parser = parse_decay)]
    decay: f64,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("input").required(true))]
struct ProveArgs {
    #[arg(long, group = "input")]
    sequent: Option<String>,
    #[arg(long, group = "input")]
    problems: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyOpts,
    #[command(flatten)]
    search: SearchOpts,
    /// Write the stats CSV here instead of after the proofs on stdout.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write found proofs as JSON.
    #[arg(long)]
    proof_json: Option<PathBuf>,
    /// Record wall-clock time per problem.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    proof: PathBuf,
    /// Also require the proof to establish this sequent.
    #[arg(long)]
    sequent: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    problems: PathBuf,
    #[command(flatten)]
    learn: LearnOpts,
    #[command(flatten)]
    search: SearchOpts,
    /// Model file to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Per-epoch CSV; stdout when absent.
    #[arg(long)]
    epochs_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long)]
    problems: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    folds: u32,
    #[command(flatten)]
    learn: LearnOpts,
    #[command(flatten)]
    search: SearchOpts,
    /// Fold summary CSV; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-problem validation stats CSV.
    #[arg(long)]
    attempts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    problems: PathBuf,
    #[command(flatten)]
    strategy: StrategyOpts,
    #[command(flatten)]
    search: SearchOpts,
    /// Stats CSV; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=20))]
    predicates: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=20))]
    individuals: u32,
    /// Comma-separated connectives among `~ & | -> forall exists`.
    #[arg(long, default_value = "~,&,|,->,forall,exists", value_parser = parse_connectives)]
    connectives: Connectives,
    /// Nesting bound on sampled formulas.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    #[arg(long, default_value_t = 3)]
    max_premises: usize,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    count: u32,
    /// Baseline step budget for the solvability filter.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, env = "COREQ_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long)]
    sequent: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Connectives(Vec<Connective>);

fn parse_features(s: &str) -> Result<FeatureSet, String> {
    s.parse()
}

fn parse_connectives(s: &str) -> Result<Connectives, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let c = Connective::from_symbol(part).ok_or_else(|| format!("unknown connective `{part}`"))?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(Connectives(out))
}

fn parse_float(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("value must be finite".into())
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let x = parse_float(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err("alpha must be positive".into())
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let x = parse_float(s)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err("value must lie in [0, 1]".into())
    }
}

fn parse_decay(s: &str) -> Result<f64, String> {
    let x = parse_float(s)?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err("decay must lie in (0, 1]".into())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Problems(#[from] ProblemFileError),
    #[error("sequent: {0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelFileError },
    #[error("{path}: not a proof file: {source}")]
    ProofJson { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error("{0}")]
    Usage(String),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn load_problems(path: &Path) -> Result<Vec<(usize, Sequent)>, CliError> {
    if !path.exists() {
        return Err(CliError::Read {
            path: path.to_path_buf(),
            source: io::Error::new(io::ErrorKind::NotFound, "no such file"),
        });
    }
    let ps = read_problems(path)?;
    if ps.is_empty() {
        return Err(CliError::Usage(format!("{}: no problems", path.display())));
    }
    Ok(ps.into_iter().map(|p| (p.id, p.sequent)).collect())
}

fn load_model(path: &Path) -> Result<QModel, CliError> {
    QModel::from_text(&read(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

fn strategy_spec(opts: &StrategyOpts) -> Result<(StrategySpec, String), CliError> {
    match (opts.strategy, &opts.model) {
        (StrategyName::Baseline, None) => Ok((StrategySpec::Baseline, String::new())),
        (StrategyName::Random, None) => Ok((StrategySpec::Random, String::new())),
        (StrategyName::Q, Some(path)) => {
            let m = load_model(path)?;
            let f = m.enabled.to_string();
            Ok((StrategySpec::Q(m), f))
        }
        (StrategyName::Q, None) => {
            let m = QModel::new(opts.features.clone(), DEFAULT_ALPHA, DEFAULT_GAMMA);
            Ok((StrategySpec::Q(m), opts.features.to_string()))
        }
        (_, Some(_)) => Err(CliError::Usage("--model requires --strategy q".into())),
    }
}

/// Rows indexed by problem id, with wall time only on request.
fn stats_rows(
    ids: &[(usize, Sequent)],
    results: &[crate::search::Evaluated],
    strategy: &str,
    features: &str,
    seed: u64,
    timing: bool,
) -> Vec<StatsRow> {
    ids.iter()
        .zip(results)
        .map(|((id, _), e)| {
            let mut row = StatsRow::new(*id, &e.stats, strategy, features, seed);
            if timing {
                row.wall_ms = Some(e.wall.as_secs_f64() * 1000.0);
            }
            row
        })
        .collect()
}

fn worst_exit(outcomes: impl IntoIterator<Item = Outcome>) -> i32 {
    outcomes
        .into_iter()
        .map(|o| match o {
            Outcome::Proved => EXIT_OK,
            Outcome::Refuted => EXIT_REFUTED,
            Outcome::BudgetExhausted => EXIT_BUDGET,
        })
        .max()
        .unwrap_or(EXIT_OK)
}

fn cmd_prove(a: ProveArgs, exec: Execution) -> Result<i32, CliError> {
    let problems = match (&a.sequent, &a.problems) {
        (Some(s), _) => vec![(1, parse_sequent(s)?)],
        (None, Some(p)) => load_problems(p)?,
        (None, None) => unreachable!("clap requires an input"),
    };
    let (spec, features) = strategy_spec(&a.strategy)?;
    let results = evaluate(&problems, &spec, a.search.limits(), a.search.seed, exec);

    let mut text = String::new();
    for ((id, s), e) in problems.iter().zip(&results) {
        if problems.len() > 1 {
            text.push_str(&format!("problem {id}: {s}\n"));
        }
        text.push_str(&format!("{} (p = {}, T = {})\n", e.stats.outcome, e.stats.p, e.stats.t));
        if let Some(p) = &e.proof {
            text.push_str(&p.render());
        }
        text.push('\n');
    }
    let rows = stats_rows(&problems, &results, spec.name(), &features, a.search.seed, a.timing);
    let csv = csv_string(&rows, &STATS_HEADER);
    match &a.stats {
        Some(path) => {
            emit(None, &text)?;
            emit(Some(path), &csv)?;
        }
        None => emit(None, &(text + &csv))?,
    }

    if let Some(path) = &a.proof_json {
        let proofs: Vec<&Proof> = results.iter().filter_map(|e| e.proof.as_ref()).collect();
        let json = if a.sequent.is_some() {
            match proofs.first() {
                Some(p) => serde_json::to_string_pretty(p),
                None => Ok("null".to_string()),
            }
        } else {
            serde_json::to_string_pretty(&proofs)
        }
        .expect("proofs serialize");
        emit(Some(path), &(json + "\n"))?;
    }
    Ok(worst_exit(results.iter().map(|e| e.stats.outcome)))
}

fn cmd_check(a: CheckArgs) -> Result<i32, CliError> {
    let text = read(&a.proof)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::ProofJson {
        path: a.proof.clone(),
        source,
    })?;
    let proofs: Vec<Proof> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|p| vec![p])
    }
    .map_err(|source| CliError::ProofJson {
        path: a.proof.clone(),
        source,
    })?;
    if proofs.is_empty() {
        return Err(CliError::Usage(format!("{}: no proofs", a.proof.display())));
    }
    let target = a.sequent.as_deref().map(parse_sequent).transpose()?;

    let mut all_valid = true;
    let mut out = String::new();
    for (i, p) in proofs.iter().enumerate() {
        let label = if proofs.len() > 1 { format!("proof {}: ", i + 1) } else { String::new() };
        match check_proof(p) {
            Verdict::Valid => match &target {
                Some(s) if !proves(p, s) => {
                    all_valid = false;
                    out.push_str(&format!("{label}valid, but does not prove {s}\n"));
                }
                _ => out.push_str(&format!("{label}valid: {}\n", p.sequent)),
            },
            Verdict::Invalid(vs) => {
                all_valid = false;
                out.push_str(&format!("{label}invalid\n"));
                for v in vs {
                    out.push_str(&format!("  {v}\n"));
                }
            }
        }
    }
    emit(None, &out)?;
    Ok(if all_valid { EXIT_OK } else { EXIT_INVALID_PROOF })
}

fn schedule(l: &LearnOpts) -> EpsilonSchedule {
    EpsilonSchedule::new(l.epsilon, l.decay)
}

fn cmd_train(a: TrainArgs) -> Result<i32, CliError> {
    let problems: Vec<Sequent> = load_problems(&a.problems)?.into_iter().map(|(_, s)| s).collect();
    let model = QModel::new(a.learn.features.clone(), a.learn.alpha, a.learn.gamma);
    let mut rng = problem_rng(a.search.seed, usize::MAX);
    let report = train(&problems, model, schedule(&a.learn), a.search.limits(), a.learn.epochs, &mut rng);
    let rows: Vec<EpochRow> = report
        .epochs
        .iter()
        .map(|e| EpochRow {
            epoch: e.epoch,
            attempted: e.summary.attempted,
            solved: e.summary.solved,
            refuted: e.summary.refuted,
            mean_t: e.summary.mean_t,
            mean_p: e.summary.mean_p,
            mean_t_all: e.summary.mean_t_all,
            epsilon: e.epsilon,
            max_delta: e.max_delta,
        })
        .collect();
    emit(Some(&a.out), &report.model.to_text())?;
    emit(a.epochs_csv.as_deref(), &csv_string(&rows, &EPOCH_HEADER))?;
    match report.converged_at {
        Some(e) => eprintln!("converged at epoch {e}"),
        None => eprintln!("not converged after {} epochs", a.learn.epochs),
    }
    Ok(EXIT_OK)
}

fn cmd_cv(a: CvArgs, exec: Execution) -> Result<i32, CliError> {
    let problems = load_problems(&a.problems)?;
    let seqs: Vec<Sequent> = problems.iter().map(|(_, s)| s.clone()).collect();
    let features = a.learn.features.to_string();
    let cfg = CvConfig {
        folds: a.folds as usize,
        epochs: a.learn.epochs,
        model: QModel::new(a.learn.features.clone(), a.learn.alpha, a.learn.gamma),
        schedule: schedule(&a.learn),
        limits: a.search.limits(),
        seed: a.search.seed,
        exec,
    };
    let report = cross_validate(&seqs, &cfg)?;
    let mut rows = Vec::new();
    for f in &report.folds {
        let fold = f.fold.to_string();
        rows.push(FoldRow::new(&fold, "train", "baseline", "", &f.baseline_train));
        rows.push(FoldRow::new(&fold, "train", "q", &features, &f.q_train));
        rows.push(FoldRow::new(&fold, "test", "baseline", "", &f.baseline_test));
        rows.push(FoldRow::new(&fold, "test", "q", &features, &f.q_test));
    }
    rows.push(FoldRow::new("all", "test", "baseline", "", &report.baseline_test));
    rows.push(FoldRow::new("all", "test", "q", &features, &report.q_test));
    emit(a.csv.as_deref(), &csv_string(&rows, &FOLD_HEADER))?;

    if let Some(path) = &a.attempts {
        let rows: Vec<StatsRow> = report
            .attempts
            .iter()
            .map(|t| {
                let f = if t.strategy == "q" { features.as_str() } else { "" };
                StatsRow::new(problems[t.index].0, &t.stats, t.strategy, f, a.search.seed)
            })
            .collect();
        emit(Some(path), &csv_string(&rows, &STATS_HEADER))?;
    }
    Ok(EXIT_OK)
}

fn cmd_bench(a: BenchArgs, exec: Execution) -> Result<i32, CliError> {
    let problems = load_problems(&a.problems)?;
    let (spec, features) = strategy_spec(&a.strategy)?;
    let results = evaluate(&problems, &spec, a.search.limits(), a.search.seed, exec);
    let rows = stats_rows(&problems, &results, spec.name(), &features, a.search.seed, a.timing);
    emit(a.csv.as_deref(), &csv_string(&rows, &STATS_HEADER))?;
    Ok(EXIT_OK)
}

fn cmd_gen(a: GenArgs, exec: Execution) -> Result<i32, CliError> {
    let cfg = GenConfig {
        num_predicates: a.predicates as usize,
        num_individuals: a.individuals as usize,
        connectives: a.connectives.0,
        max_depth: a.depth as usize,
        max_premises: a.max_premises,
        count: a.count as usize,
        seed: a.seed,
        solve_budget: a.budget,
    };
    let problems = generate_problems(&cfg, exec)?;
    let mut text = format!(
        "# coreq gen: {} problems, depth {}, budget {}, seed {}\n",
        cfg.count, cfg.max_depth, cfg.solve_budget, cfg.seed
    );
    text.push_str(&format_problems(problems.iter().map(|g| (&g.sequent, Some(g.label)))));
    emit(a.out.as_deref(), &text)?;
    let provable = problems.iter().filter(|g| g.label == Label::Provable).count();
    eprintln!("{} provable, {} refutable", provable, problems.len() - provable);
    Ok(EXIT_OK)
}

fn cmd_graph(a: GraphArgs) -> Result<i32, CliError> {
    let s = parse_sequent(&a.sequent)?;
    emit(a.out.as_deref(), &build_graph(&s).to_dot())?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let jobs = cli.jobs.map(|j| j as usize);
    let exec = Execution::from_jobs(jobs);
    par::with_jobs(jobs, move || match cli.command {
        Command::Prove(a) => cmd_prove(a, exec),
        Command::Check(a) => cmd_check(a),
        Command::Train(a) => cmd_train(a),
        Command::Cv(a) => cmd_cv(a, exec),
        Command::Bench(a) => cmd_bench(a, exec),
        Command::Gen(a) => cmd_gen(a, exec),
        Command::Graph(a) => cmd_graph(a),
    })
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
