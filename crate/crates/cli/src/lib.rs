//! Command-line front end: synthetic benchmarks, dataset import and
//! ask/tell sessions for externally measured experiments.

pub mod error;
pub mod formats;
pub mod session;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;
use shapesearch::acquisition::Target;
use shapesearch::oracles::Problem;
use shapesearch::search::{self, BenchmarkConfig, Learner, LoopConfig, Strategy, LOG_EPSILON};
use std::io::Write;
use std::path::{Path, PathBuf};

use error::{CliError, CliResult};
use session::{LockedSession, SessionState};

#[derive(Debug, Parser)]
#[command(name = "shapesearch", version, about = "Find the input whose structured output matches a target")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark strategies on a synthetic problem over paired trials.
    RunSynthetic(RunSyntheticArgs),
    /// Propose the next pool point of a session.
    Ask(StateArgs),
    /// Record the observation for the pending proposal.
    Tell(TellArgs),
    /// Create a session from a pool file and a target file.
    ImportDataset(ImportArgs),
    /// Write a session's trace as JSON lines.
    ExportTrace(ExportArgs),
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    s.parse().map_err(|e: shapesearch::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: shapesearch::Error| e.to_string())
}

/// Strategies named on the command line, in order, without repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyList(pub Vec<Strategy>);

fn parse_strategies(s: &str) -> Result<StrategyList, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(StrategyList(Strategy::ALL.to_vec()));
    }
    let mut list = Vec::new();
    for part in s.split(',') {
        let st = parse_strategy(part.trim())?;
        if !list.contains(&st) {
            list.push(st);
        }
    }
    Ok(StrategyList(list))
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Score candidates with noise included in the predictive covariance.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub include_noise: bool,
    /// Rank of the coregionalization factor.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Min-max scale inputs to [0, 1] before modelling.
    #[arg(long)]
    pub normalize_inputs: bool,
}

#[derive(Debug, Args)]
pub struct RunSyntheticArgs {
    #[arg(long, value_parser = parse_problem)]
    pub problem: Problem,
    /// Comma-separated list of ei, pi, mean-mse, random, or "all".
    #[arg(long, value_parser = parse_strategies, default_value = "all")]
    pub strategy: StrategyList,
    #[arg(long, default_value_t = 30)]
    pub budget: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 2)]
    pub init_size: usize,
    #[arg(long, default_value_t = shapesearch::oracles::DEFAULT_NOISE_VARIANCE)]
    pub noise_var: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long)]
    pub state: PathBuf,
}

#[derive(Debug, Args)]
pub struct TellArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Observed outputs, comma separated.
    #[arg(long = "y", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub y: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Pool CSV: x_1..x_d, y_1..y_M; rows with outputs form the initial data.
    #[arg(long)]
    pub pool: PathBuf,
    /// Target CSV: y_1..y_M and a single row.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_parser = parse_strategy, default_value = "ei")]
    pub strategy: Strategy,
    /// Number of queries; defaults to the number of candidate rows.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Destination file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` and run the command. Help and version requests return
/// `Ok` after printing.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.exit_code() == 0 {
                write!(out, "{e}")?;
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::RunSynthetic(a) => run_synthetic(&a, out),
        Command::Ask(a) => ask(&a.state, out),
        Command::Tell(a) => tell(&a.state, &a.y, out),
        Command::ImportDataset(a) => import_dataset(&a, out),
        Command::ExportTrace(a) => export_trace(&a, out),
    }
}

fn run_synthetic(a: &RunSyntheticArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.budget == 0 || a.trials == 0 {
        return Err(CliError::Usage("--budget and --trials must be at least 1".into()));
    }
    if a.init_size == 0 || a.init_size >= a.pool_size {
        return Err(CliError::Usage("--init-size must be in [1, pool-size)".into()));
    }
    if !(a.noise_var >= 0.0 && a.noise_var.is_finite()) {
        return Err(CliError::Usage("--noise-var must be finite and >= 0".into()));
    }
    if a.model.rank == 0 {
        return Err(CliError::Usage("--rank must be at least 1".into()));
    }
    let strategies = a.strategy.0.clone();
    let cfg = BenchmarkConfig {
        pool_size: a.pool_size,
        init_size: a.init_size,
        noise_variance: a.noise_var,
        include_noise: a.model.include_noise,
        normalize_inputs: a.model.normalize_inputs,
        rank: a.model.rank,
        ..BenchmarkConfig::new(a.problem, strategies, a.budget, a.trials, a.seed)
    };
    std::fs::create_dir_all(&a.out_dir)?;
    let dir = &a.out_dir;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;

    let result = search::benchmark(&cfg)?;
    std::fs::write(dir.join("trials.json"), serde_json::to_string_pretty(&result.setups)? + "\n")?;
    for setup in &result.setups {
        let k = setup.trial;
        // The initial observations are the first draws of the trial's noise
        // stream, identical for every strategy.
        let mut oracle = search::trial_oracle(&cfg, setup)?;
        let mut observed = Vec::new();
        for &i in &setup.initial_indices {
            observed.push((i, oracle(&[setup.pool[i]])?));
        }
        let inputs: Vec<Vec<f64>> = setup.pool.iter().map(|x| vec![*x]).collect();
        formats::write_pool_csv(&dir.join(format!("pool_trial{k}.csv")), &inputs, &observed, cfg.problem.output_dim())?;
        formats::write_target_csv(&dir.join(format!("target_trial{k}.csv")), setup.target.values())?;
    }
    for (s, traces) in cfg.strategies.iter().zip(&result.traces) {
        for (k, trace) in traces.iter().enumerate() {
            formats::write_trace_file(&dir.join(format!("trace_{}_trial{k}.jsonl", s.name())), trace, Some(k))?;
        }
    }
    formats::write_summary_csv(&dir.join("summary.csv"), &result.summary)?;
    for (s, traces) in cfg.strategies.iter().zip(&result.traces) {
        let rows = search::summarize(*s, traces, cfg.budget);
        let last = rows.last().expect("budget >= 1");
        writeln!(
            out,
            "{:<9} final mean log10 regret {:.3} (std {:.3})",
            s.name(),
            last.mean_log10_regret,
            last.std_log10_regret
        )?;
    }
    writeln!(out, "wrote results to {}", dir.display())?;
    Ok(())
}

fn import_dataset(a: &ImportArgs, out: &mut dyn Write) -> CliResult<()> {
    let pool = formats::read_pool_csv(&a.pool)?;
    let target = formats::read_target_csv(&a.target)?;
    if target.len() != pool.output_dim {
        return Err(CliError::data(format!(
            "target has {} outputs but the pool file has {}",
            target.len(),
            pool.output_dim
        )));
    }
    if pool.observed.is_empty() {
        return Err(CliError::data(format!("{}: no rows carry initial observations", a.pool.display())));
    }
    let candidates = pool.inputs.len() - pool.observed.len();
    let budget = a.budget.unwrap_or(candidates.max(1));
    let initial_indices: Vec<usize> = pool.observed.iter().map(|(i, _)| *i).collect();
    let initial: Vec<Vec<f64>> = pool.observed.iter().map(|(_, y)| y.clone()).collect();
    let config = LoopConfig {
        include_noise: a.model.include_noise,
        normalize_inputs: a.model.normalize_inputs,
        rank: a.model.rank,
        ..LoopConfig::new(a.strategy, budget, pool.inputs, initial_indices, a.seed)
    };
    let learner = Learner::start(config, Target::new(target)?, &initial)?;
    let incumbent = learner.incumbent().best_value;
    LockedSession::create(&a.state, SessionState::new(learner))?;
    writeln!(
        out,
        "{}",
        json!({ "candidates": candidates, "initial": pool.observed.len(), "incumbent_value": incumbent })
    )?;
    Ok(())
}

fn ask(path: &Path, out: &mut dyn Write) -> CliResult<()> {
    let mut session = LockedSession::open(path)?;
    match session.state.learner.ask()? {
        Some(p) => {
            session.save()?;
            writeln!(out, "{}", serde_json::to_string(&p)?)?;
        }
        None => {
            session.save()?;
            writeln!(out, "{}", json!({ "done": true }))?;
        }
    }
    Ok(())
}

fn tell(path: &Path, y: &[f64], out: &mut dyn Write) -> CliResult<()> {
    let mut session = LockedSession::open(path)?;
    let record = session.state.learner.tell(y)?.clone();
    session.save()?;
    writeln!(
        out,
        "{}",
        json!({
            "iteration": record.iteration,
            "objective": record.objective,
            "incumbent_value": record.incumbent_value,
            "incumbent_input": record.incumbent_input,
            "converged": record.incumbent_value <= LOG_EPSILON,
        })
    )?;
    Ok(())
}

fn export_trace(a: &ExportArgs, out: &mut dyn Write) -> CliResult<()> {
    let session = LockedSession::open(&a.state)?;
    let trace = session.state.learner.trace();
    match &a.out {
        Some(p) => formats::write_trace_file(p, &trace, None),
        None => formats::write_trace(out, &trace, None),
    }
}
