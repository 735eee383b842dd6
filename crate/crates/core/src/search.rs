//! The pool-based active learning loop, its baselines, and regret
//! accounting.
//!
//! [`Learner`] is an ask/tell state machine: [`run`] drives it with an
//! oracle, and interactive sessions drive it one measurement at a time.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

use crate::acquisition::{self, squared_error, Acquisition, Incumbent, Target};
use crate::error::{Error, Result};
use crate::mogp::{self, Dataset, FitOptions, FittedModel, Hyperparams};
use crate::oracles::{generate_pool, Problem, SyntheticOracle};

/// Added to regret before taking logarithms.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Ei,
    Pi,
    MeanMse,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Ei, Strategy::Pi, Strategy::MeanMse, Strategy::Random];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ei => "ei",
            Strategy::Pi => "pi",
            Strategy::MeanMse => "mean-mse",
            Strategy::Random => "random",
        }
    }

    fn acquisition(self) -> Option<Acquisition> {
        match self {
            Strategy::Ei => Some(Acquisition::Ei),
            Strategy::Pi => Some(Acquisition::Pi),
            Strategy::MeanMse => Some(Acquisition::MeanMse),
            Strategy::Random => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ei" => Ok(Strategy::Ei),
            "pi" => Ok(Strategy::Pi),
            "mean-mse" | "meanmse" => Ok(Strategy::MeanMse),
            "random" => Ok(Strategy::Random),
            other => Err(Error::invalid(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub strategy: Strategy,
    /// Maximum number of queries after the initial design.
    pub budget: usize,
    /// Candidate inputs, one row per pool point.
    pub pool: Vec<Vec<f64>>,
    pub initial_indices: Vec<usize>,
    pub seed: u64,
    pub refit_every: usize,
    pub include_noise: bool,
    /// Min-max scale inputs to `[0, 1]` using the pool's range.
    pub normalize_inputs: bool,
    pub rank: usize,
    pub fit: FitOptions,
    /// Store per-iteration wall time in the trace. Off by default so that
    /// traces are reproducible bit for bit.
    pub record_timing: bool,
}

impl LoopConfig {
    pub fn new(strategy: Strategy, budget: usize, pool: Vec<Vec<f64>>, initial_indices: Vec<usize>, seed: u64) -> Self {
        Self {
            strategy,
            budget,
            pool,
            initial_indices,
            seed,
            refit_every: 1,
            include_noise: true,
            normalize_inputs: false,
            rank: 1,
            fit: FitOptions::default(),
            record_timing: false,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.pool.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool.is_empty() {
            return Err(Error::invalid("pool is empty"));
        }
        let d = self.input_dim();
        if d == 0 || self.pool.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("pool rows must share a positive dimension and be finite"));
        }
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if self.refit_every == 0 || self.rank == 0 {
            return Err(Error::invalid("refit_every and rank must be positive"));
        }
        if self.initial_indices.is_empty() {
            return Err(Error::invalid("at least one initial index is required"));
        }
        let mut seen = vec![false; self.pool.len()];
        for &i in &self.initial_indices {
            if i >= self.pool.len() {
                return Err(Error::invalid(format!("initial index {i} outside pool of {}", self.pool.len())));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("initial index {i} repeated")));
            }
        }
        Ok(())
    }
}

/// One query of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based query count.
    pub iteration: usize,
    pub index: usize,
    pub input: Vec<f64>,
    pub observation: Vec<f64>,
    pub objective: f64,
    pub incumbent_value: f64,
    pub incumbent_input: Vec<f64>,
    /// Score of the chosen candidate; absent for random search.
    pub acquisition_value: Option<f64>,
    /// Log marginal likelihood before and after re-estimating
    /// hyperparameters on the enlarged dataset.
    pub lml_before_fit: Option<f64>,
    pub lml_after_fit: Option<f64>,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub strategy: Strategy,
    pub initial_indices: Vec<usize>,
    pub initial_incumbent: f64,
    pub records: Vec<TraceRecord>,
    /// The run stopped early because every pool point had been queried.
    pub pool_exhausted: bool,
}

impl Trace {
    /// Incumbent input after the last query, the loop's answer.
    pub fn best_input(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.incumbent_input.as_slice())
    }
}

/// Incumbent value after each query.
pub fn simple_regret(trace: &Trace) -> Result<Vec<f64>> {
    if trace.records.is_empty() {
        return Err(Error::invalid("trace has no records"));
    }
    Ok(trace.records.iter().map(|r| r.incumbent_value).collect())
}

/// A candidate chosen by [`Learner::ask`], awaiting its observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub index: usize,
    pub input: Vec<f64>,
    pub acquisition_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    stream: u64,
    /// `u128` word position, kept as text for portable JSON.
    word_pos: String,
}

impl RngState {
    fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    fn restore(&self) -> Result<ChaCha8Rng> {
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::invalid(format!("bad rng word position '{}'", self.word_pos)))?;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

mod rng_serde {
    use super::RngState;
    use rand_chacha::ChaCha8Rng;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(rng: &ChaCha8Rng, s: S) -> Result<S::Ok, S::Error> {
        RngState::capture(rng).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ChaCha8Rng, D::Error> {
        RngState::deserialize(d)?.restore().map_err(serde::de::Error::custom)
    }
}

/// Ask/tell state of one active learning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Learner {
    config: LoopConfig,
    target: Target,
    /// Model inputs, scaled when `normalize_inputs` is set.
    data: Dataset,
    queried: Vec<bool>,
    hyper: Option<Hyperparams>,
    incumbent: Incumbent,
    initial_incumbent: f64,
    since_refit: usize,
    pending: Option<Proposal>,
    records: Vec<TraceRecord>,
    pool_exhausted: bool,
    #[serde(with = "rng_serde")]
    rng: ChaCha8Rng,
}

impl Learner {
    /// Start from the observations at `config.initial_indices`, in order.
    pub fn start(config: LoopConfig, target: Target, initial_observations: &[Vec<f64>]) -> Result<Self> {
        config.validate()?;
        if initial_observations.len() != config.initial_indices.len() {
            return Err(Error::invalid(format!(
                "{} initial observations for {} initial indices",
                initial_observations.len(),
                config.initial_indices.len()
            )));
        }
        let m = target.len();
        let mut data = Dataset::empty(config.input_dim(), m);
        let mut queried = vec![false; config.pool.len()];
        let mut best: Option<Incumbent> = None;
        let scaled = scaled_pool(&config);
        for (&i, y) in config.initial_indices.iter().zip(initial_observations) {
            let value = squared_error(y, &target)?;
            data.push(&scaled[i], y)?;
            queried[i] = true;
            match &mut best {
                Some(inc) => {
                    inc.update(&config.pool[i], value);
                }
                None => {
                    best = Some(Incumbent {
                        best_value: value,
                        best_input: config.pool[i].clone(),
                    })
                }
            }
        }
        let incumbent = best.expect("at least one initial observation");
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut learner = Self {
            initial_incumbent: incumbent.best_value,
            config,
            target,
            data,
            queried,
            hyper: None,
            incumbent,
            since_refit: 0,
            pending: None,
            records: Vec::new(),
            pool_exhausted: false,
            rng,
        };
        if learner.uses_model() {
            let init = Hyperparams::initial_guess(&learner.data, learner.config.rank);
            let model = mogp::fit(learner.data.clone(), &init, &learner.fit_options(0))?;
            learner.hyper = Some(model.hyperparams().clone());
        }
        Ok(learner)
    }

    pub fn config(&self) -> &LoopConfig {
        &self.config
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn incumbent(&self) -> &Incumbent {
        &self.incumbent
    }

    pub fn hyperparams(&self) -> Option<&Hyperparams> {
        self.hyper.as_ref()
    }

    pub fn pending(&self) -> Option<&Proposal> {
        self.pending.as_ref()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn is_queried(&self, index: usize) -> bool {
        self.queried.get(index).copied().unwrap_or(false)
    }

    /// Dataset seen by the model (inputs possibly scaled).
    pub fn model_data(&self) -> &Dataset {
        &self.data
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() >= self.config.budget || self.queried.iter().all(|q| *q)
    }

    pub fn trace(&self) -> Trace {
        Trace {
            strategy: self.config.strategy,
            initial_indices: self.config.initial_indices.clone(),
            initial_incumbent: self.initial_incumbent,
            records: self.records.clone(),
            pool_exhausted: self.pool_exhausted,
        }
    }

    fn uses_model(&self) -> bool {
        self.config.strategy != Strategy::Random
    }

    fn fit_options(&self, step: usize) -> FitOptions {
        FitOptions {
            seed: self.config.seed ^ (step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..self.config.fit.clone()
        }
    }

    /// Model conditioned on the current data and hyperparameters.
    pub fn model(&self) -> Result<Option<FittedModel>> {
        match &self.hyper {
            Some(h) => Ok(Some(FittedModel::new(self.data.clone(), h.clone())?)),
            None => Ok(None),
        }
    }

    /// Choose the next pool point. `None` once the budget is spent or the
    /// pool is exhausted.
    pub fn ask(&mut self) -> Result<Option<Proposal>> {
        if self.pending.is_some() {
            return Err(Error::invalid("a proposal is already pending; tell its observation first"));
        }
        if self.records.len() >= self.config.budget {
            return Ok(None);
        }
        let open: Vec<usize> = (0..self.queried.len()).filter(|&i| !self.queried[i]).collect();
        if open.is_empty() {
            self.pool_exhausted = true;
            return Ok(None);
        }
        let (index, score) = match self.config.strategy.acquisition() {
            None => (open[self.rng.random_range(0..open.len())], None),
            Some(kind) => {
                let model = self.model()?.expect("model-based strategies always hold hyperparameters");
                let scaled = scaled_pool(&self.config);
                let posts = open
                    .iter()
                    .map(|&i| model.predict(&scaled[i], self.config.include_noise))
                    .collect::<Result<Vec<_>>>()?;
                let (k, s) = acquisition::select(kind, &posts, &self.target, self.incumbent.best_value)?
                    .expect("open candidates are non-empty");
                (open[k], Some(s))
            }
        };
        let proposal = Proposal {
            index,
            input: self.config.pool[index].clone(),
            acquisition_value: score,
        };
        self.pending = Some(proposal.clone());
        Ok(Some(proposal))
    }

    /// Record the observation for the pending proposal.
    pub fn tell(&mut self, y: &[f64]) -> Result<&TraceRecord> {
        let Some(proposal) = self.pending.clone() else {
            return Err(Error::invalid("no pending proposal; ask first"));
        };
        let objective = squared_error(y, &self.target)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation has non-finite entries"));
        }
        let mut data = self.data.clone();
        data.push(&scaled_pool(&self.config)[proposal.index], y)?;

        let step = self.records.len() + 1;
        let (mut before, mut after, mut hyper) = (None, None, self.hyper.clone());
        let mut since_refit = self.since_refit + 1;
        if let Some(h) = &self.hyper {
            let current = FittedModel::new(data.clone(), h.clone())?;
            before = Some(current.log_marginal_likelihood());
            if since_refit >= self.config.refit_every {
                let fitted = mogp::fit(data.clone(), h, &self.fit_options(step))?;
                after = Some(fitted.log_marginal_likelihood());
                hyper = Some(fitted.hyperparams().clone());
                since_refit = 0;
            } else {
                after = before;
            }
        }

        self.data = data;
        self.hyper = hyper;
        self.since_refit = since_refit;
        self.queried[proposal.index] = true;
        self.incumbent.update(&proposal.input, objective);
        self.pending = None;
        self.records.push(TraceRecord {
            iteration: step,
            index: proposal.index,
            input: proposal.input,
            observation: y.to_vec(),
            objective,
            incumbent_value: self.incumbent.best_value,
            incumbent_input: self.incumbent.best_input.clone(),
            acquisition_value: proposal.acquisition_value,
            lml_before_fit: before,
            lml_after_fit: after,
            wall_time_s: None,
        });
        Ok(self.records.last().expect("just pushed"))
    }
}

fn scaled_pool(config: &LoopConfig) -> Vec<Vec<f64>> {
    if !config.normalize_inputs {
        return config.pool.clone();
    }
    let d = config.input_dim();
    let lo: Vec<f64> = (0..d).map(|j| config.pool.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|j| config.pool.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    config
        .pool
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, v)| if hi[j] > lo[j] { (v - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// A run that stopped on an error, with everything recorded before it.
#[derive(Debug)]
pub struct PartialRun {
    pub trace: Trace,
    pub error: Error,
}

impl fmt::Display for PartialRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted after {} queries: {}", self.trace.records.len(), self.error)
    }
}

impl std::error::Error for PartialRun {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Drive a [`Learner`] with `oracle` until the budget or the pool runs out.
pub fn run<F>(config: LoopConfig, mut oracle: F, target: Target) -> std::result::Result<Trace, PartialRun>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let empty = |error| PartialRun {
        trace: Trace {
            strategy: config.strategy,
            initial_indices: config.initial_indices.clone(),
            initial_incumbent: f64::NAN,
            records: Vec::new(),
            pool_exhausted: false,
        },
        error,
    };
    if let Err(e) = config.validate() {
        return Err(empty(e));
    }
    let mut initial = Vec::with_capacity(config.initial_indices.len());
    for &i in &config.initial_indices {
        match oracle(&config.pool[i]) {
            Ok(y) => initial.push(y),
            Err(e) => return Err(empty(e)),
        }
    }
    let timing = config.record_timing;
    let mut learner = match Learner::start(config.clone(), target, &initial) {
        Ok(l) => l,
        Err(e) => return Err(empty(e)),
    };
    let abort = |learner: &Learner, error| PartialRun {
        trace: learner.trace(),
        error,
    };
    loop {
        let clock = Instant::now();
        let proposal = match learner.ask() {
            Ok(Some(p)) => p,
            Ok(None) => break,
            Err(e) => return Err(abort(&learner, e)),
        };
        let y = match oracle(&proposal.input) {
            Ok(y) => y,
            Err(e) => return Err(abort(&learner, e)),
        };
        if let Err(e) = learner.tell(&y) {
            return Err(abort(&learner, e));
        }
        if timing {
            let last = learner.records.last_mut().expect("tell appended a record");
            last.wall_time_s = Some(clock.elapsed().as_secs_f64());
        }
    }
    Ok(learner.trace())
}

/// Settings shared by every trial of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub problem: Problem,
    pub strategies: Vec<Strategy>,
    pub budget: usize,
    pub trials: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub init_size: usize,
    pub input_range: (f64, f64),
    pub noise_variance: f64,
    pub include_noise: bool,
    pub normalize_inputs: bool,
    pub rank: usize,
    pub fit: FitOptions,
}

impl BenchmarkConfig {
    pub fn new(problem: Problem, strategies: Vec<Strategy>, budget: usize, trials: usize, seed: u64) -> Self {
        Self {
            problem,
            strategies,
            budget,
            trials,
            seed,
            pool_size: 100,
            init_size: 2,
            input_range: (-5.0, 5.0),
            noise_variance: crate::oracles::DEFAULT_NOISE_VARIANCE,
            include_noise: true,
            normalize_inputs: false,
            rank: 1,
            fit: FitOptions::default(),
        }
    }
}

/// Pool, initial design and target of one trial, shared by all strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub trial: usize,
    pub pool: Vec<f64>,
    pub initial_indices: Vec<usize>,
    pub target_index: usize,
    pub target: Target,
    /// Seeds the observation noise.
    pub noise_seed: u64,
    /// Seeds the learner.
    pub loop_seed: u64,
}

pub fn trial_setup(cfg: &BenchmarkConfig, trial: usize) -> Result<TrialSetup> {
    if cfg.init_size == 0 || cfg.init_size >= cfg.pool_size {
        return Err(Error::invalid(format!(
            "initial design of {} needs a pool larger than that (pool {})",
            cfg.init_size, cfg.pool_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let pool = generate_pool(cfg.pool_size, cfg.input_range, rng.next_u64())?;
    let picks = rand::seq::index::sample(&mut rng, cfg.pool_size, cfg.init_size + 1).into_vec();
    let target_index = picks[cfg.init_size];
    // Pool order, so a dataset re-imported from a pool file lines up.
    let mut initial_indices = picks[..cfg.init_size].to_vec();
    initial_indices.sort_unstable();
    let target = Target::new(cfg.problem.eval(pool[target_index]))?;
    Ok(TrialSetup {
        trial,
        pool,
        initial_indices,
        target_index,
        target,
        noise_seed: rng.next_u64(),
        loop_seed: rng.next_u64(),
    })
}

impl TrialSetup {
    pub fn loop_config(&self, cfg: &BenchmarkConfig, strategy: Strategy) -> LoopConfig {
        LoopConfig {
            include_noise: cfg.include_noise,
            normalize_inputs: cfg.normalize_inputs,
            rank: cfg.rank,
            fit: cfg.fit.clone(),
            ..LoopConfig::new(
                strategy,
                cfg.budget,
                self.pool.iter().map(|x| vec![*x]).collect(),
                self.initial_indices.clone(),
                self.loop_seed,
            )
        }
    }
}

/// Noisy oracle for one trial; its noise stream is independent of strategy.
pub fn trial_oracle(cfg: &BenchmarkConfig, setup: &TrialSetup) -> Result<impl FnMut(&[f64]) -> Result<Vec<f64>>> {
    let oracle = SyntheticOracle::with_noise_variance(cfg.problem, cfg.noise_variance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.noise_seed);
    Ok(move |x: &[f64]| oracle.observe(x[0], &mut rng))
}

pub fn run_trial(cfg: &BenchmarkConfig, setup: &TrialSetup, strategy: Strategy) -> std::result::Result<Trace, PartialRun> {
    let config = setup.loop_config(cfg, strategy);
    let oracle = match trial_oracle(cfg, setup) {
        Ok(o) => o,
        Err(error) => {
            return Err(PartialRun {
                trace: Trace {
                    strategy,
                    initial_indices: setup.initial_indices.clone(),
                    initial_incumbent: f64::NAN,
                    records: Vec::new(),
                    pool_exhausted: false,
                },
                error,
            })
        }
    };
    run(config, oracle, setup.target.clone())
}

/// Mean and population standard deviation of `log₁₀(regret + ε)` at one
/// iteration; iteration 0 is the initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub iteration: usize,
    pub mean_log10_regret: f64,
    pub std_log10_regret: f64,
}

/// Regret curve including the initial incumbent, padded with its last value
/// up to `budget` queries.
pub fn regret_curve(trace: &Trace, budget: usize) -> Vec<f64> {
    let mut curve = Vec::with_capacity(budget + 1);
    curve.push(trace.initial_incumbent);
    curve.extend(trace.records.iter().map(|r| r.incumbent_value));
    let last = *curve.last().expect("non-empty");
    curve.resize(budget + 1, last);
    curve
}

pub fn summarize(strategy: Strategy, traces: &[Trace], budget: usize) -> Vec<SummaryRow> {
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| regret_curve(t, budget)).collect();
    (0..=budget)
        .map(|t| {
            let logs: Vec<f64> = curves.iter().map(|c| (c[t] + LOG_EPSILON).log10()).collect();
            let n = logs.len() as f64;
            let mean = logs.iter().sum::<f64>() / n;
            let var = logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            SummaryRow {
                strategy,
                iteration: t,
                mean_log10_regret: mean,
                std_log10_regret: var.sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub setups: Vec<TrialSetup>,
    /// `traces[s][k]` is strategy `s` on trial `k`.
    pub traces: Vec<Vec<Trace>>,
    pub summary: Vec<SummaryRow>,
}

/// Run every strategy on `cfg.trials` paired trials.
pub fn benchmark(cfg: &BenchmarkConfig) -> std::result::Result<BenchmarkResult, PartialRun> {
    if cfg.trials == 0 || cfg.strategies.is_empty() {
        return Err(PartialRun {
            trace: Trace {
                strategy: Strategy::Random,
                initial_indices: Vec::new(),
                initial_incumbent: f64::NAN,
                records: Vec::new(),
                pool_exhausted: false,
            },
            error: Error::invalid("benchmark needs at least one trial and one strategy"),
        });
    }
    let mut setups = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials {
        let setup = trial_setup(cfg, k).map_err(|error| PartialRun {
            trace: Trace {
                strategy: cfg.strategies[0],
                initial_indices: Vec::new(),
                initial_incumbent: f64::NAN,
                records: Vec::new(),
                pool_exhausted: false,
            },
            error,
        })?;
        setups.push(setup);
    }
    let mut traces = Vec::with_capacity(cfg.strategies.len());
    let mut summary = Vec::new();
    for &s in &cfg.strategies {
        let per_trial = setups
            .iter()
            .map(|setup| run_trial(cfg, setup, s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        summary.extend(summarize(s, &per_trial, cfg.budget));
        traces.push(per_trial);
    }
    Ok(BenchmarkResult { setups, traces, summary })
}
