//! Discovery episodes, waiting times and coupled Monte-Carlo replicates.
//!
//! All policies of a replicate read the same pre-drawn sample paths: the
//! `s`-th answer of expert `i` is fixed before any policy runs, so pathwise
//! comparisons between policies (and against the omniscient oracle) are
//! meaningful.

use rayon::prelude::*;
use thiserror::Error;

use crate::estimator::HapaxTracker;
use crate::experts::{ItemId, MassLedger, ProblemInstance};
use crate::policies::{self, Policy, PolicyError};
use crate::rng::{expert_stream, Stream};

const PATH_BLOCK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon {horizon} is shorter than the {experts} initial Good-UCB requests")]
    HorizonTooShort { horizon: u64, experts: usize },
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// Lazily extended answers `(X_{i,s})` of every expert for one replicate.
#[derive(Debug, Clone)]
pub struct SamplePaths<'a> {
    instance: &'a ProblemInstance,
    streams: Vec<Stream>,
    paths: Vec<Vec<ItemId>>,
    limit: Option<u64>,
}

impl<'a> SamplePaths<'a> {
    pub fn new(instance: &'a ProblemInstance, master_seed: u64, replicate: u64) -> Self {
        let k = instance.num_experts();
        Self {
            instance,
            streams: (0..k).map(|i| expert_stream(master_seed, replicate, i)).collect(),
            paths: vec![Vec::new(); k],
            limit: None,
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    /// Stops extending paths beyond `len` draws per expert.
    pub fn freeze_at(&mut self, len: u64) {
        self.limit = Some(len);
    }

    /// The `s`-th (0-based) answer of `expert`, or `None` past a frozen end.
    pub fn draw(&mut self, expert: usize, s: u64) -> Option<ItemId> {
        if self.limit.is_some_and(|limit| s >= limit) {
            return None;
        }
        let s = s as usize;
        let path = &mut self.paths[expert];
        while path.len() <= s {
            let stream = &mut self.streams[expert];
            let instance = self.instance;
            path.extend((0..PATH_BLOCK).map(|_| instance.sample(expert, stream)));
        }
        Some(path[s])
    }

    /// Draws materialized so far for `expert`.
    pub fn materialized(&self, expert: usize) -> usize {
        self.paths[expert].len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeOptions {
    /// Keep every expert's true missing mass after each step.
    pub record_masses: bool,
}

/// Time-indexed record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    num_experts: usize,
    /// Expert requested at step `t` (entry `t - 1`).
    pub pulls: Vec<usize>,
    /// Whether step `t` produced a new interesting item.
    pub discoveries: Vec<bool>,
    /// `F(t)` for `t = 1..=horizon`.
    pub found: Vec<u64>,
    /// Largest missing mass over experts after `t` steps, `t = 0..=horizon`.
    pub max_mass: Vec<f64>,
    /// Every expert's missing mass after `t` steps, `t = 0..=horizon`, if recorded.
    pub mass_trace: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn horizon(&self) -> u64 {
        self.pulls.len() as u64
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    /// `F(t)`, with `F(0) = 0`.
    pub fn found_at(&self, t: u64) -> u64 {
        if t == 0 {
            0
        } else {
            self.found[t as usize - 1]
        }
    }

    /// Per-expert request counts after `t` steps.
    pub fn counts_at(&self, t: u64) -> Vec<u64> {
        let mut counts = vec![0; self.num_experts];
        for &i in &self.pulls[..t as usize] {
            counts[i] += 1;
        }
        counts
    }

    /// Cumulative request counts after each step `t = 1..=horizon`.
    pub fn counts(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let mut counts = vec![0; self.num_experts];
        self.pulls.iter().map(move |&i| {
            counts[i] += 1;
            counts.clone()
        })
    }

    /// First `t` at which every expert's missing mass is at most `lambda`;
    /// `None` if the horizon ends first.
    pub fn waiting_time(&self, lambda: f64) -> Option<u64> {
        self.max_mass.iter().position(|&m| m <= lambda).map(|t| t as u64)
    }
}

/// Runs `policy` for `horizon` steps on the coupled `paths`.
pub fn run_episode(
    policy: &Policy,
    horizon: u64,
    paths: &mut SamplePaths<'_>,
    options: EpisodeOptions,
) -> Result<Trajectory, SimError> {
    let instance = paths.instance();
    let k = instance.num_experts();
    policy.validate(k, horizon)?;
    if matches!(policy, Policy::GoodUcb { .. }) && horizon < k as u64 {
        return Err(SimError::HorizonTooShort { horizon, experts: k });
    }

    let mut ledger = MassLedger::new(instance);
    let mut tracker = HapaxTracker::new(k);
    let mut consumed = vec![0u64; k];
    let n = horizon as usize;
    let mut traj = Trajectory {
        num_experts: k,
        pulls: Vec::with_capacity(n),
        discoveries: Vec::with_capacity(n),
        found: Vec::with_capacity(n),
        max_mass: Vec::with_capacity(n + 1),
        mass_trace: options.record_masses.then(|| Vec::with_capacity(n + 1)),
    };
    traj.max_mass.push(ledger.max_mass());
    if let Some(trace) = traj.mass_trace.as_mut() {
        trace.push(ledger.masses().to_vec());
    }

    let mut open_loop_expert = 0;
    for t in 1..=horizon {
        let expert = match policy {
            Policy::GoodUcb { c } => policies::good_ucb_select(&tracker, t, *c),
            Policy::Ocl => policies::ocl_select(ledger.masses()),
            Policy::UniformCycle => policies::uniform_select(t, k),
            Policy::OpenLoopOracle { allocation } => {
                while consumed[open_loop_expert] >= allocation[open_loop_expert] {
                    open_loop_expert += 1;
                }
                open_loop_expert
            }
        };
        let item = paths
            .draw(expert, consumed[expert])
            .ok_or(PolicyError::PathExhausted {
                expert,
                len: consumed[expert],
            })?;
        consumed[expert] += 1;
        let interesting = instance.is_interesting(item);
        tracker.record(expert, item, interesting);
        let new = ledger.discover(item);

        traj.pulls.push(expert);
        traj.discoveries.push(new);
        traj.found.push(ledger.found());
        traj.max_mass.push(ledger.max_mass());
        if let Some(trace) = traj.mass_trace.as_mut() {
            trace.push(ledger.masses().to_vec());
        }
    }
    Ok(traj)
}

/// Time points `every, 2 every, ...` up to and including `horizon`.
pub fn time_grid(horizon: u64, every: u64) -> Vec<u64> {
    let every = every.max(1);
    let mut grid: Vec<u64> = (1..=horizon / every).map(|k| k * every).collect();
    if grid.last() != Some(&horizon) && horizon > 0 {
        grid.push(horizon);
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub horizon: u64,
    pub replicates: u64,
    pub master_seed: u64,
    pub lambdas: Vec<f64>,
    /// Time points at which `F(t)` and request counts are kept.
    pub grid: Vec<u64>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub record_masses: bool,
}

/// What one policy produced on one replicate, condensed to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// `F(t)` at each grid point.
    pub found: Vec<u64>,
    /// Request counts at each grid point.
    pub counts: Vec<Vec<u64>>,
    /// `T(lambda)` for each configured lambda.
    pub waiting: Vec<Option<u64>>,
    /// Per-expert missing masses at each grid point, when recorded.
    pub masses: Option<Vec<Vec<f64>>>,
}

impl RunSummary {
    pub fn from_trajectory(traj: &Trajectory, grid: &[u64], lambdas: &[f64]) -> Self {
        let mut counts = Vec::with_capacity(grid.len());
        let mut running = vec![0u64; traj.num_experts()];
        let mut step = 0usize;
        for &t in grid {
            while step < t as usize {
                running[traj.pulls[step]] += 1;
                step += 1;
            }
            counts.push(running.clone());
        }
        Self {
            found: grid.iter().map(|&t| traj.found_at(t)).collect(),
            counts,
            waiting: lambdas.iter().map(|&l| traj.waiting_time(l)).collect(),
            masses: traj
                .mass_trace
                .as_ref()
                .map(|trace| grid.iter().map(|&t| trace[t as usize].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    /// One entry per policy, in configuration order.
    pub runs: Vec<RunSummary>,
    /// `T*(lambda)` per lambda, for instances with disjoint supports.
    pub omniscient: Option<Vec<u64>>,
}

/// Mean, median and a 90% band of a statistic across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub t: u64,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub policies: Vec<Policy>,
    pub grid: Vec<u64>,
    pub lambdas: Vec<f64>,
    /// Replicates in index order, independent of scheduling.
    pub replicates: Vec<ReplicateOutcome>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl AggregateReport {
    /// Distribution of `F(t)` over replicates at every grid point.
    pub fn found_bands(&self, policy: usize) -> Vec<Band> {
        self.grid
            .iter()
            .enumerate()
            .map(|(g, &t)| {
                let mut values: Vec<f64> = self
                    .replicates
                    .iter()
                    .map(|r| r.runs[policy].found[g] as f64)
                    .collect();
                values.sort_by(f64::total_cmp);
                Band {
                    t,
                    mean: values.iter().sum::<f64>() / values.len() as f64,
                    median: quantile(&values, 0.5),
                    q05: quantile(&values, 0.05),
                    q95: quantile(&values, 0.95),
                }
            })
            .collect()
    }

    /// Mean `F(t)` over replicates at every grid point.
    pub fn mean_found(&self, policy: usize) -> Vec<f64> {
        self.found_bands(policy).iter().map(|b| b.mean).collect()
    }

    /// `T(lambda)` of `policy` for every replicate (rows) and lambda (columns).
    pub fn waiting_times(&self, policy: usize) -> Vec<Vec<Option<u64>>> {
        self.replicates.iter().map(|r| r.runs[policy].waiting.clone()).collect()
    }

    /// Coupled `T_policy(lambda) - T*(lambda)` per replicate and lambda;
    /// `None` where the policy did not reach `lambda` or no oracle exists.
    pub fn coupled_differences(&self, policy: usize) -> Vec<Vec<Option<i64>>> {
        self.replicates
            .iter()
            .map(|r| {
                r.runs[policy]
                    .waiting
                    .iter()
                    .enumerate()
                    .map(|(l, w)| {
                        let star = r.omniscient.as_ref()?[l];
                        w.map(|w| w as i64 - star as i64)
                    })
                    .collect()
            })
            .collect()
    }
}

fn run_replicate(
    instance: &ProblemInstance,
    policies: &[Policy],
    config: &MonteCarloConfig,
    replicate: u64,
) -> Result<ReplicateOutcome, SimError> {
    let mut paths = SamplePaths::new(instance, config.master_seed, replicate);
    let options = EpisodeOptions {
        record_masses: config.record_masses,
    };
    let runs = policies
        .iter()
        .map(|policy| {
            let traj = run_episode(policy, config.horizon, &mut paths, options)?;
            Ok(RunSummary::from_trajectory(&traj, &config.grid, &config.lambdas))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let omniscient = if instance.has_disjoint_supports() {
        Some(
            config
                .lambdas
                .iter()
                .map(|&l| policies::omniscient_waiting_time(&mut paths, l))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    Ok(ReplicateOutcome {
        replicate,
        runs,
        omniscient,
    })
}

/// Runs every policy on `replicates` coupled replicates in parallel.
///
/// The result depends only on the configuration (including the master
/// seed), not on the thread count or completion order.
pub fn monte_carlo(
    instance: &ProblemInstance,
    policies: &[Policy],
    config: &MonteCarloConfig,
) -> Result<AggregateReport, SimError> {
    if config.replicates == 0 {
        return Err(SimError::NoReplicates);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    let replicates = pool.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(instance, policies, config, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(AggregateReport {
        policies: policies.to_vec(),
        grid: config.grid.clone(),
        lambdas: config.lambdas.clone(),
        replicates,
    })
}
