//! Empirical coverage of the Good-Turing confidence interval.
//!
//! Each replicate draws one expert's answers from its own seeded stream
//! and, at every requested sample size `n`, checks whether the interval
//! built from the first `n` answers contains the true missing mass.

use discovery::estimator::{confidence_interval, HapaxTracker};
use discovery::experts::{MassLedger, ProblemInstance};
use discovery::rng::expert_stream;
use rayon::prelude::*;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageCell {
    pub n: u64,
    pub delta: f64,
    pub covered: u64,
    pub replicates: u64,
}

impl CoverageCell {
    pub fn empirical(&self) -> f64 {
        self.covered as f64 / self.replicates as f64
    }

    /// `1 - delta` minus three binomial standard errors.
    pub fn threshold(&self) -> f64 {
        let p = 1.0 - self.delta;
        p - 3.0 * (p * (1.0 - p) / self.replicates as f64).sqrt()
    }

    pub fn passes(&self) -> bool {
        self.empirical() >= self.threshold()
    }
}

fn one_replicate(
    instance: &ProblemInstance,
    expert: usize,
    sizes: &[u64],
    deltas: &[f64],
    seed: u64,
    replicate: u64,
) -> Vec<u64> {
    let mut stream = expert_stream(seed, replicate, expert);
    let mut tracker = HapaxTracker::new(instance.num_experts());
    let mut ledger = MassLedger::new(instance);
    let mut hits = vec![0u64; sizes.len() * deltas.len()];
    let mut drawn = 0u64;
    for (s, &n) in sizes.iter().enumerate() {
        while drawn < n {
            let item = instance.sample(expert, &mut stream);
            tracker.record(expert, item, instance.is_interesting(item));
            ledger.discover(item);
            drawn += 1;
        }
        let r_hat = tracker.estimate(expert).expect("n >= 1");
        let mass = ledger.mass(expert);
        for (d, &delta) in deltas.iter().enumerate() {
            let interval = confidence_interval(r_hat, n, delta).expect("validated delta");
            hits[s * deltas.len() + d] += interval.contains(mass) as u64;
        }
    }
    hits
}

/// Coverage for every `(n, delta)` pair; sizes equal to 0 are skipped.
///
/// Counts are integer sums, so the table does not depend on `threads`.
pub fn coverage_table(
    instance: &ProblemInstance,
    expert: usize,
    sizes: &[u64],
    deltas: &[f64],
    replicates: u64,
    seed: u64,
    threads: usize,
) -> Result<Vec<CoverageCell>, CliError> {
    let mut sorted: Vec<u64> = sizes.iter().copied().filter(|&n| n > 0).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let totals = pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| one_replicate(instance, expert, &sorted, deltas, seed, r))
            .reduce(
                || vec![0u64; sorted.len() * deltas.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });
    Ok(sorted
        .iter()
        .enumerate()
        .flat_map(|(s, &n)| {
            let totals = &totals;
            deltas.iter().enumerate().map(move |(d, &delta)| CoverageCell {
                n,
                delta,
                covered: totals[s * deltas.len() + d],
                replicates,
            })
        })
        .collect())
}
