//! Good-Turing missing-mass estimation.
//!
//! The estimate for expert `i` after `n_i` requests is the fraction of its
//! draws that are interesting *hapaxes*: items drawn exactly once by `i`
//! and exactly once over all experts. An item drawn a second time, by any
//! expert, stops counting for whichever expert held it.

use std::collections::HashMap;

use thiserror::Error;

use crate::experts::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EstimatorError {
    #[error("expert {0} has not been requested yet; its estimate is undefined")]
    Undefined(usize),
    #[error("confidence level delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
}

#[derive(Debug, Clone, Copy)]
struct Sighting {
    // global count saturated at 2: only "exactly once" matters
    count: u8,
    holder: usize,
}

/// Per-expert hapax and pull counts.
///
/// Only interesting items are stored; for each one the tracker keeps the
/// (saturated) global count and the expert that drew it first, which is
/// all the hapax indicator needs.
#[derive(Debug, Clone)]
pub struct HapaxTracker {
    pulls: Vec<u64>,
    hapaxes: Vec<u64>,
    sightings: HashMap<ItemId, Sighting>,
}

impl HapaxTracker {
    pub fn new(num_experts: usize) -> Self {
        Self {
            pulls: vec![0; num_experts],
            hapaxes: vec![0; num_experts],
            sightings: HashMap::new(),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.pulls.len()
    }

    /// Records that `expert` returned `item`.
    pub fn record(&mut self, expert: usize, item: ItemId, is_interesting: bool) {
        self.pulls[expert] += 1;
        if !is_interesting {
            return;
        }
        match self.sightings.get_mut(&item) {
            None => {
                self.sightings.insert(item, Sighting { count: 1, holder: expert });
                self.hapaxes[expert] += 1;
            }
            Some(s) if s.count == 1 => {
                s.count = 2;
                self.hapaxes[s.holder] -= 1;
            }
            Some(_) => {}
        }
    }

    /// Requests made to `expert` so far.
    pub fn pulls(&self, expert: usize) -> u64 {
        self.pulls[expert]
    }

    pub fn total_pulls(&self) -> u64 {
        self.pulls.iter().sum()
    }

    /// Interesting hapaxes currently credited to `expert`.
    pub fn hapaxes(&self, expert: usize) -> u64 {
        self.hapaxes[expert]
    }

    /// Good-Turing estimate `U_i / n_i`.
    pub fn estimate(&self, expert: usize) -> Result<f64, EstimatorError> {
        match self.pulls[expert] {
            0 => Err(EstimatorError::Undefined(expert)),
            n => Ok(self.hapaxes[expert] as f64 / n as f64),
        }
    }

    /// Optimistic index `U_i / n_i + c * sqrt(ln(4t) / n_i)`.
    pub fn ucb_index(&self, expert: usize, t: u64, c: f64) -> Result<f64, EstimatorError> {
        let estimate = self.estimate(expert)?;
        Ok(estimate + exploration_bonus(t, self.pulls[expert], c))
    }
}

/// Confidence bonus `c * sqrt(ln(4t) / n)`.
pub fn exploration_bonus(t: u64, n: u64, c: f64) -> f64 {
    c * ((4.0 * t as f64).ln() / n as f64).sqrt()
}

/// A Good-Turing estimate together with its distribution-free interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub r_hat: f64,
    pub n: u64,
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
}

impl MassEstimate {
    pub fn contains(&self, mass: f64) -> bool {
        self.lower <= mass && mass <= self.upper
    }
}

/// Interval holding the true missing mass with probability at least `1 - delta`:
///
/// ```text
/// r_hat - 1/n - (1 + sqrt 2) sqrt(ln(4/delta) / n)  <=  R  <=  r_hat + (1 + sqrt 2) sqrt(ln(4/delta) / n)
/// ```
///
/// Bounds are not clamped to `[0, 1]`.
pub fn confidence_interval(r_hat: f64, n: u64, delta: f64) -> Result<MassEstimate, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::EmptySample);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EstimatorError::InvalidDelta(delta));
    }
    let width = (1.0 + std::f64::consts::SQRT_2) * ((4.0 / delta).ln() / n as f64).sqrt();
    Ok(MassEstimate {
        r_hat,
        n,
        lower: r_hat - 1.0 / n as f64 - width,
        upper: r_hat + width,
        delta,
    })
}
