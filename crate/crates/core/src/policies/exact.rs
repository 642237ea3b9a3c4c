//! Exact expected discoveries on tiny finite instances.
//!
//! The state of the discovery game is the set of interesting items found
//! so far: draws are independent and the experts' laws are known, so no
//! other part of the history can help a policy. Expectations are computed
//! by memoized recursion over `(found set, requests left)`.

use std::collections::HashMap;

use thiserror::Error;

use crate::experts::ProblemInstance;

/// Largest number of interesting items the bitmask state can hold.
pub const MAX_INTERESTING: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("expert {0} has an infinite support")]
    InfiniteSupport(usize),
    #[error("{0} interesting items exceed the exact-solver limit of {MAX_INTERESTING}")]
    TooLarge(usize),
    #[error("expert index {0} is out of range")]
    UnknownExpert(usize),
}

/// One expert's law restricted to interesting items, plus the leftover mass.
#[derive(Debug, Clone)]
struct Law {
    hits: Vec<(u32, f64)>,
    miss: f64,
}

/// A finite discovery problem with interesting items numbered `0..m`.
#[derive(Debug, Clone)]
pub struct FiniteProblem {
    laws: Vec<Law>,
}

#[derive(Clone, Copy)]
enum Chooser<'a> {
    Optimal,
    Greedy,
    Sequence(&'a [usize]),
}

impl FiniteProblem {
    /// Extracts the interesting part of every expert's law.
    pub fn from_instance(instance: &ProblemInstance) -> Result<Self, ExactError> {
        let mut slots = HashMap::new();
        let mut laws = Vec::with_capacity(instance.num_experts());
        for expert in 0..instance.num_experts() {
            let support = instance
                .finite_support(expert)
                .ok_or(ExactError::InfiniteSupport(expert))?;
            let mut hits = Vec::new();
            let mut hit_mass = 0.0;
            for item in support {
                if instance.is_interesting(item) {
                    let next = slots.len() as u32;
                    let slot = *slots.entry(item).or_insert(next);
                    let p = instance.pmf(expert, item);
                    hits.push((slot, p));
                    hit_mass += p;
                }
            }
            laws.push(Law {
                hits,
                miss: (1.0 - hit_mass).max(0.0),
            });
        }
        if slots.len() > MAX_INTERESTING {
            return Err(ExactError::TooLarge(slots.len()));
        }
        Ok(Self { laws })
    }

    pub fn num_experts(&self) -> usize {
        self.laws.len()
    }

    /// Missing mass of `expert` when the items in `found` are discovered.
    pub fn missing_mass(&self, expert: usize, found: u32) -> f64 {
        self.laws[expert]
            .hits
            .iter()
            .filter(|(slot, _)| found & (1 << slot) == 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Best expected number of items found in `horizon` requests, over all
    /// (adaptive, possibly randomized) policies.
    pub fn optimal_value(&self, horizon: u32) -> f64 {
        self.value(Chooser::Optimal, 0, horizon, &mut HashMap::new())
    }

    /// Expected number found by the greedy oracle (largest true missing
    /// mass, lowest index on ties).
    pub fn greedy_value(&self, horizon: u32) -> f64 {
        self.value(Chooser::Greedy, 0, horizon, &mut HashMap::new())
    }

    /// Expected number found by a fixed request sequence.
    pub fn sequence_value(&self, sequence: &[usize]) -> Result<f64, ExactError> {
        if let Some(&bad) = sequence.iter().find(|&&i| i >= self.laws.len()) {
            return Err(ExactError::UnknownExpert(bad));
        }
        Ok(self.value(
            Chooser::Sequence(sequence),
            0,
            sequence.len() as u32,
            &mut HashMap::new(),
        ))
    }

    fn gain(&self, expert: usize, found: u32, left: u32, chooser: Chooser<'_>, memo: &mut HashMap<(u32, u32), f64>) -> f64 {
        let law = &self.laws[expert];
        let mut total = law.miss * self.value(chooser, found, left - 1, memo);
        for &(slot, p) in &law.hits {
            let bit = 1 << slot;
            total += if found & bit == 0 {
                p * (1.0 + self.value(chooser, found | bit, left - 1, memo))
            } else {
                p * self.value(chooser, found, left - 1, memo)
            };
        }
        total
    }

    fn value(&self, chooser: Chooser<'_>, found: u32, left: u32, memo: &mut HashMap<(u32, u32), f64>) -> f64 {
        if left == 0 {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(found, left)) {
            return v;
        }
        let v = match chooser {
            Chooser::Optimal => (0..self.laws.len())
                .map(|i| self.gain(i, found, left, chooser, memo))
                .fold(f64::NEG_INFINITY, f64::max),
            Chooser::Greedy => {
                let masses: Vec<f64> = (0..self.laws.len()).map(|i| self.missing_mass(i, found)).collect();
                let pick = super::ocl_select(&masses);
                self.gain(pick, found, left, chooser, memo)
            }
            Chooser::Sequence(seq) => {
                // requests are consumed front to back; `left` counts what remains
                let pick = seq[seq.len() - left as usize];
                self.gain(pick, found, left, chooser, memo)
            }
        };
        memo.insert((found, left), v);
        v
    }
}
