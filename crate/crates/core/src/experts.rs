//! Problem instances: experts, their sampling laws and the interesting set.
//!
//! Two families of instances are supported.
//!
//! * **Disjoint uniform** instances give expert `i` its own block of `N_i`
//!   items, encoded as `offset_i + x` with `offset_i = N_0 + ... + N_{i-1}`
//!   (so `i * N + x` when all blocks share the same size). The first `Q_i`
//!   items of each block are interesting. Supports never intersect.
//! * **Shared-universe** instances let every expert draw natural-number
//!   labels from a common space (geometric or categorical laws); the
//!   interesting set is either the primes or an explicit list of labels.
//!   Supports may intersect.

use std::collections::{BTreeSet, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Geometric;
use thiserror::Error;

use crate::primes::is_prime;

/// Default tail-mass cutoff for infinite supports.
pub const DEFAULT_TRUNCATION_EPSILON: f64 = 1e-12;

/// Proportions of interesting items in the seven-expert benchmark.
pub const SEVEN_EXPERT_PROPORTIONS: [f64; 7] = [0.512, 0.256, 0.128, 0.064, 0.032, 0.016, 0.008];

/// Opaque label of an element of the item universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub u64);

/// Sampling law of a single expert.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpertKind {
    /// Uniform over a private block of `support` items, the first
    /// `interesting` of which are interesting.
    UniformDisjoint { support: u64, interesting: u64 },
    /// Geometric on `{1, 2, ...}` with `P(x) = p (1 - p)^(x - 1)`, `p = 1 / mean`.
    Geometric { mean: f64 },
    /// Explicit law over labels `0..probabilities.len()`.
    Categorical { probabilities: Vec<f64> },
}

/// Which items count as interesting.
#[derive(Debug, Clone, PartialEq)]
pub enum InterestingSet {
    /// The first `Q_i` items of each disjoint block.
    LeadingItems,
    /// Prime labels.
    Primes,
    /// An explicit set of labels.
    Items(BTreeSet<u64>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("an instance needs at least one expert")]
    NoExperts,
    #[error("expert {expert}: {reason}")]
    InvalidExpert { expert: usize, reason: String },
    #[error("disjoint uniform experts cannot be mixed with shared-universe experts")]
    MixedKinds,
    #[error("leading-items interest is only defined for disjoint uniform experts")]
    InterestMismatch,
    #[error("support size {support} gives proportion {proportion} no interesting item")]
    EmptyProportion { support: u64, proportion: f64 },
    #[error("truncation epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
}

#[derive(Debug, Clone)]
enum Sampler {
    Uniform { support: u64, offset: u64 },
    Geometric(Geometric),
    Categorical(WeightedIndex<f64>),
}

#[derive(Debug, Clone)]
struct Expert {
    kind: ExpertKind,
    sampler: Sampler,
    offset: u64,
    initial_mass: f64,
}

/// An immutable discovery problem: `K` experts plus the interesting set.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    experts: Vec<Expert>,
    interesting: InterestingSet,
    truncation_epsilon: f64,
    disjoint_blocks: bool,
}

fn validate_kind(expert: usize, kind: &ExpertKind) -> Result<(), InstanceError> {
    let fail = |reason: String| Err(InstanceError::InvalidExpert { expert, reason });
    match kind {
        ExpertKind::UniformDisjoint { support, interesting } => {
            if *support == 0 {
                return fail("support must be non-empty".into());
            }
            if interesting > support {
                return fail(format!("{interesting} interesting items exceed support {support}"));
            }
        }
        ExpertKind::Geometric { mean } => {
            if !mean.is_finite() || *mean < 1.0 {
                return fail(format!("geometric mean must be >= 1, got {mean}"));
            }
        }
        ExpertKind::Categorical { probabilities } => {
            if probabilities.is_empty() {
                return fail("categorical law needs at least one label".into());
            }
            if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return fail("categorical probabilities must be finite and non-negative".into());
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return fail(format!("categorical probabilities sum to {total}, not 1"));
            }
        }
    }
    Ok(())
}

impl ProblemInstance {
    /// Builds an instance from explicit expert laws.
    pub fn new(
        kinds: Vec<ExpertKind>,
        interesting: InterestingSet,
        truncation_epsilon: f64,
    ) -> Result<Self, InstanceError> {
        if kinds.is_empty() {
            return Err(InstanceError::NoExperts);
        }
        if !(truncation_epsilon > 0.0 && truncation_epsilon < 1.0) {
            return Err(InstanceError::InvalidEpsilon(truncation_epsilon));
        }
        for (i, kind) in kinds.iter().enumerate() {
            validate_kind(i, kind)?;
        }
        let uniform = kinds
            .iter()
            .filter(|k| matches!(k, ExpertKind::UniformDisjoint { .. }))
            .count();
        if uniform != 0 && uniform != kinds.len() {
            return Err(InstanceError::MixedKinds);
        }
        let disjoint_blocks = uniform != 0;
        if disjoint_blocks != (interesting == InterestingSet::LeadingItems) {
            return Err(InstanceError::InterestMismatch);
        }

        let mut offset = 0;
        let mut experts = Vec::with_capacity(kinds.len());
        for (i, kind) in kinds.into_iter().enumerate() {
            let sampler = match &kind {
                ExpertKind::UniformDisjoint { support, .. } => Sampler::Uniform {
                    support: *support,
                    offset,
                },
                ExpertKind::Geometric { mean } => {
                    Sampler::Geometric(Geometric::new(1.0 / mean).map_err(|e| {
                        InstanceError::InvalidExpert {
                            expert: i,
                            reason: e.to_string(),
                        }
                    })?)
                }
                ExpertKind::Categorical { probabilities } => {
                    Sampler::Categorical(WeightedIndex::new(probabilities).map_err(|e| {
                        InstanceError::InvalidExpert {
                            expert: i,
                            reason: e.to_string(),
                        }
                    })?)
                }
            };
            let this_offset = offset;
            if let ExpertKind::UniformDisjoint { support, .. } = &kind {
                offset += support;
            }
            experts.push(Expert {
                kind,
                sampler,
                offset: this_offset,
                initial_mass: 0.0,
            });
        }
        let mut instance = Self {
            experts,
            interesting,
            truncation_epsilon,
            disjoint_blocks,
        };
        for i in 0..instance.experts.len() {
            instance.experts[i].initial_mass = instance.full_mass(i);
        }
        Ok(instance)
    }

    /// Disjoint uniform experts given as `(support, interesting)` pairs.
    pub fn uniform_disjoint(blocks: &[(u64, u64)]) -> Result<Self, InstanceError> {
        let kinds = blocks
            .iter()
            .map(|&(support, interesting)| ExpertKind::UniformDisjoint { support, interesting })
            .collect();
        Self::new(kinds, InterestingSet::LeadingItems, DEFAULT_TRUNCATION_EPSILON)
    }

    /// Disjoint uniform experts sharing support size `support`, with
    /// `round(q_i * support)` interesting items each.
    pub fn from_proportions(support: u64, proportions: &[f64]) -> Result<Self, InstanceError> {
        let blocks = proportions
            .iter()
            .map(|&q| {
                let count = (q * support as f64).round() as u64;
                if count == 0 {
                    Err(InstanceError::EmptyProportion {
                        support,
                        proportion: q,
                    })
                } else {
                    Ok((support, count))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::uniform_disjoint(&blocks)
    }

    /// The seven-expert benchmark with proportions 51.2%, 25.6%, ..., 0.8%.
    pub fn seven_expert(support: u64) -> Result<Self, InstanceError> {
        Self::from_proportions(support, &SEVEN_EXPERT_PROPORTIONS)
    }

    /// Geometric experts with the given means; primes are interesting.
    pub fn primes(means: &[f64]) -> Result<Self, InstanceError> {
        let kinds = means.iter().map(|&mean| ExpertKind::Geometric { mean }).collect();
        Self::new(kinds, InterestingSet::Primes, DEFAULT_TRUNCATION_EPSILON)
    }

    /// Categorical experts over a shared label space.
    pub fn categorical(
        laws: Vec<Vec<f64>>,
        interesting: impl IntoIterator<Item = u64>,
    ) -> Result<Self, InstanceError> {
        let kinds = laws
            .into_iter()
            .map(|probabilities| ExpertKind::Categorical { probabilities })
            .collect();
        Self::new(
            kinds,
            InterestingSet::Items(interesting.into_iter().collect()),
            DEFAULT_TRUNCATION_EPSILON,
        )
    }

    pub fn num_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn expert(&self, expert: usize) -> &ExpertKind {
        &self.experts[expert].kind
    }

    pub fn interesting_set(&self) -> &InterestingSet {
        &self.interesting
    }

    pub fn truncation_epsilon(&self) -> f64 {
        self.truncation_epsilon
    }

    /// True for disjoint uniform instances, where `ItemId = offset_i + x`.
    pub fn has_disjoint_blocks(&self) -> bool {
        self.disjoint_blocks
    }

    /// Draws one item from `expert`, consuming one logical draw of `stream`.
    pub fn sample<R: Rng + ?Sized>(&self, expert: usize, stream: &mut R) -> ItemId {
        match &self.experts[expert].sampler {
            Sampler::Uniform { support, offset } => ItemId(offset + stream.random_range(0..*support)),
            Sampler::Geometric(law) => ItemId(1 + law.sample(stream)),
            Sampler::Categorical(law) => ItemId(law.sample(stream) as u64),
        }
    }

    /// Index of the block owning `item` in a disjoint instance.
    pub fn block_of(&self, item: ItemId) -> Option<usize> {
        if !self.disjoint_blocks {
            return None;
        }
        let block = self.experts.partition_point(|e| e.offset <= item.0).checked_sub(1)?;
        match self.experts[block].kind {
            ExpertKind::UniformDisjoint { support, .. } if item.0 < self.experts[block].offset + support => {
                Some(block)
            }
            _ => None,
        }
    }

    pub fn is_interesting(&self, item: ItemId) -> bool {
        match &self.interesting {
            InterestingSet::LeadingItems => match self.block_of(item) {
                Some(block) => match self.experts[block].kind {
                    ExpertKind::UniformDisjoint { interesting, .. } => {
                        item.0 - self.experts[block].offset < interesting
                    }
                    _ => false,
                },
                None => false,
            },
            InterestingSet::Primes => is_prime(item.0),
            InterestingSet::Items(items) => items.contains(&item.0),
        }
    }

    /// Probability that `expert` draws `item`.
    pub fn pmf(&self, expert: usize, item: ItemId) -> f64 {
        let e = &self.experts[expert];
        match &e.kind {
            ExpertKind::UniformDisjoint { support, .. } => {
                if item.0 >= e.offset && item.0 < e.offset + support {
                    1.0 / *support as f64
                } else {
                    0.0
                }
            }
            ExpertKind::Geometric { mean } => {
                if item.0 == 0 {
                    return 0.0;
                }
                let p = 1.0 / mean;
                if p >= 1.0 {
                    return if item.0 == 1 { 1.0 } else { 0.0 };
                }
                p * ((item.0 - 1) as f64 * (-p).ln_1p()).exp()
            }
            ExpertKind::Categorical { probabilities } => {
                probabilities.get(item.0 as usize).copied().unwrap_or(0.0)
            }
        }
    }

    /// Largest label summed over for a geometric expert: `ceil(m ln(1/eps))`.
    pub fn truncation_cutoff(&self, expert: usize) -> Option<u64> {
        match self.experts[expert].kind {
            ExpertKind::Geometric { mean } => {
                Some((mean * (1.0 / self.truncation_epsilon).ln()).ceil().max(1.0) as u64)
            }
            _ => None,
        }
    }

    /// Labels with positive probability under `expert`, when finite.
    pub fn finite_support(&self, expert: usize) -> Option<Vec<ItemId>> {
        let e = &self.experts[expert];
        match &e.kind {
            ExpertKind::UniformDisjoint { support, .. } => {
                Some((e.offset..e.offset + support).map(ItemId).collect())
            }
            ExpertKind::Geometric { .. } => None,
            ExpertKind::Categorical { probabilities } => Some(
                probabilities
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(x, _)| ItemId(x as u64))
                    .collect(),
            ),
        }
    }

    /// Interesting items `expert` can produce, enumerated up to the tail
    /// cutoff for infinite supports.
    pub fn interesting_support(&self, expert: usize) -> Vec<ItemId> {
        match self.finite_support(expert) {
            Some(items) => items.into_iter().filter(|&x| self.is_interesting(x)).collect(),
            None => {
                let cutoff = self.truncation_cutoff(expert).unwrap_or(0);
                (1..=cutoff)
                    .map(ItemId)
                    .filter(|&x| self.is_interesting(x))
                    .collect()
            }
        }
    }

    fn full_mass(&self, expert: usize) -> f64 {
        match self.experts[expert].kind {
            ExpertKind::UniformDisjoint { support, interesting } => interesting as f64 / support as f64,
            _ => self
                .interesting_support(expert)
                .into_iter()
                .map(|x| self.pmf(expert, x))
                .sum(),
        }
    }

    /// Interesting mass of `expert` before anything is discovered.
    pub fn initial_mass(&self, expert: usize) -> f64 {
        self.experts[expert].initial_mass
    }

    /// Interesting items in `expert`'s block, for disjoint instances.
    pub fn interesting_count(&self, expert: usize) -> Option<u64> {
        match self.experts[expert].kind {
            ExpertKind::UniformDisjoint { interesting, .. } => Some(interesting),
            _ => None,
        }
    }

    /// Whether no interesting item can be produced by two different experts.
    ///
    /// Structural for disjoint uniform instances; checked by enumeration for
    /// categorical ones. Geometric experts all reach every prime, so any
    /// instance with two of them intersects.
    pub fn has_disjoint_supports(&self) -> bool {
        if self.disjoint_blocks || self.experts.len() == 1 {
            return true;
        }
        let mut owned = HashSet::new();
        for i in 0..self.experts.len() {
            if self.finite_support(i).is_none() {
                return false;
            }
            for x in self.interesting_support(i) {
                if !owned.insert(x) {
                    return false;
                }
            }
        }
        true
    }

    /// Total probability under `expert` of interesting items not in
    /// `discovered`. Infinite supports are summed up to the tail cutoff, so
    /// the value may fall short of the exact mass by at most the truncation
    /// epsilon.
    pub fn true_missing_mass(&self, expert: usize, discovered: &HashSet<ItemId>) -> f64 {
        if let ExpertKind::UniformDisjoint { support, interesting } = self.experts[expert].kind {
            let found = discovered
                .iter()
                .filter(|&&x| self.block_of(x) == Some(expert) && self.is_interesting(x))
                .count() as u64;
            return (interesting - found) as f64 / support as f64;
        }
        let seen: f64 = discovered
            .iter()
            .filter(|&&x| self.is_interesting(x))
            .map(|&x| self.pmf(expert, x))
            .sum();
        (self.initial_mass(expert) - seen).max(0.0)
    }
}

/// Incrementally maintained missing masses of every expert.
///
/// Disjoint instances keep exact integer counts so that masses are
/// `remaining / N` with a single rounding; shared-universe instances
/// subtract each discovered item's probability from every expert.
#[derive(Debug, Clone)]
pub struct MassLedger<'a> {
    instance: &'a ProblemInstance,
    discovered: HashSet<ItemId>,
    masses: Vec<f64>,
    remaining: Vec<u64>,
}

impl<'a> MassLedger<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        let k = instance.num_experts();
        Self {
            instance,
            discovered: HashSet::new(),
            masses: (0..k).map(|i| instance.initial_mass(i)).collect(),
            remaining: (0..k).map(|i| instance.interesting_count(i).unwrap_or(0)).collect(),
        }
    }

    /// Marks `item` as discovered; returns true if it is a new interesting item.
    pub fn discover(&mut self, item: ItemId) -> bool {
        if !self.instance.is_interesting(item) || !self.discovered.insert(item) {
            return false;
        }
        if let Some(block) = self.instance.block_of(item) {
            self.remaining[block] -= 1;
            if let ExpertKind::UniformDisjoint { support, .. } = self.instance.expert(block) {
                self.masses[block] = self.remaining[block] as f64 / *support as f64;
            }
        } else {
            for (i, mass) in self.masses.iter_mut().enumerate() {
                *mass = (*mass - self.instance.pmf(i, item)).max(0.0);
            }
        }
        true
    }

    pub fn is_discovered(&self, item: ItemId) -> bool {
        self.discovered.contains(&item)
    }

    pub fn discovered(&self) -> &HashSet<ItemId> {
        &self.discovered
    }

    pub fn found(&self) -> u64 {
        self.discovered.len() as u64
    }

    pub fn mass(&self, expert: usize) -> f64 {
        self.masses[expert]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// Interesting items of `expert`'s block not yet discovered (disjoint instances).
    pub fn remaining(&self, expert: usize) -> Option<u64> {
        self.instance.interesting_count(expert).map(|_| self.remaining[expert])
    }
}
