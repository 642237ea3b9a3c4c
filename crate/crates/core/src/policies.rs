//! Expert-selection rules.
//!
//! All selectors are pure functions of their inputs. Ties go to the lowest
//! expert index everywhere. Expert indices are 0-based; time steps start
//! at 1.

pub mod exact;

use thiserror::Error;

use crate::estimator::HapaxTracker;
use crate::macroscopic::{MacroscopicProfile, ProfileError};
use crate::simulator::SamplePaths;

/// Exploration constant used in the reference experiments.
pub const DEFAULT_C: f64 = 0.5;

/// Exploration constant backed by the distribution-free regret bound,
/// `(1 + sqrt 2) sqrt 3`.
pub const THEORY_C: f64 = (1.0 + std::f64::consts::SQRT_2) * 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("Good-UCB needs a positive exploration constant, got {0}")]
    InvalidConstant(f64),
    #[error("open-loop allocation has {got} entries for {experts} experts")]
    AllocationLength { got: usize, experts: usize },
    #[error("open-loop allocation sums to {got}, not the horizon {horizon}")]
    AllocationTotal { got: u64, horizon: u64 },
    #[error("the omniscient oracle needs disjoint supports on the interesting set")]
    IntersectingSupports,
    #[error("sample path of expert {expert} ended after {len} draws before reaching the target")]
    PathExhausted { expert: usize, len: u64 },
}

/// A selection rule together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Optimistic Good-Turing index with exploration constant `c`.
    GoodUcb { c: f64 },
    /// Greedy on the true missing masses.
    Ocl,
    /// Round-robin over experts.
    UniformCycle,
    /// Fixed request counts, consumed expert by expert.
    OpenLoopOracle { allocation: Vec<u64> },
}

impl Policy {
    /// Short label used in CSV output and plot legends.
    pub fn label(&self) -> String {
        match self {
            Policy::GoodUcb { c } => format!("good_ucb(c={c})"),
            Policy::Ocl => "ocl".to_string(),
            Policy::UniformCycle => "uniform".to_string(),
            Policy::OpenLoopOracle { .. } => "open_loop_oracle".to_string(),
        }
    }

    pub fn validate(&self, num_experts: usize, horizon: u64) -> Result<(), PolicyError> {
        match self {
            Policy::GoodUcb { c } if !(c.is_finite() && *c > 0.0) => Err(PolicyError::InvalidConstant(*c)),
            Policy::OpenLoopOracle { allocation } => {
                if allocation.len() != num_experts {
                    return Err(PolicyError::AllocationLength {
                        got: allocation.len(),
                        experts: num_experts,
                    });
                }
                let total: u64 = allocation.iter().sum();
                if total != horizon {
                    return Err(PolicyError::AllocationTotal { got: total, horizon });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Index of the largest value, lowest index on ties. NaN never wins.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Good-UCB choice at step `t`: expert `t - 1` during the first `K` steps,
/// then the largest optimistic index.
pub fn good_ucb_select(tracker: &HapaxTracker, t: u64, c: f64) -> usize {
    let k = tracker.num_experts();
    if t <= k as u64 {
        return (t - 1) as usize;
    }
    argmax((0..k).map(|i| tracker.ucb_index(i, t, c).unwrap_or(f64::INFINITY)))
}

/// Oracle closed-loop choice: the expert with the largest true missing mass.
pub fn ocl_select(masses: &[f64]) -> usize {
    argmax(masses.iter().copied())
}

/// Round-robin choice at step `t`, starting with expert 0.
pub fn uniform_select(t: u64, num_experts: usize) -> usize {
    ((t - 1) % num_experts as u64) as usize
}

/// Per-expert minimal request counts `T_i*(lambda)` on the coupled paths.
///
/// `T_i*` is the first `s` at which the missing mass of expert `i`, after
/// its own first `s` draws, is at most `lambda` (0 if it already is).
/// Paths are extended on demand unless `paths` is frozen.
pub fn omniscient_counts(paths: &mut SamplePaths<'_>, lambda: f64) -> Result<Vec<u64>, PolicyError> {
    let instance = paths.instance();
    if !instance.has_disjoint_supports() {
        return Err(PolicyError::IntersectingSupports);
    }
    (0..instance.num_experts())
        .map(|expert| {
            let mut mass = instance.initial_mass(expert);
            let mut remaining = instance.interesting_count(expert);
            let mut seen = std::collections::HashSet::new();
            let mut s = 0;
            while mass > lambda {
                let item = paths
                    .draw(expert, s)
                    .ok_or(PolicyError::PathExhausted { expert, len: s })?;
                s += 1;
                if instance.is_interesting(item) && seen.insert(item) {
                    mass = match (remaining.as_mut(), instance.expert(expert)) {
                        (Some(r), crate::experts::ExpertKind::UniformDisjoint { support, .. }) => {
                            *r -= 1;
                            *r as f64 / *support as f64
                        }
                        _ => (mass - instance.pmf(expert, item)).max(0.0),
                    };
                }
            }
            Ok(s)
        })
        .collect()
}

/// Omniscient waiting time `T*(lambda) = sum_i T_i*(lambda)`.
pub fn omniscient_waiting_time(paths: &mut SamplePaths<'_>, lambda: f64) -> Result<u64, PolicyError> {
    Ok(omniscient_counts(paths, lambda)?.iter().sum())
}

/// Open-loop oracle allocation of a normalized budget `t`:
/// `nu_i = t / I + ln(q_i / g_I)` on the `I = I(t)` active experts, 0 elsewhere.
pub fn ool_allocation(profile: &MacroscopicProfile, t: f64) -> Result<Vec<f64>, ProfileError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(ProfileError::InvalidTime(t));
    }
    let active = profile.active_index(t);
    let log_g = profile.geomean(active).ln();
    Ok(profile
        .proportions()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            if i < active {
                (t / active as f64 + q.ln() - log_g).max(0.0)
            } else {
                0.0
            }
        })
        .collect())
}

/// Integer request counts for a horizon of `horizon` requests on experts of
/// size `support`: the macroscopic allocation at `horizon / support`, scaled
/// back and rounded by largest remainder so it sums to `horizon`.
pub fn integer_allocation(
    profile: &MacroscopicProfile,
    horizon: u64,
    support: u64,
) -> Result<Vec<u64>, ProfileError> {
    let nu = ool_allocation(profile, horizon as f64 / support as f64)?;
    let scaled: Vec<f64> = nu.iter().map(|v| v * support as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = horizon.saturating_sub(assigned);
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::{ItemId, ProblemInstance};
    use approx::assert_abs_diff_eq;

    #[test]
    fn good_ucb_initialization_and_ties() {
        let tracker = HapaxTracker::new(7);
        assert_eq!(good_ucb_select(&tracker, 3, 0.5), 2);

        let mut tracker = HapaxTracker::new(2);
        tracker.record(0, ItemId(1), false);
        tracker.record(1, ItemId(2), false);
        assert_eq!(good_ucb_select(&tracker, 3, 0.5), 0);
    }

    #[test]
    fn good_ucb_prefers_larger_estimate_with_equal_pulls() {
        let mut tracker = HapaxTracker::new(2);
        for x in 0..10 {
            tracker.record(0, ItemId(x), x < 5);
            tracker.record(1, ItemId(100 + x), false);
        }
        assert_eq!(good_ucb_select(&tracker, 21, 0.5), 0);
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let values = [0.1, 0.7, 0.3, 0.7];
        assert_eq!(argmax(values), 1);
        for shift in [-5.0, 0.25, 1e3] {
            assert_eq!(argmax(values.iter().map(|v| v + shift)), 1);
        }
    }

    #[test]
    fn ocl_and_uniform_choices() {
        assert_eq!(ocl_select(&[0.5, 0.25, 0.1]), 0);
        assert_eq!(ocl_select(&[0.2, 0.2]), 0);
        assert_eq!(ocl_select(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(uniform_select(1, 5), 0);
        assert_eq!(uniform_select(5, 5), 4);
        assert_eq!(uniform_select(6, 5), 0);
    }

    #[test]
    fn policy_validation() {
        assert!(Policy::GoodUcb { c: 0.0 }.validate(2, 10).is_err());
        assert!(Policy::GoodUcb { c: 0.5 }.validate(2, 10).is_ok());
        assert!(Policy::OpenLoopOracle { allocation: vec![4, 5] }.validate(2, 10).is_err());
        assert!(Policy::OpenLoopOracle { allocation: vec![5, 5] }.validate(2, 10).is_ok());
        assert!(Policy::OpenLoopOracle { allocation: vec![10] }.validate(2, 10).is_err());
    }

    #[test]
    fn allocation_regimes() {
        let p = MacroscopicProfile::new(vec![0.5, 0.25]).unwrap();
        let nu = ool_allocation(&p, 1.0).unwrap();
        assert_abs_diff_eq!(nu[0], 0.846_573_590_279_972_6, epsilon = 1e-12);
        assert_abs_diff_eq!(nu[1], 0.153_426_409_720_027_4, epsilon = 1e-12);
        assert_eq!(ool_allocation(&p, 0.3).unwrap(), vec![0.3, 0.0]);
        assert_eq!(ool_allocation(&p, 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(ool_allocation(&p, -1.0).is_err());
    }

    #[test]
    fn integer_allocation_sums_to_horizon() {
        let p = MacroscopicProfile::new(crate::experts::SEVEN_EXPERT_PROPORTIONS.to_vec()).unwrap();
        for horizon in [0, 1, 999, 12_345, 50_000] {
            let counts = integer_allocation(&p, horizon, 1000).unwrap();
            assert_eq!(counts.iter().sum::<u64>(), horizon);
        }
    }

    #[test]
    fn omniscient_threshold_already_met() {
        let inst = ProblemInstance::uniform_disjoint(&[(4, 2), (4, 1)]).unwrap();
        let mut paths = SamplePaths::new(&inst, 1, 0);
        assert_eq!(omniscient_waiting_time(&mut paths, 0.5).unwrap(), 0);
    }

    #[test]
    fn omniscient_single_pull() {
        let inst = ProblemInstance::uniform_disjoint(&[(2, 1)]).unwrap();
        // find a replicate whose first draw is the interesting item 0
        let replicate = (0..)
            .find(|&r| SamplePaths::new(&inst, 5, r).draw(0, 0) == Some(ItemId(0)))
            .unwrap();
        let mut paths = SamplePaths::new(&inst, 5, replicate);
        assert_eq!(omniscient_waiting_time(&mut paths, 0.0).unwrap(), 1);
    }

    #[test]
    fn omniscient_rejects_intersecting_supports() {
        let inst = ProblemInstance::primes(&[10.0, 20.0]).unwrap();
        let mut paths = SamplePaths::new(&inst, 1, 0);
        assert_eq!(
            omniscient_waiting_time(&mut paths, 0.1),
            Err(PolicyError::IntersectingSupports)
        );
    }

    #[test]
    fn omniscient_reports_exhausted_paths() {
        let inst = ProblemInstance::uniform_disjoint(&[(1000, 500)]).unwrap();
        let mut paths = SamplePaths::new(&inst, 1, 0);
        paths.freeze_at(10);
        assert!(matches!(
            omniscient_waiting_time(&mut paths, 0.0),
            Err(PolicyError::PathExhausted { expert: 0, len: 10 })
        ));
    }
}
