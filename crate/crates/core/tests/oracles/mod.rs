//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::HashMap;

/// Minimizes `sum_i q_i exp(-nu_i)` over `{nu >= 0, sum nu = t}` by
/// coarse-to-fine grid search (at most three experts).
pub fn simplex_grid_minimum(q: &[f64], t: f64) -> (f64, Vec<f64>) {
    assert!((1..=3).contains(&q.len()));
    let objective = |nu: &[f64]| q.iter().zip(nu).map(|(q, v)| q * (-v).exp()).sum::<f64>();
    if q.len() == 1 || t == 0.0 {
        let mut nu = vec![0.0; q.len()];
        nu[0] = t;
        return (objective(&nu), nu);
    }
    let free = q.len() - 1;
    let mut lo = vec![0.0; free];
    let mut hi = vec![t; free];
    let mut best = (f64::INFINITY, vec![]);
    let steps = if free == 1 { 400usize } else { 120 };
    for _level in 0..8 {
        let h: Vec<f64> = (0..free).map(|j| (hi[j] - lo[j]) / steps as f64).collect();
        let mut visit = |nu_free: &[f64]| {
            let last = t - nu_free.iter().sum::<f64>();
            if last < -1e-15 {
                return;
            }
            let mut nu = nu_free.to_vec();
            nu.push(last.max(0.0));
            let v = objective(&nu);
            if v < best.0 {
                best = (v, nu);
            }
        };
        if free == 1 {
            for a in 0..=steps {
                visit(&[lo[0] + a as f64 * h[0]]);
            }
        } else {
            for a in 0..=steps {
                for b in 0..=steps {
                    visit(&[lo[0] + a as f64 * h[0], lo[1] + b as f64 * h[1]]);
                }
            }
        }
        for j in 0..free {
            let centre = best.1[j];
            lo[j] = (centre - 3.0 * h[j]).max(0.0);
            hi[j] = (centre + 3.0 * h[j]).min(t);
        }
    }
    best
}

/// Hapax counts recomputed from a full request history by the defining
/// indicator: `x` interesting, drawn once by `i` and once overall.
pub fn recount_hapaxes(history: &[(usize, u64, bool)], num_experts: usize) -> Vec<u64> {
    let mut per_expert: HashMap<(usize, u64), u64> = HashMap::new();
    let mut global: HashMap<u64, u64> = HashMap::new();
    let mut interesting = HashMap::new();
    for &(i, x, flag) in history {
        *per_expert.entry((i, x)).or_default() += 1;
        *global.entry(x).or_default() += 1;
        interesting.insert(x, flag);
    }
    (0..num_experts)
        .map(|i| {
            global
                .iter()
                .filter(|(x, &g)| g == 1 && interesting[*x] && per_expert.get(&(i, **x)) == Some(&1))
                .count() as u64
        })
        .collect()
}

/// Binomial standard error of a proportion `p` estimated from `n` trials.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
