//! Closed-form quantities of the macroscopic limit.
//!
//! With `N` items per expert and `Q_i / N -> q_i`, waiting times scale like
//! `N` and the normalized quantities below become deterministic. Times here
//! are measured in units of `N` requests.
//!
//! The open-loop oracle spreads a budget `t` over the `I(t)` experts with
//! the largest proportions so that the remaining proportion `q_i e^{-nu_i}`
//! is equal on every active expert. That common level is
//!
//! ```text
//! Lambda(t) = g_I e^{-t / I},    g_I = (q_1 ... q_I)^{1/I}
//! ```
//!
//! and expert `i + 1` joins the active set once `Lambda` reaches `q_{i+1}`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("a profile needs at least one proportion")]
    Empty,
    #[error("proportion q_{index} = {value} lies outside (0, 1)")]
    OutOfRange { index: usize, value: f64 },
    #[error("proportions must be sorted in non-increasing order (violated after position {index})")]
    Unsorted { index: usize },
    #[error("lambda = {lambda} lies outside (0, q_1 = {q1}]")]
    InvalidLambda { lambda: f64, q1: f64 },
    #[error("time t = {0} must be finite and non-negative")]
    InvalidTime(f64),
    #[error("breakpoint {index} could not be bracketed")]
    RootNotBracketed { index: usize },
}

/// Limiting proportions `q_1 >= ... >= q_K` of interesting items per expert.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroscopicProfile {
    q: Vec<f64>,
    q_total: f64,
    log_geomeans: Vec<f64>,
    breakpoints: Vec<f64>,
}

fn check_sorted(q: &[f64]) -> Result<(), ProfileError> {
    if q.is_empty() {
        return Err(ProfileError::Empty);
    }
    for (index, &value) in q.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(ProfileError::OutOfRange { index: index + 1, value });
        }
    }
    for index in 1..q.len() {
        if q[index] > q[index - 1] {
            return Err(ProfileError::Unsorted { index });
        }
    }
    Ok(())
}

fn log_geomeans(q: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    q.iter()
        .enumerate()
        .map(|(i, v)| {
            acc += v.ln();
            acc / (i + 1) as f64
        })
        .collect()
}

/// Times at which the open-loop oracle activates experts `2, ..., K`.
///
/// Entry `i - 1` (for `i = 1..K-1`) is the time at which expert `i + 1`
/// joins, the root of
///
/// ```text
/// q_{i+1} + i g_i e^{-t/i} = (i+1) g_{i+1} e^{-t/(i+1)}
/// ```
///
/// That equation has a double root (the two sides touch without crossing),
/// so bisection runs on the equivalent monotone condition
/// `ln g_i - t/i - ln q_{i+1} = 0`, starting from the previous breakpoint.
pub fn breakpoints(q: &[f64]) -> Result<Vec<f64>, ProfileError> {
    check_sorted(q)?;
    let lg = log_geomeans(q);
    let mut out = Vec::with_capacity(q.len().saturating_sub(1));
    let mut lo = 0.0;
    for i in 1..q.len() {
        let active = i as f64;
        let target = q[i].ln();
        let level = |t: f64| lg[i - 1] - t / active - target;
        if level(lo) < -1e-12 {
            return Err(ProfileError::RootNotBracketed { index: i });
        }
        if level(lo) <= 0.0 {
            out.push(lo);
            continue;
        }
        let mut hi = lo + 1.0;
        while level(hi) > 0.0 {
            hi = lo + 2.0 * (hi - lo);
            if !hi.is_finite() {
                return Err(ProfileError::RootNotBracketed { index: i });
            }
        }
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-13 * b.max(1.0) {
            let mid = 0.5 * (a + b);
            if level(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        lo = 0.5 * (a + b);
        out.push(lo);
    }
    Ok(out)
}

impl MacroscopicProfile {
    pub fn new(q: Vec<f64>) -> Result<Self, ProfileError> {
        let breakpoints = breakpoints(&q)?;
        Ok(Self {
            q_total: q.iter().sum(),
            log_geomeans: log_geomeans(&q),
            breakpoints,
            q,
        })
    }

    pub fn proportions(&self) -> &[f64] {
        &self.q
    }

    pub fn num_experts(&self) -> usize {
        self.q.len()
    }

    pub fn q_total(&self) -> f64 {
        self.q_total
    }

    /// Geometric mean of `q_1, ..., q_i` (1-based `i`).
    pub fn geomean(&self, i: usize) -> f64 {
        self.log_geomeans[i - 1].exp()
    }

    pub fn arithmetic_mean(&self) -> f64 {
        self.q_total / self.q.len() as f64
    }

    /// Activation times of experts `2..=K` (empty for a single expert).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn check_lambda(&self, lambda: f64) -> Result<(), ProfileError> {
        // values within a few ulps above q_1 (e.g. from Lambda(0)) count as q_1
        if lambda > 0.0 && lambda <= self.q[0] * (1.0 + 4.0 * f64::EPSILON) {
            Ok(())
        } else {
            Err(ProfileError::InvalidLambda { lambda, q1: self.q[0] })
        }
    }

    /// Normalized limiting waiting time of the oracle, `sum_{q_i > lambda} ln(q_i / lambda)`.
    pub fn limit_t(&self, lambda: f64) -> Result<f64, ProfileError> {
        self.check_lambda(lambda)?;
        Ok(self.q.iter().filter(|&&q| q > lambda).map(|q| (q / lambda).ln()).sum())
    }

    /// Normalized limiting waiting time of uniform cycling, `K ln(q_1 / lambda)`.
    pub fn limit_t_uniform(&self, lambda: f64) -> Result<f64, ProfileError> {
        self.check_lambda(lambda)?;
        Ok(self.q.len() as f64 * (self.q[0] / lambda).ln())
    }

    /// Size `I(t)` of the active set; intervals are half-open `[t_i, t_{i+1})`.
    pub fn active_index(&self, t: f64) -> usize {
        1 + self.breakpoints.partition_point(|&b| b <= t)
    }

    /// Common remaining level `Lambda(t) = g_I e^{-t/I}` of the active experts.
    pub fn lambda_of_t(&self, t: f64) -> f64 {
        let active = self.active_index(t);
        (self.log_geomeans[active - 1] - t / active as f64).exp()
    }

    /// Smallest total remaining proportion reachable with budget `t`:
    /// `I g_I e^{-t/I} + sum_{i > I} q_i`.
    pub fn r_star(&self, t: f64) -> f64 {
        let active = self.active_index(t);
        active as f64 * self.lambda_of_t(t) + self.q[active..].iter().sum::<f64>()
    }

    /// Limiting proportion of interesting items found by time `t`,
    /// `q_total - r*(t)`.
    pub fn limit_f(&self, t: f64) -> f64 {
        self.q_total - self.r_star(t)
    }

    /// Same quantity in water-filling form, `sum_i (q_i - Lambda(t))_+`.
    pub fn limit_f_waterfill(&self, t: f64) -> f64 {
        let level = self.lambda_of_t(t);
        self.q.iter().map(|q| (q - level).max(0.0)).sum()
    }

    /// Remaining proportion under uniform cycling, `sum_i q_i e^{-t/K}`.
    pub fn uniform_unseen(&self, t: f64) -> f64 {
        self.q_total * (-t / self.q.len() as f64).exp()
    }

    /// Residual of the continuity equation defining breakpoint `index`
    /// (1-based, activation of expert `index + 1`) at time `t`.
    pub fn breakpoint_residual(&self, index: usize, t: f64) -> f64 {
        let i = index as f64;
        self.q[index] + i * (self.log_geomeans[index - 1] - t / i).exp()
            - (i + 1.0) * (self.log_geomeans[index] - t / (i + 1.0)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seven() -> MacroscopicProfile {
        MacroscopicProfile::new(crate::experts::SEVEN_EXPERT_PROPORTIONS.to_vec()).unwrap()
    }

    #[test]
    fn waiting_time_limits() {
        let p = seven();
        assert_abs_diff_eq!(p.limit_t(0.1).unwrap(), 2.820_021_775_474_413, epsilon = 1e-12);
        assert_abs_diff_eq!(p.limit_t_uniform(0.1).unwrap(), 11.432_081_073_359_915, epsilon = 1e-12);
        assert_abs_diff_eq!(p.limit_t_uniform(0.512 / std::f64::consts::E).unwrap(), 7.0, epsilon = 1e-12);
        assert!(p.limit_t(0.512 - 1e-12).unwrap() < 1e-10);
        let single = MacroscopicProfile::new(vec![0.5]).unwrap();
        assert_abs_diff_eq!(single.limit_t(0.25).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_eq!(single.limit_t(0.25).unwrap(), single.limit_t_uniform(0.25).unwrap());
    }

    #[test]
    fn lambda_outside_range_is_rejected() {
        let p = seven();
        assert!(p.limit_t(0.0).is_err());
        assert!(p.limit_t(0.6).is_err());
        assert!(p.limit_t_uniform(-0.1).is_err());
        assert_eq!(p.limit_t(0.512).unwrap(), 0.0);
    }

    #[test]
    fn profile_validation() {
        assert_eq!(MacroscopicProfile::new(vec![]), Err(ProfileError::Empty));
        assert!(matches!(
            MacroscopicProfile::new(vec![0.2, 0.3]),
            Err(ProfileError::Unsorted { index: 1 })
        ));
        assert!(matches!(
            MacroscopicProfile::new(vec![1.0]),
            Err(ProfileError::OutOfRange { .. })
        ));
    }

    #[test]
    fn first_breakpoint_closed_form() {
        let p = seven();
        assert_abs_diff_eq!(p.breakpoints()[0], std::f64::consts::LN_2, epsilon = 1e-12);
        // later breakpoints: t_i = i ln(g_i / q_{i+1})
        for i in 1..7 {
            let closed = i as f64 * (p.geomean(i) / p.proportions()[i]).ln();
            assert_abs_diff_eq!(p.breakpoints()[i - 1], closed, epsilon = 1e-10);
            assert!(p.breakpoint_residual(i, p.breakpoints()[i - 1]).abs() < 1e-9);
        }
        assert!(p.breakpoints().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn equal_proportions_activate_everything_at_once() {
        let p = MacroscopicProfile::new(vec![0.3; 4]).unwrap();
        assert!(p.breakpoints().iter().all(|&b| b == 0.0));
        assert_eq!(p.active_index(0.0), 4);
        assert!(MacroscopicProfile::new(vec![0.4]).unwrap().breakpoints().is_empty());
    }

    #[test]
    fn active_index_intervals() {
        let p = MacroscopicProfile::new(vec![0.5, 0.25]).unwrap();
        let t1 = p.breakpoints()[0];
        assert_eq!(p.active_index(0.0), 1);
        assert_eq!(p.active_index(t1 - 1e-9), 1);
        assert_eq!(p.active_index(t1), 2);
        assert_eq!(p.active_index(100.0), 2);
    }

    #[test]
    fn found_proportion() {
        let p = MacroscopicProfile::new(vec![0.5, 0.25]).unwrap();
        assert_eq!(p.limit_f(0.0), 0.0);
        assert_abs_diff_eq!(p.limit_f(1.0), 0.321_118_057_519_646_6, epsilon = 1e-12);
        assert_abs_diff_eq!(p.limit_f(200.0), 0.75, epsilon = 1e-12);
        for k in 0..400 {
            let t = k as f64 * 0.01;
            assert_abs_diff_eq!(p.limit_f(t), p.limit_f_waterfill(t), epsilon = 1e-12);
        }
        let s = seven();
        for k in 0..1000 {
            let t = k as f64 * 0.02;
            assert_abs_diff_eq!(s.limit_f(t), s.limit_f_waterfill(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn level_inverts_waiting_time() {
        let p = MacroscopicProfile::new(vec![0.5, 0.25]).unwrap();
        let t = p.limit_t(0.3).unwrap();
        assert_abs_diff_eq!(t, (0.5f64 / 0.3).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.lambda_of_t(t), 0.3, epsilon = 1e-15);
        assert_eq!(p.lambda_of_t(0.0), 0.5);
        let s = seven();
        let t_end = s.breakpoints().last().unwrap() + 2.0;
        for k in 0..=500 {
            let t = t_end * k as f64 / 500.0;
            assert_abs_diff_eq!(s.limit_t(s.lambda_of_t(t)).unwrap(), t, epsilon = 1e-8);
        }
    }

    #[test]
    fn r_star_is_continuous_at_breakpoints() {
        let s = seven();
        for &b in s.breakpoints() {
            let left = s.r_star(b - 1e-11);
            let right = s.r_star(b);
            assert!((left - right).abs() < 1e-8, "{left} vs {right}");
            let level_left = s.lambda_of_t(b - 1e-11);
            assert!((level_left - s.lambda_of_t(b)).abs() < 1e-8);
        }
    }
}
