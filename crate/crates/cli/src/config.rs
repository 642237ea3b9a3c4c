//! TOML experiment descriptions.
//!
//! Every table rejects unknown keys, and [`ExperimentConfig::build`] checks
//! the whole file before anything runs.
//!
//! ```toml
//! horizon = 150000
//! replicates = 1
//! lambdas = [0.1, 0.05]
//! master_seed = 1
//! record_every = 100
//! emit_svg = true
//!
//! [instance]
//! kind = "seven_expert"
//! support = 10000
//!
//! [[policies]]
//! kind = "good_ucb"
//! c = 0.5
//!
//! [[policies]]
//! kind = "ocl"
//! ```

use std::path::PathBuf;

use discovery::experts::ProblemInstance;
use discovery::macroscopic::MacroscopicProfile;
use discovery::policies::{self, Policy, DEFAULT_C, THEORY_C};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Seven disjoint uniform experts with proportions 0.512, 0.256, ..., 0.008.
    SevenExpert { support: u64 },
    /// Disjoint uniform experts given as `[support, interesting]` pairs.
    UniformDisjoint { experts: Vec<[u64; 2]> },
    /// Disjoint uniform experts of a common size with the given proportions.
    Proportions { support: u64, q: Vec<f64> },
    /// Geometric experts with the given means; primes are interesting.
    Primes { means: Vec<f64> },
    /// Explicit laws over labels `0, 1, ...` and a list of interesting labels.
    Categorical { laws: Vec<Vec<f64>>, interesting: Vec<u64> },
}

impl InstanceConfig {
    pub fn build(&self) -> Result<ProblemInstance, CliError> {
        let built = match self {
            InstanceConfig::SevenExpert { support } => ProblemInstance::seven_expert(*support),
            InstanceConfig::UniformDisjoint { experts } => {
                let blocks: Vec<(u64, u64)> = experts.iter().map(|&[n, q]| (n, q)).collect();
                ProblemInstance::uniform_disjoint(&blocks)
            }
            InstanceConfig::Proportions { support, q } => ProblemInstance::from_proportions(*support, q),
            InstanceConfig::Primes { means } => ProblemInstance::primes(means),
            InstanceConfig::Categorical { laws, interesting } => {
                ProblemInstance::categorical(laws.clone(), interesting.iter().copied())
            }
        };
        built.map_err(|e| CliError::Config(format!("instance: {e}")))
    }

    /// Common support size and interesting proportions, for uniform
    /// instances whose experts all share one support size.
    fn uniform_profile(&self) -> Option<(u64, Vec<f64>)> {
        let blocks: Vec<(u64, u64)> = match self {
            InstanceConfig::SevenExpert { support } => {
                return Some((*support, discovery::experts::SEVEN_EXPERT_PROPORTIONS.to_vec()))
            }
            InstanceConfig::Proportions { support, q } => return Some((*support, q.clone())),
            InstanceConfig::UniformDisjoint { experts } => experts.iter().map(|&[n, q]| (n, q)).collect(),
            _ => return None,
        };
        let support = blocks.first()?.0;
        blocks
            .iter()
            .all(|&(n, _)| n == support)
            .then(|| (support, blocks.iter().map(|&(n, q)| q as f64 / n as f64).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// `c` defaults to 0.5; `theory = true` selects `(1 + sqrt 2) sqrt 3`.
    GoodUcb {
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        theory: bool,
    },
    Ocl {},
    Uniform {},
    /// Without an explicit allocation, the macroscopic one for the horizon
    /// is used (uniform instances with a common support size only).
    OpenLoopOracle {
        #[serde(default)]
        allocation: Option<Vec<u64>>,
    },
}

impl PolicyConfig {
    fn build(&self, instance: &InstanceConfig, horizon: u64) -> Result<Policy, CliError> {
        match self {
            PolicyConfig::GoodUcb { c: Some(_), theory: true } => Err(CliError::Config(
                "good_ucb: give either `c` or `theory = true`, not both".into(),
            )),
            PolicyConfig::GoodUcb { theory: true, .. } => Ok(Policy::GoodUcb { c: THEORY_C }),
            PolicyConfig::GoodUcb { c, .. } => Ok(Policy::GoodUcb {
                c: c.unwrap_or(DEFAULT_C),
            }),
            PolicyConfig::Ocl {} => Ok(Policy::Ocl),
            PolicyConfig::Uniform {} => Ok(Policy::UniformCycle),
            PolicyConfig::OpenLoopOracle { allocation: Some(a) } => {
                Ok(Policy::OpenLoopOracle { allocation: a.clone() })
            }
            PolicyConfig::OpenLoopOracle { allocation: None } => {
                let (support, q) = instance.uniform_profile().ok_or_else(|| {
                    CliError::Config(
                        "open_loop_oracle without `allocation` needs a uniform instance with one support size".into(),
                    )
                })?;
                let profile = MacroscopicProfile::new(q)
                    .map_err(|e| CliError::Config(format!("open_loop_oracle: {e}")))?;
                let allocation = policies::integer_allocation(&profile, horizon, support)
                    .map_err(|e| CliError::Config(format!("open_loop_oracle: {e}")))?;
                Ok(Policy::OpenLoopOracle { allocation })
            }
        }
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub policies: Vec<PolicyConfig>,
    pub horizon: u64,
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_svg: bool,
    #[serde(default)]
    pub emit_mass_trace: bool,
    /// Spacing of the time grid in the per-run CSV; defaults to `horizon / 1000`.
    #[serde(default)]
    pub record_every: Option<u64>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub instance: ProblemInstance,
    pub policies: Vec<Policy>,
    pub horizon: u64,
    pub replicates: u64,
    pub lambdas: Vec<f64>,
    pub master_seed: u64,
    pub record_every: u64,
    pub emit_svg: bool,
    pub emit_mass_trace: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn build(&self) -> Result<Experiment, CliError> {
        let instance = self.instance.build()?;
        if self.policies.is_empty() {
            return Err(CliError::Config("`policies` must list at least one policy".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("`horizon` must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("`replicates` must be positive".into()));
        }
        if let Some(&bad) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(CliError::Config(format!("lambda {bad} is not a nonnegative number")));
        }
        if self.record_every == Some(0) {
            return Err(CliError::Config("`record_every` must be positive".into()));
        }
        let k = instance.num_experts();
        let policies = self
            .policies
            .iter()
            .map(|p| {
                let policy = p.build(&self.instance, self.horizon)?;
                policy
                    .validate(k, self.horizon)
                    .map_err(|e| CliError::Config(format!("policy {}: {e}", policy.label())))?;
                if matches!(policy, Policy::GoodUcb { .. }) && self.horizon < k as u64 {
                    return Err(CliError::Config(format!(
                        "horizon {} is shorter than the {k} initial Good-UCB requests",
                        self.horizon
                    )));
                }
                Ok(policy)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Experiment {
            instance,
            policies,
            horizon: self.horizon,
            replicates: self.replicates,
            lambdas: self.lambdas.clone(),
            master_seed: self.master_seed,
            record_every: self.record_every.unwrap_or((self.horizon / 1000).max(1)),
            emit_svg: self.emit_svg,
            emit_mass_trace: self.emit_mass_trace,
        })
    }
}

/// Closed-form tables for a proportion profile.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroConfig {
    /// Proportions `q_1 >= q_2 >= ... > 0`.
    pub q: Vec<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Evenly spaced normalized times `0, ..., t_max`.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_t_max() -> f64 {
    10.0
}

fn default_t_points() -> usize {
    101
}

impl MacroConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn profile(&self) -> Result<MacroscopicProfile, CliError> {
        MacroscopicProfile::new(self.q.clone()).map_err(|e| CliError::Config(format!("profile: {e}")))
    }

    pub fn t_grid(&self) -> Result<Vec<f64>, CliError> {
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(CliError::Config(format!("t_max {} must be a nonnegative number", self.t_max)));
        }
        match self.t_points {
            0 => Ok(Vec::new()),
            1 => Ok(vec![0.0]),
            m => Ok((0..m).map(|j| self.t_max * j as f64 / (m - 1) as f64).collect()),
        }
    }
}

/// Empirical coverage of the missing-mass interval for one expert.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub expert: usize,
    /// Sample sizes at which the interval is checked; 0 is skipped.
    pub sizes: Vec<u64>,
    pub deltas: Vec<f64>,
    pub replicates: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ConcentrationConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn build(&self) -> Result<ProblemInstance, CliError> {
        let instance = self.instance.build()?;
        if self.expert >= instance.num_experts() {
            return Err(CliError::Config(format!(
                "expert {} out of range for {} experts",
                self.expert,
                instance.num_experts()
            )));
        }
        if !instance.has_disjoint_supports() {
            return Err(CliError::Config(
                "coverage checks need experts with disjoint interesting supports".into(),
            ));
        }
        if let Some(&bad) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(CliError::Config(format!("delta {bad} must lie in (0, 1)")));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("`replicates` must be positive".into()));
        }
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        horizon = 100
        [instance]
        kind = "uniform_disjoint"
        experts = [[10, 5], [10, 2]]
    "#;

    #[test]
    fn empty_policy_list_is_rejected() {
        let cfg = ExperimentConfig::from_toml(&format!("policies = []\n{BASE}")).unwrap();
        assert!(matches!(cfg.build(), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = format!("policies = [{{ kind = \"ocl\" }}]\nhorizn = 3\n{BASE}");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(CliError::Config(_))));
        let nested = BASE.replace("kind = \"uniform_disjoint\"", "kind = \"uniform_disjoint\"\nsupport = 3");
        let nested = format!("policies = [{{ kind = \"ocl\" }}]\n{nested}");
        assert!(ExperimentConfig::from_toml(&nested).is_err());
        let policy = format!("policies = [{{ kind = \"ocl\", c = 1.0 }}]\n{BASE}");
        assert!(ExperimentConfig::from_toml(&policy).is_err());
        let policy = format!("policies = [{{ kind = \"uniform\", allocation = [1] }}]\n{BASE}");
        assert!(ExperimentConfig::from_toml(&policy).is_err());
    }

    #[test]
    fn policy_defaults_and_theory_constant() {
        let text = format!(
            "policies = [{{ kind = \"good_ucb\" }}, {{ kind = \"good_ucb\", theory = true }}, {{ kind = \"open_loop_oracle\" }}]\n{BASE}"
        );
        let exp = ExperimentConfig::from_toml(&text).unwrap().build().unwrap();
        assert_eq!(exp.policies[0], Policy::GoodUcb { c: 0.5 });
        assert_eq!(exp.policies[1], Policy::GoodUcb { c: THEORY_C });
        match &exp.policies[2] {
            Policy::OpenLoopOracle { allocation } => assert_eq!(allocation.iter().sum::<u64>(), 100),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(exp.record_every, 1);
    }

    #[test]
    fn both_constants_are_ambiguous() {
        let text = format!("policies = [{{ kind = \"good_ucb\", c = 0.1, theory = true }}]\n{BASE}");
        assert!(ExperimentConfig::from_toml(&text).unwrap().build().is_err());
    }

    #[test]
    fn concentration_needs_disjoint_supports() {
        let text = r#"
            sizes = [10]
            deltas = [0.1]
            replicates = 5
            [instance]
            kind = "categorical"
            laws = [[0.5, 0.5], [0.5, 0.5]]
            interesting = [0]
        "#;
        let cfg = ConcentrationConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.build(), Err(CliError::Config(_))));
    }

    #[test]
    fn t_grid_is_evenly_spaced() {
        let cfg = MacroConfig::from_toml("q = [0.5]\nt_max = 2.0\nt_points = 5").unwrap();
        assert_eq!(cfg.t_grid().unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
