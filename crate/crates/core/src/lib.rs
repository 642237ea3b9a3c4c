//! Sequential discovery of interesting items through probabilistic experts.
//!
//! A player repeatedly picks one of `K` experts; the chosen expert answers
//! with an independent draw from its own law over a universe of items, and
//! the player wants to collect as many distinct *interesting* items as
//! possible. This crate provides
//!
//! * [`experts`]: problem instances (disjoint uniform blocks, geometric
//!   experts with prime targets, explicit categorical laws) and seeded sampling;
//! * [`estimator`]: Good-Turing missing-mass estimates and their
//!   distribution-free confidence interval;
//! * [`policies`]: Good-UCB, the greedy closed-loop oracle, round-robin, the
//!   omniscient waiting-time oracle and the open-loop allocation, plus an
//!   exact dynamic-programming solver for tiny instances;
//! * [`simulator`]: coupled episodes, waiting times and Monte-Carlo aggregation;
//! * [`macroscopic`]: closed-form limits as the item universe grows.
//!
//! ```
//! use discovery::experts::ProblemInstance;
//! use discovery::policies::Policy;
//! use discovery::simulator::{run_episode, EpisodeOptions, SamplePaths};
//!
//! let instance = ProblemInstance::seven_expert(1000).unwrap();
//! let mut paths = SamplePaths::new(&instance, 42, 0);
//! let run = run_episode(&Policy::GoodUcb { c: 0.5 }, 5000, &mut paths, EpisodeOptions::default()).unwrap();
//! assert!(run.found_at(5000) > 500);
//! ```

pub mod estimator;
pub mod experts;
pub mod macroscopic;
pub mod policies;
pub mod primes;
pub mod rng;
pub mod simulator;

pub use estimator::{confidence_interval, HapaxTracker, MassEstimate};
pub use experts::{ItemId, ProblemInstance};
pub use macroscopic::MacroscopicProfile;
pub use policies::Policy;
pub use simulator::{monte_carlo, run_episode, SamplePaths, Trajectory};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    pub mod instances {}
    #[doc = include_str!("../../../book/src/good-turing.md")]
    pub mod good_turing {}
    #[doc = include_str!("../../../book/src/policies.md")]
    pub mod policies {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/macroscopic.md")]
    pub mod macroscopic {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}
