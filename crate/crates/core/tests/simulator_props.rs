use discovery::estimator::HapaxTracker;
use discovery::experts::ProblemInstance;
use discovery::policies::{good_ucb_select, omniscient_waiting_time, Policy};
use discovery::simulator::{
    monte_carlo, run_episode, time_grid, EpisodeOptions, MonteCarloConfig, RunSummary, SamplePaths,
};
use proptest::prelude::*;

fn policies() -> Vec<Policy> {
    vec![Policy::GoodUcb { c: 0.5 }, Policy::Ocl, Policy::UniformCycle]
}

fn small_instance() -> impl Strategy<Value = ProblemInstance> {
    prop::collection::vec((5u64..60, 0u64..60), 1..5).prop_map(|blocks| {
        let blocks: Vec<_> = blocks.into_iter().map(|(n, q)| (n, q.min(n))).collect();
        ProblemInstance::uniform_disjoint(&blocks).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_invariants(inst in small_instance(), seed in any::<u64>(), which in 0usize..3) {
        let k = inst.num_experts();
        let horizon = 300;
        let policy = &policies()[which];
        let mut paths = SamplePaths::new(&inst, seed, 0);
        let traj = run_episode(policy, horizon, &mut paths, EpisodeOptions { record_masses: true }).unwrap();

        let mut last = 0;
        for t in 1..=horizon {
            let f = traj.found_at(t);
            prop_assert!(f >= last && f <= t);
            prop_assert_eq!(f, traj.discoveries[..t as usize].iter().filter(|d| **d).count() as u64);
            last = f;
        }
        for (t, counts) in traj.counts().enumerate() {
            prop_assert_eq!(counts.iter().sum::<u64>(), t as u64 + 1);
        }

        // every interesting item is either found or still missing
        let trace = traj.mass_trace.as_ref().unwrap();
        let final_masses = &trace[horizon as usize];
        let mut missing = 0u64;
        let mut total = 0u64;
        for i in 0..k {
            let q = inst.interesting_count(i).unwrap();
            let n = match inst.expert(i) {
                discovery::experts::ExpertKind::UniformDisjoint { support, .. } => *support,
                _ => unreachable!(),
            };
            missing += (final_masses[i] * n as f64).round() as u64;
            total += q;
        }
        prop_assert_eq!(traj.found_at(horizon) + missing, total);

        // waiting time is non-increasing in lambda
        let mut previous = Some(0);
        for step in 0..=40 {
            let lambda = 1.0 - step as f64 / 40.0;
            let w = traj.waiting_time(lambda);
            match (previous, w) {
                (Some(p), Some(w)) => prop_assert!(w >= p),
                (None, Some(_)) => prop_assert!(false, "reached a smaller lambda but not a larger one"),
                _ => {}
            }
            previous = w;
        }
    }

    #[test]
    fn omniscient_oracle_dominates(inst in small_instance(), seed in any::<u64>()) {
        let mut paths = SamplePaths::new(&inst, seed, 0);
        let runs: Vec<_> = policies()
            .iter()
            .map(|p| run_episode(p, 600, &mut paths, EpisodeOptions::default()).unwrap())
            .collect();
        for step in 1..10 {
            let lambda = step as f64 / 10.0;
            let star = omniscient_waiting_time(&mut paths, lambda).unwrap();
            for traj in &runs {
                if let Some(t) = traj.waiting_time(lambda) {
                    prop_assert!(t >= star, "policy reached {lambda} at {t} < oracle {star}");
                }
            }
        }
    }

    #[test]
    fn coupling_is_policy_independent(seed in any::<u64>(), which in 0usize..3) {
        let inst = ProblemInstance::seven_expert(1000).unwrap();
        let mut used = SamplePaths::new(&inst, seed, 3);
        run_episode(&policies()[which], 2000, &mut used, EpisodeOptions::default()).unwrap();
        let mut fresh = SamplePaths::new(&inst, seed, 3);
        for i in 0..7 {
            for s in 0..used.materialized(i) as u64 {
                prop_assert_eq!(used.draw(i, s), fresh.draw(i, s));
            }
        }
    }
}

#[test]
fn good_ucb_replay_reproduces_pulls() {
    for (inst, c) in [
        (ProblemInstance::seven_expert(500).unwrap(), 0.5),
        (ProblemInstance::primes(&[100.0, 300.0, 500.0]).unwrap(), 0.1),
    ] {
        let mut paths = SamplePaths::new(&inst, 17, 0);
        let traj = run_episode(&Policy::GoodUcb { c }, 4000, &mut paths, EpisodeOptions::default()).unwrap();
        let mut tracker = HapaxTracker::new(inst.num_experts());
        let mut consumed = vec![0u64; inst.num_experts()];
        for (step, &pulled) in traj.pulls.iter().enumerate() {
            let t = step as u64 + 1;
            assert_eq!(good_ucb_select(&tracker, t, c), pulled, "step {t}");
            let item = paths.draw(pulled, consumed[pulled]).unwrap();
            consumed[pulled] += 1;
            tracker.record(pulled, item, inst.is_interesting(item));
        }
    }
}

#[test]
fn single_replicate_matches_direct_episode() {
    let inst = ProblemInstance::seven_expert(1000).unwrap();
    let grid = time_grid(5000, 250);
    let lambdas = vec![0.05, 0.1, 0.3];
    let config = MonteCarloConfig {
        horizon: 5000,
        replicates: 1,
        master_seed: 99,
        lambdas: lambdas.clone(),
        grid: grid.clone(),
        threads: 2,
        record_masses: false,
    };
    let report = monte_carlo(&inst, &policies(), &config).unwrap();
    let mut paths = SamplePaths::new(&inst, 99, 0);
    for (p, policy) in policies().iter().enumerate() {
        let traj = run_episode(policy, 5000, &mut paths, EpisodeOptions::default()).unwrap();
        assert_eq!(report.replicates[0].runs[p], RunSummary::from_trajectory(&traj, &grid, &lambdas));
    }
    for l in 0..lambdas.len() {
        let star = omniscient_waiting_time(&mut paths, lambdas[l]).unwrap();
        assert_eq!(report.replicates[0].omniscient.as_ref().unwrap()[l], star);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let inst = ProblemInstance::seven_expert(500).unwrap();
    let config = |threads| MonteCarloConfig {
        horizon: 3000,
        replicates: 12,
        master_seed: 5,
        lambdas: vec![0.1, 0.2],
        grid: time_grid(3000, 100),
        threads,
        record_masses: true,
    };
    let one = monte_carlo(&inst, &policies(), &config(1)).unwrap();
    let four = monte_carlo(&inst, &policies(), &config(4)).unwrap();
    assert_eq!(one, four);
    for p in 0..3 {
        for row in one.coupled_differences(p) {
            assert!(row.iter().flatten().all(|d| *d >= 0));
        }
    }
}

#[test]
fn mean_curves_are_ordered_on_the_seven_expert_instance() {
    let inst = ProblemInstance::seven_expert(10_000).unwrap();
    let config = MonteCarloConfig {
        horizon: 60_000,
        replicates: 20,
        master_seed: 2024,
        lambdas: vec![],
        grid: time_grid(60_000, 1000),
        threads: 0,
        record_masses: false,
    };
    let pols = vec![Policy::Ocl, Policy::GoodUcb { c: 0.5 }, Policy::UniformCycle];
    let report = monte_carlo(&inst, &pols, &config).unwrap();
    let ordered = report
        .replicates
        .iter()
        .filter(|r| {
            (0..report.grid.len()).all(|g| r.runs[0].found[g] >= r.runs[1].found[g] && r.runs[1].found[g] >= r.runs[2].found[g])
        })
        .count();
    let (ocl, ucb, uni) = (report.mean_found(0), report.mean_found(1), report.mean_found(2));
    for g in 0..report.grid.len() {
        assert!(ocl[g] >= ucb[g] && ucb[g] >= uni[g], "mean curves out of order at t = {}", report.grid[g]);
    }
    assert!(ordered as f64 >= 0.95 * 20.0, "only {ordered}/20 replicates ordered pathwise");
}
