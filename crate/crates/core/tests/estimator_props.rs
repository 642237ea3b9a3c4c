mod oracles;

use discovery::estimator::HapaxTracker;
use discovery::experts::{ItemId, ProblemInstance};
use discovery::rng::seeded;
use proptest::prelude::*;

fn history_strategy() -> impl Strategy<Value = (usize, Vec<(usize, u64, bool)>)> {
    (1usize..4).prop_flat_map(|k| {
        // interesting flag is a fixed function of the item so histories stay consistent
        let step = (0..k, 0u64..12).prop_map(|(i, x)| (i, x, x % 3 != 0));
        (Just(k), prop::collection::vec(step, 0..80))
    })
}

proptest! {
    #[test]
    fn incremental_hapaxes_match_recount((k, history) in history_strategy()) {
        let mut tracker = HapaxTracker::new(k);
        for (step, &(i, x, flag)) in history.iter().enumerate() {
            tracker.record(i, ItemId(x), flag);
            let expected = oracles::recount_hapaxes(&history[..=step], k);
            for (j, want) in expected.iter().enumerate() {
                prop_assert_eq!(tracker.hapaxes(j), *want);
                prop_assert!(tracker.hapaxes(j) <= tracker.pulls(j));
            }
        }
        for j in 0..k {
            if let Ok(r) = tracker.estimate(j) {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn estimate_drops_by_at_most_one_hapax(seed in any::<u64>(), q in 1u64..40) {
        // disjoint supports: each expert's hapaxes only depend on its own draws
        let inst = ProblemInstance::uniform_disjoint(&[(40, q), (40, 40 - q / 2)]).unwrap();
        let mut rng = seeded(seed);
        let mut tracker = HapaxTracker::new(2);
        let mut previous = [0.0f64; 2];
        for step in 0..300u64 {
            let i = (step % 2) as usize;
            let x = inst.sample(i, &mut rng);
            tracker.record(i, x, inst.is_interesting(x));
            let s = tracker.pulls(i) as f64;
            let scaled = s * tracker.estimate(i).unwrap();
            prop_assert!(scaled >= previous[i] - 1.0 - 1e-9);
            previous[i] = scaled;
        }
    }
}
