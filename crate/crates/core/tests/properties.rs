use coreq::gen::{random_sequent, GenConfig};
use coreq::kernel::{applicable_actions, apply_action};
use coreq::qlearn::{EpsilonSchedule, QModel};
use coreq::search::{prove, BaselineStrategy, Outcome, QStrategy, RandomStrategy, SearchLimits};
use coreq::features::FeatureSet;
use coreq::{parse_sequent, proves};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sequent_from(seed: u64, depth: usize) -> coreq::Sequent {
    let cfg = GenConfig {
        max_depth: depth,
        ..GenConfig::default()
    };
    random_sequent(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn display_parse_round_trip(seed: u64, depth in 1usize..6) {
        let s = sequent_from(seed, depth);
        let again = parse_sequent(&s.to_string()).unwrap();
        prop_assert_eq!(again.key(), s.key());
    }

    #[test]
    fn sub_problems_are_closed(seed: u64, depth in 1usize..5) {
        let s = sequent_from(seed, depth);
        for a in applicable_actions(&s) {
            for child in apply_action(&s, &a).unwrap() {
                prop_assert!(child.is_closed(), "{} via {:?} gave {}", s, a.rule, child);
            }
        }
    }

    #[test]
    fn every_strategy_returns_checked_proofs(seed: u64, depth in 1usize..5) {
        let s = sequent_from(seed, depth);
        let limits = SearchLimits::new(800, 64);
        let mut outcomes = Vec::new();
        let model = QModel::new(FeatureSet::all(), 0.01, 0.9);
        let mut q = QStrategy::new(model, EpsilonSchedule::new(0.5, 0.99), true);
        for strat in [&mut BaselineStrategy as &mut dyn coreq::search::Strategy, &mut RandomStrategy, &mut q] {
            let (p, st) = prove(&s, strat, limits, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(p.is_some(), st.outcome == Outcome::Proved);
            if let Some(p) = p {
                prop_assert!(proves(&p, &s));
                prop_assert_eq!(p.length() as u64, st.p);
                prop_assert!(st.t >= st.p);
            }
            outcomes.push(st.outcome);
        }
        let decided: Vec<_> = outcomes.iter().filter(|o| o.is_decided()).collect();
        prop_assert!(decided.windows(2).all(|w| w[0] == w[1]), "{}: {:?}", s, outcomes);
    }
}
