use std::collections::BTreeMap;

use irsim_core::engine::safety_threshold;
use irsim_core::mc::lineup;
use irsim_core::{
    opposed_check, replay_to_turn, resolve_turn, run_game, state_hash, AgentKind, DiceOverride, DiceSource, DieRoll,
    EventBody, EventLog, GameRecord, LogHeader, RngState, Scenario, TeamId, TurnOrders, TwoDiceRoll,
};
use proptest::prelude::*;

fn scenario() -> Scenario {
    Scenario::default_scenario()
}

fn kind_strategy() -> impl Strategy<Value = AgentKind> {
    prop::sample::select(AgentKind::ALL.to_vec())
}

fn play(kinds: &[AgentKind], seed: u64) -> GameRecord {
    let s = scenario();
    let agents = lineup(&s, kinds).unwrap();
    run_game(&s, &agents, seed).unwrap()
}

/// Dice that always return the same faces.
struct Loaded(u8, u8);

impl DiceSource for Loaded {
    fn d6(&mut self, _: irsim_core::dice::RollPurpose) -> DieRoll {
        DieRoll {
            value: self.0,
            overridden: false,
        }
    }

    fn two_d6(&mut self, _: irsim_core::dice::RollPurpose) -> TwoDiceRoll {
        TwoDiceRoll {
            dice: [self.0, self.1],
            overridden: false,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scripted_agents_always_submit_valid_orders(
        kinds in prop::collection::vec(kind_strategy(), 4),
        seed in any::<u64>(),
    ) {
        let s = scenario();
        let agents = lineup(&s, &kinds).unwrap();
        let record = run_game(&s, &agents, seed);
        prop_assert!(record.is_ok(), "{:?}", record.err());
        prop_assert!(record.unwrap().final_state.is_over());
    }

    #[test]
    fn same_seed_same_game(kinds in prop::collection::vec(kind_strategy(), 4), seed in any::<u64>()) {
        let a = play(&kinds, seed);
        let b = play(&kinds, seed);
        prop_assert_eq!(state_hash(&a.final_state), state_hash(&b.final_state));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn replay_to_every_turn_matches_live_state(kind in kind_strategy(), seed in any::<u64>()) {
        let s = scenario();
        let record = play(&[kind], seed);
        let log = EventLog::from_events(LogHeader::new(&s, seed), record.events.clone()).unwrap();
        let (mut live, _) = irsim_core::new_game(&s, seed);
        prop_assert_eq!(state_hash(&replay_to_turn(&s, &log, 0).unwrap()), state_hash(&live));
        for (turn, orders) in record.orders.iter().enumerate() {
            live = resolve_turn(&s, &live, orders).unwrap().0;
            let replayed = replay_to_turn(&s, &log, turn as u32 + 1).unwrap();
            prop_assert_eq!(&replayed, &live);
        }
        prop_assert_eq!(live, record.final_state);
    }

    #[test]
    fn checkpoint_draw_counts_account_for_the_generator(kind in kind_strategy(), seed in any::<u64>()) {
        let record = play(&[kind], seed);
        let mut rng = RngState::from_seed(seed);
        let mut turns = 0;
        for e in &record.events {
            if let EventBody::RngCheckpoint { state, draws } = &e.body {
                for _ in 0..*draws {
                    rng.next_u64();
                }
                prop_assert_eq!(&rng, state, "turn {}", e.turn);
                turns += 1;
            }
        }
        prop_assert_eq!(turns, record.final_state.turn);
        prop_assert_eq!(rng, record.final_state.rng);
    }

    #[test]
    fn treaty_seekers_never_defect(seed in any::<u64>()) {
        let record = play(&[AgentKind::TreatySeeker], seed);
        let defections = record
            .events
            .iter()
            .filter(|e| matches!(e.body, EventBody::DefectionDetected { .. }))
            .count();
        prop_assert_eq!(defections, 0);
    }

    #[test]
    fn submission_order_does_not_matter(seed in any::<u64>(), rotation in 0usize..4) {
        let s = scenario();
        let record = play(&[AgentKind::Spymaster], seed);
        let (state, _) = irsim_core::new_game(&s, seed);
        let mut entries: Vec<(TeamId, TurnOrders)> = record.orders[0].clone().into_iter().collect();
        entries.rotate_left(rotation);
        entries.reverse();
        let shuffled: BTreeMap<TeamId, TurnOrders> = entries.into_iter().collect();
        let a = resolve_turn(&s, &state, &record.orders[0]).unwrap();
        let b = resolve_turn(&s, &state, &shuffled).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn safety_threshold_never_rises_with_more_safety(total in 1u32..20, done in 0u32..20) {
        let done = done.min(total);
        let t = safety_threshold(done, total);
        prop_assert!((3..=11).contains(&t));
        if done < total {
            prop_assert!(safety_threshold(done + 1, total) <= t);
        }
    }

    #[test]
    fn opposed_checks_favor_the_defender_on_ties(
        a in 1u8..=6, b in 1u8..=6, att in -10i32..=10, def in -10i32..=10,
    ) {
        let outcome = opposed_check(att, def, &mut Loaded(a, b));
        prop_assert_eq!(outcome.margin, att - def);
        prop_assert_eq!(outcome.success, att > def);
    }

    #[test]
    fn override_values_are_range_checked(value in 0u8..=14) {
        let d6: DiceOverride = serde_json::from_value(serde_json::json!({ "dice": "D6", "value": value })).unwrap();
        let two: DiceOverride = serde_json::from_value(serde_json::json!({ "dice": "2D6", "value": value })).unwrap();
        prop_assert_eq!(d6.is_valid(), (1..=6).contains(&value));
        prop_assert_eq!(two.is_valid(), (2..=12).contains(&value));
    }
}
