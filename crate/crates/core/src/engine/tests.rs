use super::*;
use crate::state::new_game;

fn setup() -> (Scenario, GameState) {
    let s = Scenario::default_scenario();
    let (g, _) = new_game(&s, 7);
    (s, g)
}

fn idle(s: &Scenario, g: &GameState) -> BTreeMap<TeamId, TurnOrders> {
    s.team_ids()
        .into_iter()
        .map(|t| (t.clone(), TurnOrders::empty(t, g.turn)))
        .collect()
}

#[test]
fn idle_turn_advances_clock_and_income() {
    let (s, g) = setup();
    let (next, events) = resolve_turn(&s, &g, &idle(&s, &g)).unwrap();
    assert_eq!(next.turn, 1);
    assert_eq!(next.year, s.constants.start_year + s.constants.years_per_turn as i32);
    let usa = TeamId::new("usa");
    assert_eq!(
        next.teams[&usa].resources.budget,
        g.teams[&usa].resources.budget + s.team(&usa).unwrap().income
    );
    assert!(events.iter().any(|e| matches!(e.body, EventBody::TurnAdvanced { .. })));
}

#[test]
fn live_state_equals_fold_of_events() {
    let (s, g) = setup();
    let mut folded = g.clone();
    let mut live = g;
    for _ in 0..4 {
        let (next, events) = resolve_turn(&s, &live, &idle(&s, &live)).unwrap();
        for e in &events {
            apply_event(&mut folded, e);
        }
        assert_eq!(folded, next);
        live = next;
    }
}

#[test]
fn stale_and_missing_orders_are_rejected() {
    let (s, g) = setup();
    let mut orders = idle(&s, &g);
    let usa = TeamId::new("usa");
    orders.get_mut(&usa).unwrap().turn = 5;
    assert!(matches!(resolve_turn(&s, &g, &orders), Err(EngineError::StaleOrders { .. })));
    orders.remove(&usa);
    assert!(matches!(resolve_turn(&s, &g, &orders), Err(EngineError::MissingOrders(_))));
}

#[test]
fn injected_shock_is_drawn_without_gate_roll() {
    let (s, g) = setup();
    let shock = s.shock_deck[3].id.clone();
    let inputs = TurnInputs {
        overrides: Vec::new(),
        injected_shock: Some(shock.clone()),
    };
    let (next, events) = resolve_turn_with(&s, &g, &idle(&s, &g), &inputs).unwrap();
    assert!(next.shocks_drawn.contains(&shock));
    assert!(!events.iter().any(|e| matches!(e.body, EventBody::ShockCheck { .. })));
}

#[test]
fn bad_facilitator_inputs_are_rejected() {
    let (s, g) = setup();
    let over = |value| TurnInputs {
        overrides: vec![DiceOverride {
            dice: crate::dice::DiceKind::TwoD6,
            value,
            purpose: None,
        }],
        injected_shock: None,
    };
    assert!(matches!(
        resolve_turn_with(&s, &g, &idle(&s, &g), &over(13)),
        Err(EngineError::InvalidOverride(_))
    ));
    assert!(resolve_turn_with(&s, &g, &idle(&s, &g), &over(12)).is_ok());
    let inputs = TurnInputs {
        overrides: Vec::new(),
        injected_shock: Some(ShockId::from("no-such-shock")),
    };
    assert_eq!(
        resolve_turn_with(&s, &g, &idle(&s, &g), &inputs),
        Err(EngineError::UnknownShock(ShockId::from("no-such-shock")))
    );
}
