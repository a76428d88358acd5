//! Acceptance criteria 1 to 10. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use irsim_core::agents::{AgentMemory, AgentPolicy};
use irsim_core::engine::{defection_phase, detection_threshold, safety_threshold};
use irsim_core::mc::{agent_seed, lineup, monte_carlo_report, run_seed, McReport};
use irsim_core::orders::TreatyStance;
use irsim_core::rng::splitmix64;
use irsim_core::state::{Term, Treaty, TreatyStatus};
use irsim_core::{
    knowledge_view, new_game, opposed_check, replay, resolve_turn, run_game, state_hash, AgentConfig, AgentKind,
    EventBody, EventLog, GameEvent, LogHeader, OutcomeKind, RngState, Scenario, TeamId, TreatyId, Viewer,
};
use num_rational::Ratio;

type Verdict = Result<String, String>;

const MASTER_SEED: u64 = 20_240_601;
const BATCH: u64 = 1000;
/// Share of 4 x Racer games with two or more same-turn deployments, pinned for this master seed.
const PINNED_MULTI_DEPLOYER_GAMES: u64 = 955;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Exact success probability of `2d6 + diff > 2d6` over all 1296 dice outcomes.
fn opposed_oracle(diff: i64) -> Ratio<i64> {
    let mut wins = 0;
    for a1 in 1..=6 {
        for a2 in 1..=6 {
            for d1 in 1..=6 {
                for d2 in 1..=6 {
                    if a1 + a2 + diff > d1 + d2 {
                        wins += 1;
                    }
                }
            }
        }
    }
    Ratio::new(wins, 1296)
}

/// Exact probability that a 2d6 total reaches `threshold`.
fn two_d6_at_least(threshold: i32) -> Ratio<i64> {
    let hits = (1..=6)
        .flat_map(|a| (1..=6).map(move |b| a + b))
        .filter(|&t| t >= threshold)
        .count();
    Ratio::new(hits as i64, 36)
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// One-sided sign test on discordant pairs: P(X >= wins) for X ~ Bin(n, 1/2).
fn sign_test_p(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let ln_fact = |k: u64| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_n = ln_fact(n);
    let half = (n as f64) * 0.5f64.ln();
    (wins..=n)
        .map(|k| (ln_n - ln_fact(k) - ln_fact(n - k) + half).exp())
        .sum::<f64>()
        .min(1.0)
}

fn batch(scenario: &Scenario, kind: AgentKind, parallelism: usize) -> McReport {
    let agents = lineup(scenario, &[kind]).unwrap();
    monte_carlo_report(scenario, &agents, BATCH, MASTER_SEED, parallelism).unwrap()
}

fn criterion_1(scenario: &Scenario) -> Verdict {
    let agents = lineup(scenario, &[AgentKind::Racer]).unwrap();
    let started = Instant::now();
    let mut seeds = RngState::from_seed(1);
    let mut mismatches = 0;
    for _ in 0..100 {
        let seed = seeds.next_u64();
        let record = run_game(scenario, &agents, seed).unwrap();
        let log = EventLog::from_events(LogHeader::new(scenario, seed), record.events.clone()).unwrap();
        let replayed = replay(scenario, &EventLog::parse(&log.to_jsonl()).unwrap()).unwrap();
        if state_hash(&replayed) != state_hash(&record.final_state) || replayed != record.final_state {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("100 Racer games, {mismatches} hash mismatches, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = RngState::from_seed(0x0dd5);
    let trials = 100_000;
    let mut worst: f64 = 0.0;
    for diff in -10..=10 {
        let exact = to_f64(opposed_oracle(diff));
        let wins = (0..trials)
            .filter(|_| opposed_check(diff as i32, 0, &mut rng).success)
            .count();
        worst = worst.max((wins as f64 / trials as f64 - exact).abs());
    }
    let ties = opposed_oracle(0);
    check(
        worst <= 0.01 && ties == Ratio::new(575, 1296),
        format!("max |empirical - exact| = {worst:.4} over 21 differences; P(diff 0) = {ties}"),
    )
}

fn criterion_3(scenario: &Scenario) -> Verdict {
    let total = scenario.safety_node_count() as u32;
    let probs: Vec<Ratio<i64>> = (0..=total)
        .map(|done| two_d6_at_least(safety_threshold(done, total)))
        .collect();
    let monotone = probs.windows(2).all(|w| w[0] <= w[1]);
    let ends = probs[0] == Ratio::new(3, 36) && probs[total as usize] == Ratio::new(35, 36);
    let shown: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
    check(
        total == 8 && monotone && ends,
        format!("P(aligned) over s = 0..1 in eighths: {}", shown.join(", ")),
    )
}

fn criterion_4(scenario: &Scenario, racers: &McReport) -> Verdict {
    let low = racers.runs.iter().filter(|r| r.stability[3] <= 3).count();
    let started_at_seven = scenario.constants.start_stability == 7;
    let share = low as f64 / racers.runs.len() as f64;
    check(
        started_at_seven && share >= 0.9,
        format!("stability <= 3 after turn 4 in {low}/{} games ({:.1}%)", racers.runs.len(), share * 100.0),
    )
}

fn election_turns(events: &[GameEvent]) -> BTreeSet<u32> {
    events
        .iter()
        .filter(|e| matches!(e.body, EventBody::ElectionHeld { .. }))
        .map(|e| e.turn)
        .collect()
}

fn criterion_5(scenario: &Scenario) -> Verdict {
    let kinds = [AgentKind::TreatySeeker, AgentKind::Racer, AgentKind::SafetyChampion, AgentKind::Hawk];
    let mut seen = BTreeSet::new();
    let mut wrong = 0;
    for i in 0..BATCH {
        let kind = kinds[(i % kinds.len() as u64) as usize];
        let agents = lineup(scenario, &[kind]).unwrap();
        let record = run_game(scenario, &agents, run_seed(MASTER_SEED, i)).unwrap();
        let end = record.final_state.turn;
        let collapsed = record
            .final_state
            .outcome
            .as_ref()
            .is_some_and(|o| o.kind == OutcomeKind::Collapse);
        let expected: BTreeSet<u32> = [2, 4, 6, 8]
            .into_iter()
            .filter(|&t| t < end || (t == end && !collapsed))
            .collect();
        let actual = election_turns(&record.events);
        if actual != expected {
            wrong += 1;
        }
        seen.extend(actual);
    }
    check(
        wrong == 0 && seen == BTreeSet::from([2, 4, 6, 8]),
        format!("{BATCH} games, {wrong} with an off-schedule election; turns observed {seen:?}"),
    )
}

fn criterion_6(racers: &McReport) -> Verdict {
    let multi = racers.stats.multi_deployer_games;
    check(
        multi > 0 && multi == PINNED_MULTI_DEPLOYER_GAMES,
        format!(
            "same-turn multi-deployment in {multi}/{BATCH} games ({:.3}); pinned {PINNED_MULTI_DEPLOYER_GAMES}",
            multi as f64 / BATCH as f64
        ),
    )
}

fn criterion_7(racers: &McReport, seekers: &McReport) -> Verdict {
    let (mut seeker_only, mut racer_only) = (0, 0);
    for (s, r) in seekers.runs.iter().zip(&racers.runs) {
        assert_eq!(s.seed, r.seed, "paired seeds");
        match (s.is_safe(), r.is_safe()) {
            (true, false) => seeker_only += 1,
            (false, true) => racer_only += 1,
            _ => {}
        }
    }
    let p = sign_test_p(seeker_only, racer_only);
    let (safe_s, safe_r) = (seekers.stats.safe_count(), racers.stats.safe_count());
    check(
        safe_s > safe_r && p < 0.01,
        format!("safe outcomes TreatySeeker {safe_s}/{BATCH} vs Racer {safe_r}/{BATCH}; sign test p = {p:.2e}"),
    )
}

fn defection_rate(scenario: &Scenario, rigor: u8, trials: u32) -> f64 {
    let (mut base, _) = new_game(scenario, 7);
    let treaty: TreatyId = 0;
    let usa = TeamId::new("usa");
    base.treaties.push(Treaty {
        id: treaty,
        parties: BTreeSet::from([usa.clone(), TeamId::new("prc")]),
        terms: vec![Term::DeploymentConsent],
        verification_rigor: rigor,
        status: TreatyStatus::Active,
        signed_turn: 0,
        contested_turn: None,
    });
    let stances = BTreeMap::from([(usa, BTreeMap::from([(treaty, TreatyStance::Defect)]))]);
    let mut dice = RngState::from_seed(splitmix64(rigor as u64));
    let mut detected = 0;
    for _ in 0..trials {
        let mut state = base.clone();
        let events = defection_phase(scenario, &mut state, &stances, &mut dice);
        detected += events
            .iter()
            .filter(|e| matches!(e.body, EventBody::DefectionDetected { .. }))
            .count();
    }
    detected as f64 / trials as f64
}

fn criterion_8(scenario: &Scenario) -> Verdict {
    let trials = 100_000;
    let lax = defection_rate(scenario, 0, trials);
    let strict = defection_rate(scenario, 5, trials);
    check(
        (lax - 1.0 / 36.0).abs() <= 0.002 && strict == 1.0 && detection_threshold(0) == 12,
        format!("rigor 0 detects {lax:.4} (1/36 = 0.0278); rigor 5 detects {strict}"),
    )
}

/// Plays one game with a random lineup and randomly secreted orders, checking
/// every team's view after every turn. Returns the number of leaks found.
fn fuzzed_game(scenario: &Scenario, game: u64) -> (usize, usize) {
    let mut rng = RngState::from_seed(splitmix64(game ^ 0xf06));
    let teams = scenario.team_ids();
    let policies: BTreeMap<TeamId, AgentPolicy> = teams
        .iter()
        .map(|t| {
            let kind = AgentKind::ALL[(rng.next_u64() % AgentKind::ALL.len() as u64) as usize];
            (t.clone(), AgentPolicy::new(kind, AgentConfig::default()))
        })
        .collect();
    let mut memories: BTreeMap<TeamId, AgentMemory> = teams.iter().map(|t| (t.clone(), AgentMemory::default())).collect();
    let mut agent_rngs: BTreeMap<TeamId, RngState> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), RngState::from_seed(agent_seed(game, i))))
        .collect();
    let (mut state, created) = new_game(scenario, game);
    let mut events = vec![created];
    let mut turn_start = 0;
    let (mut leaks, mut secrets) = (0, 0);
    while !state.is_over() {
        let mut orders = BTreeMap::new();
        for team in &teams {
            let view = knowledge_view(&state, &events[turn_start..], &Viewer::Team(team.clone())).unwrap();
            let mut o = policies[team].decide(
                scenario,
                &view,
                memories.get_mut(team).unwrap(),
                agent_rngs.get_mut(team).unwrap(),
            );
            for action in &mut o.actions {
                if scenario.action(action.kind.action_type()).secret_allowed && rng.next_u64() % 2 == 0 {
                    *action = irsim_core::PolicyAction::secret(action.kind.clone());
                }
            }
            o.rnd_secret |= rng.next_u64() % 3 == 0;
            secrets += o.actions.iter().filter(|a| a.is_secret()).count();
            orders.insert(team.clone(), o);
        }
        let (next, turn_events) = resolve_turn(scenario, &state, &orders).unwrap();
        turn_start = events.len();
        events.extend(turn_events);
        state = next;
        for viewer in &teams {
            let view = knowledge_view(&state, &events, &Viewer::Team(viewer.clone())).unwrap();
            leaks += view.events.iter().filter(|e| leaks_secret(e, viewer)).count();
        }
    }
    (leaks, secrets)
}

/// An event exposes another team's secret action if it is that action's
/// resolution or one of its consequences, other than an attribution.
fn leaks_secret(event: &GameEvent, viewer: &TeamId) -> bool {
    if let EventBody::ActionResolved { team, action, .. } = &event.body {
        if team != viewer && action.is_secret() {
            return true;
        }
    }
    event.origin.as_ref().is_some_and(|a| {
        a.secret && &a.team != viewer && !matches!(event.body, EventBody::Attribution { .. })
    })
}

fn criterion_9(scenario: &Scenario) -> Verdict {
    let (mut leaks, mut secrets) = (0, 0);
    for game in 0..100 {
        let (l, s) = fuzzed_game(scenario, game);
        leaks += l;
        secrets += s;
    }
    check(
        leaks == 0 && secrets > 0,
        format!("100 fuzzed games, {secrets} secret actions, {leaks} leaked into rival views"),
    )
}

fn criterion_10(scenario: &Scenario, serial: &McReport, serial_time: Duration, parallel: &McReport) -> Verdict {
    let horizon = scenario.constants.horizon_turns;
    check(
        serial_time < Duration::from_secs(60) && serial.stats == parallel.stats && serial.runs == parallel.runs,
        format!(
            "{BATCH} games over {horizon} turns in {:.2}s on one thread; parallelism 1 and 8 agree",
            serial_time.as_secs_f64()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let scenario = Scenario::default_scenario();

    let started = Instant::now();
    let racers = batch(&scenario, AgentKind::Racer, 1);
    let serial_time = started.elapsed();
    let racers_parallel = batch(&scenario, AgentKind::Racer, 8);
    let seekers = batch(&scenario, AgentKind::TreatySeeker, 8);

    let verdicts = [
        ("determinism and replay", criterion_1(&scenario)),
        ("opposed-check oracle", criterion_2()),
        ("safety monotonicity", criterion_3(&scenario)),
        ("stability calibration", criterion_4(&scenario, &racers)),
        ("election schedule", criterion_5(&scenario)),
        ("multipolarity", criterion_6(&racers)),
        ("cooperation dominance", criterion_7(&racers, &seekers)),
        ("defection detection", criterion_8(&scenario)),
        ("fog of war", criterion_9(&scenario)),
        ("performance and parallel invariance", criterion_10(&scenario, &racers, serial_time, &racers_parallel)),
    ];
    let mut failed = Vec::new();
    for (i, (name, verdict)) in verdicts.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn oracle_enumeration_is_exact() {
    assert_eq!(opposed_oracle(-11), Ratio::new(0, 1));
    assert_eq!(opposed_oracle(10), Ratio::new(1295, 1296));
    assert_eq!(opposed_oracle(11), Ratio::new(1, 1));
    for d in -10..=10 {
        assert_eq!(opposed_oracle(d) + opposed_oracle(-d) + tie_probability(d), Ratio::new(1, 1));
    }
    assert_eq!(two_d6_at_least(2), Ratio::new(1, 1));
    assert_eq!(two_d6_at_least(12), Ratio::new(1, 36));
}

fn tie_probability(diff: i64) -> Ratio<i64> {
    let faces = || (1..=6).flat_map(|a| (1..=6).map(move |b| a + b));
    let ties = faces()
        .flat_map(|a| faces().map(move |d| (a, d)))
        .filter(|(a, d)| a + diff == *d)
        .count();
    Ratio::new(ties as i64, 1296)
}
