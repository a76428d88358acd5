//! Game runner for scripted agents and the Monte Carlo harness on top of it.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentKind, AgentMemory, AgentPolicy};
use crate::engine::resolve_turn;
use crate::error::{AgentError, EngineError, RunError};
use crate::event::{EventBody, GameEvent};
use crate::ids::TeamId;
use crate::orders::{ActionKind, CyberMode, TurnOrders};
use crate::rng::{splitmix64, RngState};
use crate::scenario::Scenario;
use crate::state::{new_game, GameState};
use crate::view::{knowledge_view, Viewer};

pub const OUTCOME_LABELS: [&str; 5] = ["SafeUnipolar", "SafeMultipolar", "MisalignedCatastrophe", "Collapse", "Timeout"];

/// One agent per team, by team id.
pub type Lineup = BTreeMap<TeamId, AgentPolicy>;

/// Assigns agents to teams in roster order. A single kind fills every seat.
pub fn lineup(scenario: &Scenario, kinds: &[AgentKind]) -> Result<Lineup, RunError> {
    let teams = scenario.team_ids();
    if kinds.len() == 1 {
        return Ok(teams
            .into_iter()
            .map(|t| (t, AgentPolicy::new(kinds[0], AgentConfig::default())))
            .collect());
    }
    if kinds.len() != teams.len() {
        let missing = teams.get(kinds.len()).cloned().unwrap_or_else(|| TeamId::new("?"));
        return Err(RunError::MissingAgent(missing));
    }
    Ok(teams
        .into_iter()
        .zip(kinds)
        .map(|(t, &k)| (t, AgentPolicy::new(k, AgentConfig::default())))
        .collect())
}

/// Parses a comma-separated agent list such as `racer,racer,treaty,treaty`.
pub fn parse_agents(spec: &str) -> Result<Vec<AgentKind>, AgentError> {
    spec.split(',').map(|s| s.trim().parse()).collect()
}

/// Everything a finished game produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub seed: u64,
    pub scenario_digest: String,
    pub agents: BTreeMap<TeamId, AgentKind>,
    pub orders: Vec<BTreeMap<TeamId, TurnOrders>>,
    pub events: Vec<GameEvent>,
    pub final_state: GameState,
}

/// Seed of a team's private agent stream.
pub fn agent_seed(seed: u64, team_index: usize) -> u64 {
    splitmix64(seed ^ team_index as u64)
}

/// Plays a game to its end with one scripted agent per team.
pub fn run_game(scenario: &Scenario, agents: &Lineup, seed: u64) -> Result<GameRecord, RunError> {
    let teams = scenario.team_ids();
    if let Some(t) = teams.iter().find(|t| !agents.contains_key(*t)) {
        return Err(RunError::MissingAgent(t.clone()));
    }
    let mut rngs: BTreeMap<TeamId, RngState> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), RngState::from_seed(agent_seed(seed, i))))
        .collect();
    let mut memories: BTreeMap<TeamId, AgentMemory> = teams.iter().map(|t| (t.clone(), AgentMemory::default())).collect();

    let (mut state, created) = new_game(scenario, seed);
    let mut events = vec![created];
    let mut all_orders = Vec::new();
    let mut turn_start = 0;
    while !state.is_over() {
        let recent = &events[turn_start..];
        let mut orders = BTreeMap::new();
        for team in &teams {
            let view = knowledge_view(&state, recent, &Viewer::Team(team.clone())).expect("roster team");
            let o = agents[team].decide(
                scenario,
                &view,
                memories.get_mut(team).expect("memory per team"),
                rngs.get_mut(team).expect("rng per team"),
            );
            orders.insert(team.clone(), o);
        }
        let (next, turn_events) = resolve_turn(scenario, &state, &orders).map_err(|e| match e {
            EngineError::InvalidOrders { team, violations } => RunError::InvalidAgentOrders {
                team,
                turn: state.turn,
                violations,
            },
            other => RunError::Engine(other),
        })?;
        turn_start = events.len();
        events.extend(turn_events);
        all_orders.push(orders);
        state = next;
    }
    Ok(GameRecord {
        seed,
        scenario_digest: scenario.digest(),
        agents: agents.iter().map(|(t, a)| (t.clone(), a.kind)).collect(),
        orders: all_orders,
        events,
        final_state: state,
    })
}

/// Per-run facts the aggregate statistics are built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: u64,
    pub seed: u64,
    pub outcome: String,
    pub end_turn: u32,
    pub final_stability: i32,
    /// Stability after each turn; turns after the end repeat the final value.
    pub stability: Vec<i32>,
    pub first_rtai_turn: Option<u32>,
    pub deployers: u32,
    pub defections: u32,
    pub exfiltrations: u32,
    pub elections_flipped: u32,
}

impl RunSummary {
    pub fn of(run: u64, record: &GameRecord, horizon: u32) -> Self {
        let mut stability = Vec::with_capacity(horizon as usize);
        let mut by_turn = BTreeMap::new();
        let mut first_rtai_turn = None;
        let mut deployers_by_turn: BTreeMap<u32, BTreeSet<&TeamId>> = BTreeMap::new();
        let (mut defections, mut exfiltrations, mut elections_flipped) = (0, 0, 0);
        for e in &record.events {
            match &e.body {
                EventBody::StabilityChanged { to, .. } | EventBody::StabilityUpdated { to, .. } => {
                    by_turn.insert(e.turn, *to);
                }
                EventBody::SafetyRolled { record } => {
                    first_rtai_turn.get_or_insert(record.turn);
                    deployers_by_turn.entry(record.turn).or_default().insert(&record.outcome.team);
                }
                EventBody::DefectionDetected { .. } | EventBody::DefectionUndetected { .. } => defections += 1,
                EventBody::ElectionHeld { retained: false, .. } => elections_flipped += 1,
                EventBody::ActionResolved { action, report, .. } => {
                    if report.success
                        && matches!(action.kind, ActionKind::CyberOp { mode: CyberMode::Exfiltrate, .. })
                    {
                        exfiltrations += 1;
                    }
                }
                _ => {}
            }
        }
        let mut last = initial_stability(record);
        for t in 1..=horizon {
            if let Some(&s) = by_turn.get(&t) {
                last = s;
            }
            stability.push(last);
        }
        let outcome = record.final_state.outcome.as_ref();
        Self {
            run,
            seed: record.seed,
            outcome: outcome.map_or("Unfinished", |o| o.kind.label()).to_owned(),
            end_turn: record.final_state.turn,
            final_stability: record.final_state.stability,
            stability,
            first_rtai_turn,
            deployers: deployers_by_turn.values().map(|s| s.len() as u32).max().unwrap_or(0),
            defections,
            exfiltrations,
            elections_flipped,
        }
    }

    pub fn is_safe(&self) -> bool {
        self.outcome == "SafeUnipolar" || self.outcome == "SafeMultipolar"
    }
}

fn initial_stability(record: &GameRecord) -> i32 {
    record
        .events
        .iter()
        .find_map(|e| match &e.body {
            EventBody::StabilityChanged { from, .. } | EventBody::StabilityUpdated { from, .. } => Some(*from),
            _ => None,
        })
        .unwrap_or(record.final_state.stability)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub turn: u32,
    pub mean: f64,
    pub p10: i32,
    pub p90: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStats {
    pub n_runs: u64,
    pub outcome_counts: BTreeMap<String, u64>,
    pub stability_trajectory: Vec<TrajectoryPoint>,
    pub first_rtai_turn: BTreeMap<u32, u64>,
    pub defections: u64,
    pub exfiltrations: u64,
    pub elections_flipped: u64,
    /// Games in which two or more teams deployed on the same turn.
    pub multi_deployer_games: u64,
}

impl OutcomeStats {
    pub fn count(&self, label: &str) -> u64 {
        self.outcome_counts.get(label).copied().unwrap_or(0)
    }

    pub fn fraction(&self, label: &str) -> f64 {
        self.count(label) as f64 / self.n_runs as f64
    }

    pub fn safe_count(&self) -> u64 {
        self.count("SafeUnipolar") + self.count("SafeMultipolar")
    }
}

/// Order-independent accumulator; stability values are kept as per-turn histograms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    n_runs: u64,
    outcome_counts: BTreeMap<String, u64>,
    stability_hist: Vec<BTreeMap<i32, u64>>,
    first_rtai_turn: BTreeMap<u32, u64>,
    defections: u64,
    exfiltrations: u64,
    elections_flipped: u64,
    multi_deployer_games: u64,
}

impl StatsAccumulator {
    pub fn add(&mut self, run: &RunSummary) {
        self.n_runs += 1;
        *self.outcome_counts.entry(run.outcome.clone()).or_default() += 1;
        if self.stability_hist.len() < run.stability.len() {
            self.stability_hist.resize_with(run.stability.len(), BTreeMap::new);
        }
        for (hist, &s) in self.stability_hist.iter_mut().zip(&run.stability) {
            *hist.entry(s).or_default() += 1;
        }
        if let Some(t) = run.first_rtai_turn {
            *self.first_rtai_turn.entry(t).or_default() += 1;
        }
        self.defections += run.defections as u64;
        self.exfiltrations += run.exfiltrations as u64;
        self.elections_flipped += run.elections_flipped as u64;
        self.multi_deployer_games += u64::from(run.deployers >= 2);
    }

    pub fn merge(mut self, other: StatsAccumulator) -> Self {
        self.n_runs += other.n_runs;
        for (k, v) in other.outcome_counts {
            *self.outcome_counts.entry(k).or_default() += v;
        }
        if self.stability_hist.len() < other.stability_hist.len() {
            self.stability_hist.resize_with(other.stability_hist.len(), BTreeMap::new);
        }
        for (mine, theirs) in self.stability_hist.iter_mut().zip(other.stability_hist) {
            for (s, c) in theirs {
                *mine.entry(s).or_default() += c;
            }
        }
        for (k, v) in other.first_rtai_turn {
            *self.first_rtai_turn.entry(k).or_default() += v;
        }
        self.defections += other.defections;
        self.exfiltrations += other.exfiltrations;
        self.elections_flipped += other.elections_flipped;
        self.multi_deployer_games += other.multi_deployer_games;
        self
    }

    pub fn finish(self) -> OutcomeStats {
        let mut outcome_counts: BTreeMap<String, u64> =
            OUTCOME_LABELS.iter().map(|l| ((*l).to_owned(), 0)).collect();
        outcome_counts.extend(self.outcome_counts);
        let stability_trajectory = self
            .stability_hist
            .iter()
            .enumerate()
            .map(|(i, hist)| {
                let n: u64 = hist.values().sum();
                let sum: i64 = hist.iter().map(|(&s, &c)| s as i64 * c as i64).sum();
                TrajectoryPoint {
                    turn: i as u32 + 1,
                    mean: if n == 0 { 0.0 } else { sum as f64 / n as f64 },
                    p10: percentile(hist, n, 10),
                    p90: percentile(hist, n, 90),
                }
            })
            .collect();
        OutcomeStats {
            n_runs: self.n_runs,
            outcome_counts,
            stability_trajectory,
            first_rtai_turn: self.first_rtai_turn,
            defections: self.defections,
            exfiltrations: self.exfiltrations,
            elections_flipped: self.elections_flipped,
            multi_deployer_games: self.multi_deployer_games,
        }
    }
}

/// Nearest-rank percentile over a value histogram.
fn percentile(hist: &BTreeMap<i32, u64>, n: u64, p: u64) -> i32 {
    if n == 0 {
        return 0;
    }
    let rank = (p * n).div_ceil(100).max(1);
    let mut seen = 0;
    for (&v, &c) in hist {
        seen += c;
        if seen >= rank {
            return v;
        }
    }
    *hist.keys().next_back().expect("non-empty histogram")
}

/// Seed of run `i` in a batch.
pub fn run_seed(master_seed: u64, i: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub stats: OutcomeStats,
    pub runs: Vec<RunSummary>,
}

/// Runs `n_runs` games on a pool of `parallelism` threads; results do not
/// depend on the thread count.
pub fn monte_carlo_report(
    scenario: &Scenario,
    agents: &Lineup,
    n_runs: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<McReport, RunError> {
    let horizon = scenario.constants.horizon_turns;
    let work = || {
        (0..n_runs)
            .into_par_iter()
            .map(|i| {
                let record = run_game(scenario, agents, run_seed(master_seed, i))?;
                Ok(RunSummary::of(i, &record, horizon))
            })
            .collect::<Result<Vec<_>, RunError>>()
    };
    let runs = match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(work)?,
        Err(_) => work()?,
    };
    let mut acc = StatsAccumulator::default();
    for r in &runs {
        acc.add(r);
    }
    Ok(McReport {
        stats: acc.finish(),
        runs,
    })
}

pub fn monte_carlo(
    scenario: &Scenario,
    agents: &Lineup,
    n_runs: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<OutcomeStats, RunError> {
    monte_carlo_report(scenario, agents, n_runs, master_seed, parallelism).map(|r| r.stats)
}

/// Per-run CSV rows.
pub fn runs_to_csv(runs: &[RunSummary]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "seed",
        "outcome",
        "end_turn",
        "final_stability",
        "first_rtai_turn",
        "deployers",
        "defections",
        "exfiltrations",
        "elections_flipped",
    ])?;
    for r in runs {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.outcome.clone(),
            r.end_turn.to_string(),
            r.final_stability.to_string(),
            r.first_rtai_turn.map_or(String::new(), |t| t.to_string()),
            r.deployers.to_string(),
            r.defections.to_string(),
            r.exfiltrations.to_string(),
            r.elections_flipped.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
