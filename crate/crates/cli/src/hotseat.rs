//! Terminal play where every human team takes turns at the same keyboard.
//!
//! Each team sees only its own knowledge view while entering orders, and the
//! screen is cleared before the next team sits down. Orders are typed as one
//! line of JSON in the same shape the session server accepts; `team` and
//! `turn` may be left out.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use irsim_core::mc::agent_seed;
use irsim_core::orders::validate_orders;
use irsim_core::{
    knowledge_view, new_game, resolve_turn, state_hash, AgentConfig, AgentKind, AgentMemory, AgentPolicy, GameEvent,
    GameState, KnowledgeView, LogWriter, RngState, Scenario, TeamId, TurnOrders, Viewer, Visibility,
};
use serde_json::Value;

pub struct Options {
    pub seed: u64,
    pub bots: BTreeMap<TeamId, AgentKind>,
    pub clear_screen: bool,
}

struct Bot {
    policy: AgentPolicy,
    memory: AgentMemory,
    rng: RngState,
}

impl Bot {
    fn new(kind: AgentKind, seed: u64, index: usize) -> Self {
        Self {
            policy: AgentPolicy::new(kind, AgentConfig::default()),
            memory: AgentMemory::default(),
            rng: RngState::from_seed(agent_seed(seed, index)),
        }
    }

    fn decide(&mut self, scenario: &Scenario, view: &KnowledgeView) -> TurnOrders {
        self.policy.decide(scenario, view, &mut self.memory, &mut self.rng)
    }
}

const HELP: &str = "\
Enter this turn's orders as one line of JSON, for example
  {\"rnd_allocation\": {\"lm-1\": 6}, \"actions\": [{\"kind\": {\"type\": \"InvestCompute\", \"amount\": 1}, \"visibility\": \"Secret\"}]}
Other commands:
  pass           submit no orders
  agent KIND     let a scripted agent (racer, treaty, safety, spy, hawk, idle) write this turn's orders
  view           show your view again
  help           show this text";

struct Terminal<R, W> {
    input: R,
    out: W,
    clear_screen: bool,
}

impl<R: BufRead, W: Write> Terminal<R, W> {
    fn line(&mut self) -> Result<String> {
        let mut buf = String::new();
        if self.input.read_line(&mut buf)? == 0 {
            bail!("input ended before the game finished");
        }
        Ok(buf.trim().to_owned())
    }

    fn prompt(&mut self, text: &str) -> Result<String> {
        write!(self.out, "{text}")?;
        self.out.flush()?;
        self.line()
    }

    fn clear(&mut self) -> Result<()> {
        if self.clear_screen {
            write!(self.out, "\x1b[2J\x1b[H")?;
        } else {
            writeln!(self.out)?;
        }
        Ok(())
    }
}

/// Plays a full game and returns its final state.
pub fn play<R: BufRead, W: Write>(
    scenario: &Scenario,
    options: Options,
    input: R,
    out: W,
    mut log: Option<LogWriter>,
) -> Result<GameState> {
    let teams = scenario.team_ids();
    let mut bots: BTreeMap<TeamId, Bot> = teams
        .iter()
        .enumerate()
        .filter_map(|(i, t)| options.bots.get(t).map(|&k| (t.clone(), Bot::new(k, options.seed, i))))
        .collect();
    let mut term = Terminal {
        input,
        out,
        clear_screen: options.clear_screen,
    };

    let (mut state, created) = new_game(scenario, options.seed);
    if let Some(log) = log.as_mut() {
        log.append(&created)?;
    }
    let mut events = vec![created];
    let mut turn_start = 0;
    writeln!(term.out, "{} (seed {})", scenario.name, options.seed)?;

    while !state.is_over() {
        writeln!(
            term.out,
            "\n=== Turn {} of {}, year {}, stability {} ===",
            state.turn + 1,
            scenario.constants.horizon_turns,
            state.year,
            state.stability
        )?;
        let recent = &events[turn_start..];
        let mut orders = BTreeMap::new();
        for team in &teams {
            let view = knowledge_view(&state, recent, &Viewer::Team(team.clone()))?;
            let o = match bots.get_mut(team) {
                Some(bot) => {
                    writeln!(term.out, "{team} is played by the {:?} agent.", bot.policy.kind)?;
                    bot.decide(scenario, &view)
                }
                None => {
                    term.prompt(&format!("Pass the keyboard to {team} and press Enter. "))?;
                    let o = human_orders(&mut term, scenario, &state, &view, team, options.seed)?;
                    term.clear()?;
                    o
                }
            };
            orders.insert(team.clone(), o);
        }

        let (next, turn_events) = resolve_turn(scenario, &state, &orders)?;
        if let Some(log) = log.as_mut() {
            for e in &turn_events {
                log.append(e)?;
            }
        }
        writeln!(term.out, "--- Public results of turn {} ---", state.turn + 1)?;
        for e in turn_events.iter().filter(|e| e.visibility == Visibility::Public) {
            writeln!(term.out, "  {}", describe(e))?;
        }
        turn_start = events.len();
        events.extend(turn_events);
        state = next;
    }

    if let Some(log) = log.as_mut() {
        log.sync()?;
    }
    if let Some(outcome) = &state.outcome {
        writeln!(term.out, "\nGame over on turn {}: {}", outcome.turn, outcome.kind.label())?;
        for (team, score) in &outcome.team_scores {
            writeln!(term.out, "  {team}: {score}")?;
        }
    }
    writeln!(term.out, "state hash {}", state_hash(&state))?;
    Ok(state)
}

fn human_orders<R: BufRead, W: Write>(
    term: &mut Terminal<R, W>,
    scenario: &Scenario,
    state: &GameState,
    view: &KnowledgeView,
    team: &TeamId,
    seed: u64,
) -> Result<TurnOrders> {
    show_view(&mut term.out, scenario, state, view, team)?;
    writeln!(term.out, "Type `help` for the order format.")?;
    loop {
        let line = term.prompt(&format!("{team}> "))?;
        let orders = match line.as_str() {
            "help" => {
                writeln!(term.out, "{HELP}")?;
                continue;
            }
            "view" => {
                show_view(&mut term.out, scenario, state, view, team)?;
                continue;
            }
            "" | "pass" => TurnOrders::empty(team.clone(), state.turn),
            cmd if cmd.starts_with("agent ") => match cmd["agent ".len()..].trim().parse::<AgentKind>() {
                Ok(kind) => {
                    let index = scenario.team_ids().iter().position(|t| t == team).unwrap_or(0);
                    Bot::new(kind, seed.wrapping_add(state.turn as u64), index).decide(scenario, view)
                }
                Err(e) => {
                    writeln!(term.out, "{e}")?;
                    continue;
                }
            },
            json => match parse_orders(json, team, state.turn) {
                Ok(o) => o,
                Err(e) => {
                    writeln!(term.out, "could not read orders: {e:#}")?;
                    continue;
                }
            },
        };
        match validate_orders(scenario, state, &orders) {
            Ok(()) => return Ok(orders),
            Err(violations) => {
                for v in violations {
                    writeln!(term.out, "  {}: {}", v.path, v.message)?;
                }
            }
        }
    }
}

fn parse_orders(text: &str, team: &TeamId, turn: u32) -> Result<TurnOrders> {
    let mut value: Value = serde_json::from_str(text).context("not valid JSON")?;
    let obj = value.as_object_mut().context("orders must be a JSON object")?;
    obj.entry("team").or_insert_with(|| Value::String(team.to_string()));
    obj.entry("turn").or_insert_with(|| Value::from(turn));
    let orders: TurnOrders = serde_json::from_value(value)?;
    if &orders.team != team {
        bail!("these are {team}'s orders, not {}'s", orders.team);
    }
    Ok(orders)
}

fn show_view<W: Write>(
    out: &mut W,
    scenario: &Scenario,
    state: &GameState,
    view: &KnowledgeView,
    team: &TeamId,
) -> Result<()> {
    writeln!(out, "--- {team}: turn {}, stability {} ---", view.turn + 1, view.stability)?;
    if let Some(own) = &view.own {
        let r = &own.team.resources;
        writeln!(
            out,
            "soft {} hard {} cyber {} | budget {} | talent {} data {} compute {} | R&D points {}",
            r.soft_power, r.hard_power, r.cyber_power, r.budget, r.talent, r.data, r.compute, own.rnd_points
        )?;
        let done: Vec<&str> = own
            .progress
            .iter()
            .filter(|(_, p)| p.completed)
            .map(|(id, _)| id.as_str())
            .collect();
        writeln!(out, "completed: {}", if done.is_empty() { "none".to_owned() } else { done.join(", ") })?;
        let open: Vec<String> = state
            .allocatable_nodes(scenario, team)
            .into_iter()
            .map(|n| {
                let points = own.progress.get(&n.id).map_or(0, |p| p.points);
                format!("{} {}/{}", n.id, points, n.cost)
            })
            .collect();
        writeln!(out, "researchable: {}", open.join(", "))?;
    }
    for (id, other) in &view.others {
        writeln!(
            out,
            "{id}: soft {} hard {} cyber {}, announced {}",
            other.soft_power,
            other.hard_power,
            other.cyber_power,
            other.public_completions.len()
        )?;
    }
    let open: Vec<String> = view
        .concerns
        .iter()
        .filter(|c| !c.mitigated)
        .map(|c| format!("#{} {} (severity {})", c.id, c.source_node, c.severity))
        .collect();
    if !open.is_empty() {
        writeln!(out, "open concerns: {}", open.join(", "))?;
    }
    for t in &view.treaties {
        writeln!(out, "treaty #{} {:?}: {:?}, rigor {}", t.id, t.parties, t.status, t.verification_rigor)?;
    }
    if !view.events.is_empty() {
        writeln!(out, "last turn, as you saw it:")?;
        for e in &view.events {
            writeln!(out, "  {}", describe(e))?;
        }
    }
    Ok(())
}

fn describe(event: &GameEvent) -> String {
    let payload = serde_json::to_value(&event.body)
        .ok()
        .and_then(|v| v.get("payload").cloned())
        .map_or_else(String::new, |p| p.to_string());
    format!("{} {}", event.kind(), payload)
}
