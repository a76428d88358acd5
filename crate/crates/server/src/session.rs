//! Session state machine: seats, sealed orders, the reveal barrier and turn
//! resolution. Everything here is synchronous; the HTTP layer serialises
//! access to a session behind its own lock.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use irsim_core::agents::{AgentMemory, AgentPolicy};
use irsim_core::mc::agent_seed;
use irsim_core::orders::validate_orders;
use irsim_core::replay::{EventLog, LogHeader, LogWriter};
use irsim_core::view::{knowledge_view, KnowledgeView, Viewer};
use irsim_core::{
    builtin_agent, new_game, resolve_turn_with, state_hash, DiceOverride, GameEvent, GameState, RngState, Scenario,
    ShockId, TeamId, TurnInputs, TurnOrders,
};
use serde::{Deserialize, Serialize};

use crate::error::SessionError;
use crate::transcript::{Transcript, TranscriptTurn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Lobby,
    Negotiation,
    AwaitingOrders,
    Resolving,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    Facilitator,
    Team { team: TeamId },
}

impl Role {
    pub fn viewer(&self) -> Viewer {
        match self {
            Role::Facilitator => Viewer::Facilitator,
            Role::Team { team } => Viewer::Team(team.clone()),
        }
    }
}

/// Parameters of `POST /sessions`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    /// Full scenario document; the bundled default when absent.
    pub scenario: Option<serde_json::Value>,
    pub seed: Option<u64>,
    /// Teams played by a built-in policy instead of a human seat.
    pub agents: BTreeMap<TeamId, String>,
    /// Per-phase deadline; without one the facilitator decides when to move on.
    pub phase_seconds: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FacilitatorOverride {
    #[serde(rename = "dice")]
    Dice(DiceOverride),
    #[serde(rename = "shock")]
    Shock(ShockId),
}

/// Snapshot a seat receives from `GET /sessions/{id}/view`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeatView {
    pub session_id: String,
    pub phase: Phase,
    pub turn: u32,
    pub ready: BTreeMap<TeamId, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_ms: Option<u64>,
    /// The seat's own sealed orders for the pending turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sealed: Option<TurnOrders>,
    pub view: KnowledgeView,
}

/// Result of one `advance` call.
#[derive(Debug, Clone)]
pub struct Advance {
    pub phase: Phase,
    pub turn: u32,
    /// Events of the resolved turn, unfiltered; empty for plain phase moves.
    pub events: Vec<GameEvent>,
}

struct Bot {
    policy: AgentPolicy,
    memory: AgentMemory,
    rng: RngState,
}

pub struct Session {
    pub id: String,
    scenario: Scenario,
    seed: u64,
    phase: Phase,
    tokens: HashMap<String, Role>,
    seats: BTreeMap<TeamId, Vec<String>>,
    bots: BTreeMap<TeamId, Bot>,
    sealed: BTreeMap<TeamId, TurnOrders>,
    pending: TurnInputs,
    state: GameState,
    log: EventLog,
    turn_start: usize,
    transcript: Transcript,
    phase_duration: Option<Duration>,
    deadline: Option<Instant>,
    storage: Option<Storage>,
}

struct Storage {
    dir: PathBuf,
    writer: LogWriter,
}

pub fn new_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl Session {
    pub fn create(request: CreateSession, data_dir: Option<&Path>) -> Result<(Self, String), SessionError> {
        let scenario = match request.scenario {
            Some(doc) => irsim_core::load_scenario(&doc.to_string()).map_err(|e| SessionError::BadRequest(e.to_string()))?,
            None => Scenario::default_scenario(),
        };
        let seed = request.seed.unwrap_or_else(rand::random);
        let teams = scenario.team_ids();
        let mut bots = BTreeMap::new();
        for (team, name) in request.agents {
            let index = teams
                .iter()
                .position(|t| t == &team)
                .ok_or_else(|| SessionError::BadRequest(format!("unknown team `{team}`")))?;
            let policy = builtin_agent(&name).map_err(|e| SessionError::BadRequest(e.to_string()))?;
            let bot = Bot {
                policy,
                memory: AgentMemory::default(),
                rng: RngState::from_seed(agent_seed(seed, index)),
            };
            bots.insert(team, bot);
        }

        let id = new_token();
        let facilitator = new_token();
        let (state, created) = new_game(&scenario, seed);
        let header = LogHeader::new(&scenario, seed);
        let mut storage = match data_dir {
            Some(root) => Some(Storage::open(root, &id, &scenario, &header)?),
            None => None,
        };
        let mut log = EventLog::new(header);
        log.append_event(created.clone())?;
        if let Some(s) = &mut storage {
            s.writer.append(&created)?;
        }
        let transcript = Transcript::new(&scenario, seed);
        let session = Self {
            id: id.clone(),
            scenario,
            seed,
            phase: Phase::Lobby,
            tokens: HashMap::from([(facilitator.clone(), Role::Facilitator)]),
            seats: BTreeMap::new(),
            bots,
            sealed: BTreeMap::new(),
            pending: TurnInputs::default(),
            state,
            log,
            turn_start: 0,
            transcript,
            phase_duration: request.phase_seconds.map(Duration::from_secs),
            deadline: None,
            storage,
        };
        Ok((session, facilitator))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn state_hash(&self) -> String {
        state_hash(&self.state)
    }

    pub fn role(&self, token: &str) -> Result<&Role, SessionError> {
        self.tokens.get(token).ok_or(SessionError::NotYourSeat)
    }

    fn require_facilitator(&self, token: &str) -> Result<(), SessionError> {
        match self.role(token)? {
            Role::Facilitator => Ok(()),
            Role::Team { .. } => Err(SessionError::NotYourSeat),
        }
    }

    pub fn join(&mut self, team: TeamId) -> Result<String, SessionError> {
        if self.phase == Phase::Ended {
            return Err(SessionError::PhaseViolation("the game has ended".into()));
        }
        if self.scenario.team(&team).is_none() {
            return Err(SessionError::BadRequest(format!("unknown team `{team}`")));
        }
        if self.bots.contains_key(&team) {
            return Err(SessionError::BadRequest(format!("`{team}` is played by an agent")));
        }
        let token = new_token();
        self.tokens.insert(token.clone(), Role::Team { team: team.clone() });
        self.seats.entry(team).or_default().push(token.clone());
        Ok(token)
    }

    /// Teams whose orders the reveal barrier waits for.
    pub fn live_teams(&self) -> BTreeSet<TeamId> {
        self.seats
            .keys()
            .filter(|t| !self.bots.contains_key(*t))
            .cloned()
            .collect()
    }

    pub fn ready(&self) -> BTreeMap<TeamId, bool> {
        self.live_teams()
            .into_iter()
            .map(|t| {
                let done = self.sealed.contains_key(&t);
                (t, done)
            })
            .collect()
    }

    fn barrier_reached(&self) -> bool {
        self.live_teams().iter().all(|t| self.sealed.contains_key(t))
    }

    pub fn submit(&mut self, token: &str, orders: TurnOrders) -> Result<BTreeMap<TeamId, bool>, SessionError> {
        let team = match self.role(token)? {
            Role::Team { team } => team.clone(),
            Role::Facilitator => return Err(SessionError::NotYourSeat),
        };
        if orders.team != team {
            return Err(SessionError::NotYourSeat);
        }
        if self.phase != Phase::AwaitingOrders {
            return Err(SessionError::PhaseViolation(format!(
                "orders are accepted only while awaiting orders, not during {:?}",
                self.phase
            )));
        }
        if self.barrier_reached() {
            return Err(SessionError::PhaseViolation("all teams have committed; orders are sealed".into()));
        }
        validate_orders(&self.scenario, &self.state, &orders).map_err(SessionError::ValidationFailed)?;
        self.sealed.insert(team, orders);
        Ok(self.ready())
    }

    pub fn queue_override(&mut self, token: &str, over: FacilitatorOverride) -> Result<(), SessionError> {
        self.require_facilitator(token)?;
        if self.phase == Phase::Ended {
            return Err(SessionError::PhaseViolation("the game has ended".into()));
        }
        match over {
            FacilitatorOverride::Dice(d) => {
                if !d.is_valid() {
                    return Err(SessionError::BadRequest(format!("{} is not a possible {:?} total", d.value, d.dice)));
                }
                self.pending.overrides.push(d);
            }
            FacilitatorOverride::Shock(id) => {
                if !self.scenario.shock_deck.iter().any(|s| s.id == id) {
                    return Err(SessionError::BadRequest(format!("unknown shock `{id}`")));
                }
                if self.state.shocks_drawn.contains(&id) {
                    return Err(SessionError::BadRequest(format!("shock `{id}` was already drawn")));
                }
                self.pending.injected_shock = Some(id);
            }
        }
        Ok(())
    }

    pub fn deadline_passed(&self, now: Instant) -> bool {
        self.deadline.is_some_and(|d| now >= d)
    }

    pub fn deadline_ms(&self) -> Option<u64> {
        self.deadline
            .map(|d| d.saturating_duration_since(Instant::now()).as_millis() as u64)
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.deadline = match phase {
            Phase::Negotiation | Phase::AwaitingOrders => self.phase_duration.map(|d| Instant::now() + d),
            _ => None,
        };
    }

    /// Facilitator step: Lobby → Negotiation → AwaitingOrders → resolution.
    pub fn advance(&mut self, token: &str, force: bool) -> Result<Advance, SessionError> {
        self.require_facilitator(token)?;
        self.step(force || self.deadline_passed(Instant::now()))
    }

    /// Advance triggered by an expired phase clock.
    pub fn advance_on_deadline(&mut self) -> Result<Advance, SessionError> {
        self.step(true)
    }

    fn step(&mut self, force: bool) -> Result<Advance, SessionError> {
        match self.phase {
            Phase::Lobby => self.enter(Phase::Negotiation),
            Phase::Negotiation => self.enter(Phase::AwaitingOrders),
            Phase::AwaitingOrders => {
                if !force && !self.barrier_reached() {
                    let waiting: Vec<String> = self
                        .ready()
                        .into_iter()
                        .filter(|(_, r)| !r)
                        .map(|(t, _)| t.to_string())
                        .collect();
                    return Err(SessionError::PhaseViolation(format!(
                        "still waiting for orders from {}",
                        waiting.join(", ")
                    )));
                }
                return self.resolve();
            }
            Phase::Resolving | Phase::Ended => {
                return Err(SessionError::PhaseViolation(format!("cannot advance during {:?}", self.phase)));
            }
        }
        Ok(Advance {
            phase: self.phase,
            turn: self.state.turn,
            events: Vec::new(),
        })
    }

    fn collect_orders(&mut self) -> BTreeMap<TeamId, TurnOrders> {
        let recent = self.log.events[self.turn_start..].to_vec();
        let mut orders = std::mem::take(&mut self.sealed);
        for team in self.scenario.team_ids() {
            if orders.contains_key(&team) {
                continue;
            }
            let o = match self.bots.get_mut(&team) {
                Some(bot) => {
                    let view = knowledge_view(&self.state, &recent, &Viewer::Team(team.clone())).expect("roster team");
                    bot.policy.decide(&self.scenario, &view, &mut bot.memory, &mut bot.rng)
                }
                None => TurnOrders::empty(team.clone(), self.state.turn),
            };
            orders.insert(team, o);
        }
        orders
    }

    fn resolve(&mut self) -> Result<Advance, SessionError> {
        self.enter(Phase::Resolving);
        let orders = self.collect_orders();
        let inputs = std::mem::take(&mut self.pending);
        let (next, events) = match resolve_turn_with(&self.scenario, &self.state, &orders, &inputs) {
            Ok(r) => r,
            Err(e) => {
                self.pending = inputs;
                self.enter(Phase::AwaitingOrders);
                return Err(SessionError::Engine(e));
            }
        };
        self.turn_start = self.log.events.len();
        for e in &events {
            self.log.append_event(e.clone())?;
            if let Some(s) = &mut self.storage {
                s.writer.append(e)?;
            }
        }
        self.transcript.turns.push(TranscriptTurn { orders, inputs });
        self.state = next;
        if let Some(s) = &self.storage {
            s.save_transcript(&self.transcript)?;
        }
        let phase = if self.state.is_over() {
            Phase::Ended
        } else {
            Phase::Negotiation
        };
        self.enter(phase);
        Ok(Advance {
            phase,
            turn: self.state.turn,
            events,
        })
    }

    pub fn view_for(&self, role: &Role) -> SeatView {
        let view = knowledge_view(&self.state, &self.log.events, &role.viewer()).expect("seated teams are in the roster");
        let sealed = match role {
            Role::Team { team } => self.sealed.get(team).cloned(),
            Role::Facilitator => None,
        };
        SeatView {
            session_id: self.id.clone(),
            phase: self.phase,
            turn: self.state.turn,
            ready: self.ready(),
            deadline_ms: self.deadline_ms(),
            sealed,
            view,
        }
    }

    pub fn view(&self, token: &str) -> Result<SeatView, SessionError> {
        Ok(self.view_for(self.role(token)?))
    }

    /// Events of `events` the given role may see.
    pub fn visible_events(&self, role: &Role, events: &[GameEvent]) -> Vec<GameEvent> {
        knowledge_view(&self.state, events, &role.viewer())
            .map(|v| v.events)
            .unwrap_or_default()
    }
}

impl Storage {
    fn open(root: &Path, id: &str, scenario: &Scenario, header: &LogHeader) -> Result<Self, SessionError> {
        let dir = root.join(id);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("scenario.json"), scenario.to_json_pretty())?;
        let writer = LogWriter::create(dir.join("game.irlog"), header)?;
        Ok(Self { dir, writer })
    }

    fn save_transcript(&self, transcript: &Transcript) -> Result<(), SessionError> {
        let text = serde_json::to_string_pretty(transcript).expect("transcripts serialize");
        std::fs::write(self.dir.join("transcript.json"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lobby() -> (Session, String) {
        let request = CreateSession {
            seed: Some(5),
            ..Default::default()
        };
        Session::create(request, None).unwrap()
    }

    #[test]
    fn phases_cycle_through_a_turn() {
        let (mut s, fac) = lobby();
        assert_eq!(s.advance(&fac, false).unwrap().phase, Phase::Negotiation);
        assert_eq!(s.advance(&fac, false).unwrap().phase, Phase::AwaitingOrders);
        let resolved = s.advance(&fac, false).unwrap();
        assert_eq!(resolved.phase, Phase::Negotiation);
        assert_eq!(resolved.turn, 1);
        assert!(!resolved.events.is_empty());
    }

    #[test]
    fn barrier_waits_for_seated_teams() {
        let (mut s, fac) = lobby();
        let usa = s.join(TeamId::new("usa")).unwrap();
        s.advance(&fac, false).unwrap();
        s.advance(&fac, false).unwrap();
        assert!(matches!(s.advance(&fac, false), Err(SessionError::PhaseViolation(_))));
        s.submit(&usa, TurnOrders::empty(TeamId::new("usa"), 0)).unwrap();
        assert!(s.advance(&fac, false).is_ok());
    }

    #[test]
    fn seats_cannot_submit_for_other_teams() {
        let (mut s, fac) = lobby();
        let usa = s.join(TeamId::new("usa")).unwrap();
        s.advance(&fac, false).unwrap();
        s.advance(&fac, false).unwrap();
        let err = s.submit(&usa, TurnOrders::empty(TeamId::new("prc"), 0)).unwrap_err();
        assert!(matches!(err, SessionError::NotYourSeat));
        assert!(matches!(s.advance(&usa, true), Err(SessionError::NotYourSeat)));
    }

    #[test]
    fn sealed_orders_are_immutable_after_the_barrier() {
        let (mut s, fac) = lobby();
        let usa = s.join(TeamId::new("usa")).unwrap();
        s.advance(&fac, false).unwrap();
        s.advance(&fac, false).unwrap();
        s.submit(&usa, TurnOrders::empty(TeamId::new("usa"), 0)).unwrap();
        let again = s.submit(&usa, TurnOrders::empty(TeamId::new("usa"), 0));
        assert!(matches!(again, Err(SessionError::PhaseViolation(_))));
    }

    #[test]
    fn expired_clock_forces_resolution() {
        let request = CreateSession {
            seed: Some(1),
            phase_seconds: Some(0),
            ..Default::default()
        };
        let (mut s, fac) = Session::create(request, None).unwrap();
        s.join(TeamId::new("usa")).unwrap();
        s.advance(&fac, false).unwrap();
        s.advance(&fac, false).unwrap();
        assert!(s.deadline_passed(Instant::now()));
        assert_eq!(s.advance_on_deadline().unwrap().turn, 1);
    }
}
