//! Turn resolution.
//!
//! [`resolve_turn`] runs the twelve phases in a fixed order. Each phase is
//! also exposed as a standalone operation for tests and tooling.

mod actions;
mod world;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dice::{DiceOverride, DiceSource, TurnDice};
use crate::error::EngineError;
use crate::event::{apply_event, ActionRef, Cause, EventBody, GameEvent, Visibility};
use crate::ids::{NodeId, ShockId, TeamId};
use crate::orders::{validate_orders, TurnOrders};
use crate::scenario::{Effect, NodeKind, ResourceKind, Scenario, TeamKind};
use crate::state::{Concern, GameState};

pub use actions::{
    apply_rnd_allocation, resolve_cyber_op, resolve_governance, resolve_hard_power, GovernanceAction,
    HardPowerAction,
};
pub use world::{
    attempt_rtai_deployment, defection_phase, detection_threshold, draw_shock_event, election_modifier,
    evaluate_end, run_election, safety_threshold, update_stability,
};

/// Facilitator inputs for one turn.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnInputs {
    /// Substitutes for the next matching dice rolls, consumed in order.
    #[serde(default)]
    pub overrides: Vec<DiceOverride>,
    /// Shock drawn this turn regardless of the gate roll.
    #[serde(default)]
    pub injected_shock: Option<ShockId>,
}

/// Resolves one turn from the committed orders of every team.
pub fn resolve_turn(
    scenario: &Scenario,
    state: &GameState,
    orders: &BTreeMap<TeamId, TurnOrders>,
) -> Result<(GameState, Vec<GameEvent>), EngineError> {
    resolve_turn_with(scenario, state, orders, &TurnInputs::default())
}

pub fn resolve_turn_with(
    scenario: &Scenario,
    state: &GameState,
    orders: &BTreeMap<TeamId, TurnOrders>,
    inputs: &TurnInputs,
) -> Result<(GameState, Vec<GameEvent>), EngineError> {
    if state.is_over() {
        return Err(EngineError::GameOver);
    }
    for (key, o) in orders {
        if key != &o.team {
            return Err(EngineError::MismatchedOrders {
                key: key.clone(),
                team: o.team.clone(),
            });
        }
        if !state.teams.contains_key(key) {
            return Err(EngineError::UnknownTeam(key.clone()));
        }
        if o.turn != state.turn {
            return Err(EngineError::StaleOrders {
                expected: state.turn,
                got: o.turn,
            });
        }
    }
    let missing: Vec<TeamId> = state
        .teams
        .keys()
        .filter(|t| !orders.contains_key(*t))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(EngineError::MissingOrders(missing));
    }
    if let Some(bad) = inputs.overrides.iter().find(|o| !o.is_valid()) {
        return Err(EngineError::InvalidOverride(bad.clone()));
    }
    if let Some(id) = &inputs.injected_shock {
        if !scenario.shock_deck.iter().any(|s| &s.id == id) {
            return Err(EngineError::UnknownShock(id.clone()));
        }
    }
    for (team, o) in orders {
        validate_orders(scenario, state, o).map_err(|violations| EngineError::InvalidOrders {
            team: team.clone(),
            violations,
        })?;
    }

    let mut next = state.clone();
    let mut rng = state.rng.clone();
    let mut dice = TurnDice::new(&mut rng, inputs.overrides.clone());
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, &mut next, &mut dice, turn);
    for o in &inputs.overrides {
        r.emit_world(
            Visibility::FacilitatorOnly,
            EventBody::OverrideQueued { dice_override: o.clone() },
        );
    }

    actions::treaty_phase(&mut r, orders);
    actions::governance_phase(&mut r, orders);
    actions::economy_phase(&mut r, orders);
    actions::cyber_phase(&mut r, orders);
    actions::hard_power_phase(&mut r, orders);
    actions::rnd_phase(&mut r, orders);
    world::defection_phase_with(&mut r, orders);
    world::shock_phase(&mut r, inputs.injected_shock.as_ref());
    world::stability_phase(&mut r);
    let collapsed = r.state.stability == 0;
    if !collapsed {
        if world::election_due(scenario, turn) {
            world::election_phase(&mut r);
        }
        world::deployment_phase(&mut r, orders);
    }

    let mut events = std::mem::take(&mut r.events);
    drop(r);
    let draws = dice.draws();
    let unused = dice.into_unused();
    let mut no_dice = NoDice;
    let mut r = Resolver::new(scenario, &mut next, &mut no_dice, turn);
    r.events = std::mem::take(&mut events);
    if !unused.is_empty() {
        r.emit_world(Visibility::FacilitatorOnly, EventBody::OverrideUnused { overrides: unused });
    }
    let income = scenario.teams.iter().map(|t| (t.id.clone(), t.income)).collect();
    r.emit_world(
        Visibility::Public,
        EventBody::TurnAdvanced {
            turn,
            year: scenario.constants.start_year + turn as i32 * scenario.constants.years_per_turn,
            income,
        },
    );
    r.emit_world(
        Visibility::FacilitatorOnly,
        EventBody::RngCheckpoint { state: rng, draws },
    );
    if let Some(outcome) = evaluate_end(scenario, r.state) {
        r.emit_world(Visibility::Public, EventBody::GameEnded { outcome });
    }
    let events = std::mem::take(&mut r.events);
    Ok((next, events))
}

/// Dice source for bookkeeping steps that never roll.
pub(crate) struct NoDice;

impl DiceSource for NoDice {
    fn d6(&mut self, _purpose: crate::dice::RollPurpose) -> crate::dice::DieRoll {
        unreachable!("no dice are rolled after the deployment phase")
    }

    fn two_d6(&mut self, _purpose: crate::dice::RollPurpose) -> crate::dice::TwoDiceRoll {
        unreachable!("no dice are rolled after the deployment phase")
    }
}

/// Mutable resolution context shared by every phase.
pub(crate) struct Resolver<'a, D: DiceSource> {
    pub scenario: &'a Scenario,
    pub state: &'a mut GameState,
    pub dice: &'a mut D,
    pub turn: u32,
    pub events: Vec<GameEvent>,
    /// Action whose consequences are currently being emitted.
    pub ctx: Option<ActionRef>,
}

impl<'a, D: DiceSource> Resolver<'a, D> {
    pub fn new(scenario: &'a Scenario, state: &'a mut GameState, dice: &'a mut D, turn: u32) -> Self {
        Self {
            scenario,
            state,
            dice,
            turn,
            events: Vec::new(),
            ctx: None,
        }
    }

    /// Emits an event attributed to the current action. Consequences of a
    /// secret action stay with the actor, except an explicit attribution.
    pub fn emit(&mut self, visibility: Visibility, body: EventBody) {
        let origin = self.ctx.clone();
        let visibility = match &origin {
            Some(a)
                if a.secret
                    && visibility != Visibility::FacilitatorOnly
                    && !matches!(body, EventBody::Attribution { .. }) =>
            {
                Visibility::team(&a.team)
            }
            _ => visibility,
        };
        self.push(visibility, origin, body);
    }

    /// Emits an event that is not a consequence of any single action.
    pub fn emit_world(&mut self, visibility: Visibility, body: EventBody) {
        self.push(visibility, None, body);
    }

    fn push(&mut self, visibility: Visibility, origin: Option<ActionRef>, body: EventBody) {
        let event = GameEvent {
            seq: self.state.event_seq,
            turn: self.turn,
            visibility,
            origin,
            body,
        };
        apply_event(self.state, &event);
        self.events.push(event);
    }

    /// Resource deltas; visible to all when a power attribute moves.
    pub fn adjust(&mut self, team: &TeamId, changes: &[(ResourceKind, i32)], cause: Cause) {
        self.adjust_hidden(team, changes, cause, None);
    }

    /// Like [`Self::adjust`], but visible only to `hide_with` when set.
    pub fn adjust_hidden(
        &mut self,
        team: &TeamId,
        changes: &[(ResourceKind, i32)],
        cause: Cause,
        hide_with: Option<&TeamId>,
    ) {
        let changes: BTreeMap<ResourceKind, i32> =
            changes.iter().filter(|(_, d)| *d != 0).copied().collect();
        if changes.is_empty() {
            return;
        }
        let visibility = match hide_with {
            Some(owner) => Visibility::team(owner),
            None if changes.keys().any(|k| k.is_power()) => Visibility::Public,
            None => Visibility::team(team),
        };
        self.emit(
            visibility,
            EventBody::ResourcesAdjusted {
                team: team.clone(),
                changes,
                cause,
            },
        );
    }

    pub fn change_stability(&mut self, delta: i32, cause: Cause) {
        let from = self.state.stability;
        let to = (from + delta).clamp(0, 10);
        if to != from {
            self.emit(Visibility::Public, EventBody::StabilityChanged { from, to, cause });
        }
    }

    /// Sets a team's points on a node and runs completion side effects.
    /// `secret` hides the completion announcement.
    pub fn set_points(&mut self, team: &TeamId, node_id: &NodeId, to: u32, cause: Cause, secret: bool) {
        let Some(node) = self.scenario.node(node_id) else {
            return;
        };
        let from = self.state.points(team, node_id);
        let was_completed = self.state.is_completed(team, node_id);
        if from == to {
            return;
        }
        let completed = to >= node.cost;
        let public_progress = matches!(cause, Cause::Shock { .. } | Cause::OpenSource);
        let visibility = if public_progress {
            Visibility::Public
        } else {
            Visibility::team(team)
        };
        self.emit(
            visibility,
            EventBody::ProgressChanged {
                team: team.clone(),
                node: node_id.clone(),
                from,
                to,
                completed,
                cause,
            },
        );
        if completed && !was_completed {
            self.on_completed(team, node_id, secret);
        }
    }

    pub fn add_points(&mut self, team: &TeamId, node_id: &NodeId, delta: u32, cause: Cause, secret: bool) {
        let to = self.state.points(team, node_id) + delta;
        self.set_points(team, node_id, to, cause, secret);
    }

    /// Completes a node outright for `team`.
    pub fn complete(&mut self, team: &TeamId, node_id: &NodeId, cause: Cause) {
        let Some(node) = self.scenario.node(node_id) else {
            return;
        };
        if self.state.is_completed(team, node_id) {
            return;
        }
        let to = self.state.points(team, node_id).max(node.cost);
        self.set_points(team, node_id, to, cause, false);
    }

    fn on_completed(&mut self, team: &TeamId, node_id: &NodeId, secret: bool) {
        let node = self.scenario.node(node_id).expect("checked by caller");
        let first_time = !self
            .state
            .node_progress(team, node_id)
            .is_some_and(|p| p.ever_completed);
        self.emit(
            Visibility::secret_to(team, secret),
            EventBody::NodeCompleted {
                team: team.clone(),
                node: node_id.clone(),
                public: !secret,
            },
        );
        if !first_time {
            return;
        }
        if node.kind == NodeKind::Application {
            if let Some(spec) = &node.concern {
                let concern = Concern {
                    id: self.state.next_concern_id(),
                    source_node: node_id.clone(),
                    owner: team.clone(),
                    severity: spec.severity,
                    mitigated: false,
                    raised_turn: self.turn,
                };
                self.emit_world(Visibility::Public, EventBody::ConcernRaised { concern });
            }
        }
        let hide = secret.then_some(team);
        for effect in node.effects.clone() {
            let cause = Cause::NodeEffect { node: node_id.clone() };
            match effect {
                Effect::Resource { resource, delta } => {
                    self.adjust_hidden(team, &[(resource, delta)], cause, hide)
                }
                Effect::AllyResource { resource, delta } => {
                    if let Some(leader) = self.scenario.bloc_leader(team).cloned() {
                        self.adjust_hidden(&leader, &[(resource, delta)], cause, hide);
                    }
                }
                Effect::Capability { capability } => {
                    if !self.state.teams[team].capabilities.contains(&capability) {
                        self.emit(
                            Visibility::secret_to(team, secret),
                            EventBody::CapabilityGained {
                                team: team.clone(),
                                capability,
                            },
                        );
                    }
                }
            }
        }
    }

    /// Hard power of every team in `team`'s bloc.
    pub fn bloc_hard_power(&self, team: &TeamId) -> i32 {
        let Some(leader) = self.scenario.bloc_leader(team) else {
            return 0;
        };
        self.scenario
            .bloc_members(leader)
            .iter()
            .map(|m| self.state.resource(m, ResourceKind::HardPower) as i32)
            .sum()
    }

    pub fn other_state(&self, team: &TeamId) -> Option<TeamId> {
        let leader = self.scenario.bloc_leader(team)?;
        self.scenario
            .teams
            .iter()
            .find(|t| t.kind == TeamKind::State && &t.id != leader)
            .map(|t| t.id.clone())
    }

    pub fn import_dependent(&self) -> BTreeSet<TeamId> {
        self.scenario
            .teams
            .iter()
            .filter(|t| t.import_dependent)
            .map(|t| t.id.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests;
