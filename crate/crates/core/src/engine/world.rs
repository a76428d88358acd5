//! Phases 7 to 12: defection checks, shocks, stability, elections,
//! deployment and end evaluation.

use std::collections::{BTreeMap, BTreeSet};

use super::{NoDice, Resolver};
use crate::dice::{opposed_check_for, DiceSource, RollPurpose};
use crate::error::ActionError;
use crate::event::{Cause, EventBody, GameEvent, Visibility};
use crate::ids::{ShockId, TeamId, TreatyId};
use crate::orders::{PauseAnswer, TreatyStance, TurnOrders};
use crate::scenario::{Lane, Project, ResourceKind, Scenario, ShockEffect, MAX_LEVEL};
use crate::state::{
    DeploymentRecord, GameOutcome, GameState, OutcomeKind, SafetyOutcome, Term, TreatyStatus,
};

const DEFECTION_STABILITY_HIT: i32 = -2;
const DEFECTION_SOFT_POWER_HIT: i32 = -2;
const ELECTION_SOFT_POWER_HIT: i32 = -1;
const INTERFERENCE_MODIFIER: i32 = -2;
const ALIGNED_DEPLOYER_BONUS: i32 = 10;

/// Lowest 2d6 total that detects a defector.
pub fn detection_threshold(rigor: u8) -> i32 {
    12 - 2 * rigor as i32
}

/// `11 - round(8 * completed / total)`, rounding halves up.
pub fn safety_threshold(completed: u32, total: u32) -> i32 {
    if total == 0 {
        return 11;
    }
    let completed = completed.min(total);
    let rounded = (16 * completed + total) / (2 * total);
    11 - rounded as i32
}

/// Incumbent modifier for an election.
pub fn election_modifier(stability: i32, interference: bool) -> i32 {
    (stability - 5).div_euclid(2) + if interference { INTERFERENCE_MODIFIER } else { 0 }
}

pub(crate) fn election_due(scenario: &Scenario, turn: u32) -> bool {
    turn > 0 && turn % scenario.constants.election_period == 0
}

// Phase 7.

pub(crate) fn defection_phase_with<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    let stances: BTreeMap<TeamId, BTreeMap<TreatyId, TreatyStance>> = orders
        .iter()
        .map(|(t, o)| (t.clone(), o.treaty_stance.clone()))
        .collect();
    defect(r, &stances);
}

fn defect<D: DiceSource>(r: &mut Resolver<'_, D>, stances: &BTreeMap<TeamId, BTreeMap<TreatyId, TreatyStance>>) {
    let active: Vec<_> = r
        .state
        .treaties
        .iter()
        .filter(|t| t.status == TreatyStatus::Active)
        .cloned()
        .collect();
    for treaty in active {
        for party in &treaty.parties {
            let defects = stances
                .get(party)
                .and_then(|s| s.get(&treaty.id))
                .is_some_and(|s| *s == TreatyStance::Defect);
            if !defects {
                continue;
            }
            if r.state.treaty(treaty.id).map(|t| t.status) != Some(TreatyStatus::Active) {
                break;
            }
            let roll = r.dice.two_d6(RollPurpose::Defection);
            let threshold = detection_threshold(treaty.verification_rigor);
            if roll.total() as i32 >= threshold {
                r.emit_world(
                    Visibility::Public,
                    EventBody::DefectionDetected {
                        treaty: treaty.id,
                        team: party.clone(),
                        roll,
                        threshold,
                    },
                );
                r.emit_world(
                    Visibility::Public,
                    EventBody::TreatyStatusChanged {
                        treaty: treaty.id,
                        from: TreatyStatus::Active,
                        to: TreatyStatus::Dissolved,
                    },
                );
                r.change_stability(DEFECTION_STABILITY_HIT, Cause::Defection { treaty: treaty.id });
                r.adjust(
                    party,
                    &[(ResourceKind::SoftPower, DEFECTION_SOFT_POWER_HIT)],
                    Cause::Defection { treaty: treaty.id },
                );
            } else {
                r.emit_world(
                    Visibility::FacilitatorOnly,
                    EventBody::DefectionUndetected {
                        treaty: treaty.id,
                        team: party.clone(),
                        roll,
                        threshold,
                    },
                );
            }
        }
    }
}

/// Detection rolls for every party whose stance is `Defect` on an Active treaty.
pub fn defection_phase(
    scenario: &Scenario,
    state: &mut GameState,
    stances: &BTreeMap<TeamId, BTreeMap<TreatyId, TreatyStance>>,
    dice: &mut impl DiceSource,
) -> Vec<GameEvent> {
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    defect(&mut r, stances);
    r.events
}

// Phase 8.

pub(crate) fn shock_phase<D: DiceSource>(r: &mut Resolver<'_, D>, injected: Option<&ShockId>) {
    let next = if let Some(id) = injected.filter(|id| !r.state.shocks_drawn.contains(id)) {
        r.scenario.shock_deck.iter().find(|s| &s.id == id).map(|s| (s.clone(), true))
    } else {
        let roll = r.dice.d6(RollPurpose::ShockGate);
        let candidate = r
            .scenario
            .shock_deck
            .iter()
            .find(|s| !r.state.shocks_drawn.contains(&s.id))
            .cloned();
        let drawn = roll.value <= 2 && candidate.is_some();
        r.emit_world(Visibility::FacilitatorOnly, EventBody::ShockCheck { roll, drawn });
        candidate.filter(|_| drawn).map(|s| (s, false))
    };
    let Some((shock, injected)) = next else {
        return;
    };
    r.emit_world(
        Visibility::Public,
        EventBody::ShockDrawn {
            shock: shock.id.clone(),
            shock_kind: shock.kind,
            injected,
        },
    );
    let cause = Cause::Shock { shock: shock.id.clone() };
    for effect in &shock.effect {
        match effect {
            ShockEffect::PublishLowestBasic => {
                let teams: Vec<TeamId> = r.state.teams.keys().cloned().collect();
                let target = (1..=MAX_LEVEL)
                    .flat_map(|level| Lane::ALL.into_iter().map(move |lane| (lane, level)))
                    .filter_map(|(lane, level)| r.scenario.basic_node(lane, level))
                    .find(|n| teams.iter().any(|t| !r.state.is_completed(t, &n.id)))
                    .map(|n| n.id.clone());
                if let Some(node) = target {
                    for t in &teams {
                        r.complete(t, &node, cause.clone());
                    }
                }
            }
            ShockEffect::Stability { delta } => r.change_stability(*delta, cause.clone()),
            ShockEffect::AllTeams { resource, delta } => {
                let teams: Vec<TeamId> = r.state.teams.keys().cloned().collect();
                for t in &teams {
                    r.adjust(t, &[(*resource, *delta)], cause.clone());
                }
            }
            ShockEffect::Leader { resource, delta } => {
                let leader = r
                    .state
                    .teams
                    .values()
                    .max_by(|a, b| a.resources.get(*resource).cmp(&b.resources.get(*resource)).then(b.id.cmp(&a.id)))
                    .map(|t| t.id.clone());
                if let Some(t) = leader {
                    r.adjust(&t, &[(*resource, *delta)], cause.clone());
                }
            }
        }
    }
}

/// Shock phase on its own: gate roll and draw, or the injected shock.
pub fn draw_shock_event(
    scenario: &Scenario,
    state: &mut GameState,
    injected: Option<&ShockId>,
    dice: &mut impl DiceSource,
) -> Vec<GameEvent> {
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    shock_phase(&mut r, injected);
    r.events
}

// Phase 9.

pub(crate) fn stability_phase<D: DiceSource>(r: &mut Resolver<'_, D>) {
    let concern_drain: u32 = r.state.unmitigated_concerns().map(|c| c.severity).sum();
    let marker_drain = r.state.pressure_markers;
    let from = r.state.stability;
    if concern_drain + marker_drain == 0 {
        r.emit_world(Visibility::Public, EventBody::StabilityUnchanged { stability: from });
        return;
    }
    let to = (from - (concern_drain + marker_drain) as i32).clamp(0, 10);
    r.emit_world(
        Visibility::Public,
        EventBody::StabilityUpdated {
            from,
            to,
            concern_drain,
            marker_drain,
        },
    );
}

/// Applies the end-of-turn stability drain; a result of 0 ends the game.
pub fn update_stability(scenario: &Scenario, state: &mut GameState) -> Vec<GameEvent> {
    let turn = state.turn + 1;
    let mut dice = NoDice;
    let mut r = Resolver::new(scenario, state, &mut dice, turn);
    stability_phase(&mut r);
    if r.state.stability == 0 && r.state.outcome.is_none() {
        let outcome = outcome_of(r.scenario, r.state, OutcomeKind::Collapse, turn);
        r.emit_world(Visibility::Public, EventBody::GameEnded { outcome });
    }
    r.events
}

// Phase 10.

pub(crate) fn election_phase<D: DiceSource>(r: &mut Resolver<'_, D>) {
    let Some(holder) = r.scenario.election_state().map(|t| t.id.clone()) else {
        return;
    };
    let Some(incumbent) = r.state.teams[&holder].party else {
        return;
    };
    let modifier = election_modifier(r.state.stability, r.state.election_interference);
    let check = opposed_check_for(0, modifier, RollPurpose::Election, r.dice);
    let retained = !check.success;
    r.emit_world(
        Visibility::Public,
        EventBody::ElectionHeld {
            incumbent,
            modifier,
            check,
            retained,
        },
    );
    if retained {
        return;
    }
    let affected: Vec<TreatyId> = r
        .state
        .treaties
        .iter()
        .filter(|t| t.status == TreatyStatus::Active && t.parties.contains(&holder))
        .map(|t| t.id)
        .collect();
    for id in affected {
        r.emit_world(
            Visibility::Public,
            EventBody::TreatyStatusChanged {
                treaty: id,
                from: TreatyStatus::Active,
                to: TreatyStatus::Contested,
            },
        );
    }
    r.adjust(&holder, &[(ResourceKind::SoftPower, ELECTION_SOFT_POWER_HIT)], Cause::Election);
}

/// Holds an election for the election-holding State.
pub fn run_election(scenario: &Scenario, state: &mut GameState, dice: &mut impl DiceSource) -> Vec<GameEvent> {
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    election_phase(&mut r);
    r.events
}

// Phase 11.

fn has_top_basic(scenario: &Scenario, state: &GameState, team: &TeamId) -> bool {
    Lane::ALL.iter().any(|&lane| {
        scenario
            .basic_node(lane, MAX_LEVEL)
            .is_some_and(|b| state.is_completed(team, &b.id))
    })
}

fn prerequisites_met(scenario: &Scenario, state: &GameState, team: &TeamId, project: Project) -> bool {
    has_top_basic(scenario, state, team)
        && scenario
            .deployment_node(project)
            .is_some_and(|n| state.is_completed(team, &n.id))
}

fn deploy<D: DiceSource>(r: &mut Resolver<'_, D>, team: &TeamId, project: Project) -> SafetyOutcome {
    let completed = r.state.bloc_safety_completed(r.scenario, team);
    let total = r.scenario.safety_node_count() as u32;
    let threshold = safety_threshold(completed, total);
    let dice = r.dice.two_d6(RollPurpose::Safety);
    let roll = dice.total() as i32;
    let outcome = SafetyOutcome {
        team: team.clone(),
        threshold,
        roll,
        dice,
        aligned: roll >= threshold,
    };
    let record = DeploymentRecord {
        turn: r.turn,
        project,
        safety_completed: completed,
        safety_total: total,
        outcome: outcome.clone(),
    };
    r.emit_world(Visibility::Public, EventBody::SafetyRolled { record });
    outcome
}

pub(crate) fn deployment_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    for (team, o) in orders {
        let Some(order) = &o.deploy else {
            continue;
        };
        let project = order.project;
        r.emit_world(
            Visibility::team(team),
            EventBody::PauseOffered {
                team: team.clone(),
                project,
            },
        );
        match order.pause {
            Some(PauseAnswer::Accept) | None => {
                r.emit_world(
                    Visibility::Public,
                    EventBody::PauseAccepted {
                        team: team.clone(),
                        project,
                    },
                );
                continue;
            }
            Some(PauseAnswer::Decline) => r.emit_world(
                Visibility::Public,
                EventBody::PauseDeclined {
                    team: team.clone(),
                    project,
                },
            ),
        }
        let abort = |reason: &str| EventBody::DeploymentAborted {
            team: team.clone(),
            project,
            reason: reason.to_owned(),
        };
        if !prerequisites_met(r.scenario, r.state, team, project) {
            r.emit_world(Visibility::Public, abort("prerequisites unmet"));
            continue;
        }
        let withheld = r.state.active_treaties_of(team).any(|t| {
            t.has_term(&Term::DeploymentConsent)
                && o.stance(t.id) == TreatyStance::Comply
                && t.parties
                    .iter()
                    .filter(|p| *p != team)
                    .any(|p| !orders.get(p).is_some_and(|po| po.deploy_consent.contains(team)))
        });
        if withheld {
            r.emit_world(Visibility::Public, abort("consent withheld"));
            continue;
        }
        deploy(r, team, project);
    }
}

/// Offers the pause, then rolls for safety if it is declined.
/// Returns `None` when the pause is accepted.
pub fn attempt_rtai_deployment(
    scenario: &Scenario,
    state: &mut GameState,
    team: &TeamId,
    project: Project,
    pause: Option<PauseAnswer>,
    dice: &mut impl DiceSource,
) -> Result<(Option<SafetyOutcome>, Vec<GameEvent>), ActionError> {
    if state.is_over() {
        return Err(ActionError::GameOver);
    }
    if !state.teams.contains_key(team) {
        return Err(ActionError::InvalidTarget(format!("team `{team}`")));
    }
    if !prerequisites_met(scenario, state, team, project) {
        return Err(ActionError::PrerequisitesUnmet(team.clone()));
    }
    let answer = pause.ok_or_else(|| ActionError::PauseNotAnswered(team.clone()))?;
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    r.emit_world(
        Visibility::team(team),
        EventBody::PauseOffered {
            team: team.clone(),
            project,
        },
    );
    if answer == PauseAnswer::Accept {
        r.emit_world(
            Visibility::Public,
            EventBody::PauseAccepted {
                team: team.clone(),
                project,
            },
        );
        return Ok((None, r.events));
    }
    r.emit_world(
        Visibility::Public,
        EventBody::PauseDeclined {
            team: team.clone(),
            project,
        },
    );
    let outcome = deploy(&mut r, team, project);
    Ok((Some(outcome), r.events))
}

// Phase 12.

fn outcome_of(scenario: &Scenario, state: &GameState, kind: OutcomeKind, turn: u32) -> GameOutcome {
    let collective_loss = kind.is_collective_loss();
    let aligned: BTreeSet<&TeamId> = state
        .deployments
        .iter()
        .filter(|d| d.outcome.aligned)
        .map(|d| &d.outcome.team)
        .collect();
    let team_scores = scenario
        .team_ids()
        .into_iter()
        .map(|id| {
            let score = if collective_loss {
                0
            } else {
                let power = state.teams.get(&id).map_or(0, |t| t.resources.power_sum()) as i32;
                power + if aligned.contains(&id) { ALIGNED_DEPLOYER_BONUS } else { 0 }
            };
            (id, score)
        })
        .collect();
    GameOutcome {
        kind,
        turn,
        team_scores,
        collective_loss,
    }
}

/// End-of-turn evaluation: deployments, then collapse, then the horizon.
pub fn evaluate_end(scenario: &Scenario, state: &GameState) -> Option<GameOutcome> {
    if let Some(outcome) = &state.outcome {
        return Some(outcome.clone());
    }
    let kind = if !state.deployments.is_empty() {
        let misaligned: Vec<TeamId> = dedup(state.deployments.iter().filter(|d| !d.outcome.aligned));
        if !misaligned.is_empty() {
            OutcomeKind::MisalignedCatastrophe { teams: misaligned }
        } else {
            let teams = dedup(state.deployments.iter());
            if teams.len() == 1 {
                OutcomeKind::SafeUnipolar {
                    team: teams[0].clone(),
                }
            } else {
                OutcomeKind::SafeMultipolar { teams }
            }
        }
    } else if state.stability == 0 {
        OutcomeKind::Collapse
    } else if state.turn >= scenario.constants.horizon_turns {
        OutcomeKind::Timeout
    } else {
        return None;
    };
    Some(outcome_of(scenario, state, kind, state.turn))
}

fn dedup<'a>(records: impl Iterator<Item = &'a DeploymentRecord>) -> Vec<TeamId> {
    records
        .map(|d| d.outcome.team.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
