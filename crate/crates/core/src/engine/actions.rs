//! Phases 1 to 6: treaties, governance, economy, cyber, hard power and R&D.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{NoDice, Resolver};
use crate::dice::{opposed_check, opposed_check_for, CheckOutcome, DiceSource, RollPurpose};
use crate::error::ActionError;
use crate::event::{ActionRef, ActionReport, Cause, EventBody, GameEvent, Visibility};
use crate::ids::{ConcernId, NodeId, TeamId};
use crate::orders::{ActionKind, CyberMode, PolicyAction, TurnOrders};
use crate::scenario::{ActionType, Capability, ResourceKind, Scenario, TeamKind};
use crate::state::{GameState, IntelEntry, Treaty, TreatyProposal, TreatyStatus};

const CAPABILITY_BONUS: i32 = 2;
const BLOCKADE_TURNS: u32 = 2;
const CAPTURE_MARGIN: i32 = 5;
const CAPTURED_COMPUTE: i32 = 2;
const HARD_POWER_STABILITY_HIT: i32 = -2;
const SABOTAGE_DETECTION_MARGIN: i32 = 2;
const FAILED_OP_ATTRIBUTION_MARGIN: i32 = -3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardPowerAction {
    Blockade { supply: String },
    Strike { target: TeamId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GovernanceAction {
    Nationalise { corp: TeamId },
    /// `consent` is the corporation's answer from its own orders.
    FormPpp { corp: TeamId, consent: bool },
    Mitigate { concern: ConcernId },
    Regulate,
    /// Forms a treaty when every named party is among `signers`.
    SignTreaty {
        proposal: TreatyProposal,
        signers: BTreeSet<TeamId>,
    },
}

fn bonus(state: &GameState, team: &TeamId, capability: Capability) -> i32 {
    if state.teams[team].capabilities.contains(&capability) {
        CAPABILITY_BONUS
    } else {
        0
    }
}

fn report(success: bool, checks: Vec<CheckOutcome>, note: impl Into<String>) -> ActionReport {
    ActionReport {
        success,
        checks,
        note: note.into(),
    }
}

/// Runs `f` for every action accepted by `select`, in (team id, index) order,
/// then records the action and charges its catalog cost.
fn each_action<D, S, F>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>, select: S, mut f: F)
where
    D: DiceSource,
    S: Fn(&ActionKind) -> bool,
    F: FnMut(&mut Resolver<'_, D>, &TeamId, &PolicyAction) -> ActionReport,
{
    for (team, o) in orders {
        for (index, action) in o.actions.iter().enumerate() {
            if !select(&action.kind) {
                continue;
            }
            r.ctx = Some(ActionRef {
                team: team.clone(),
                index,
                secret: action.is_secret(),
            });
            let report = f(r, team, action);
            let spec = r.scenario.action(action.kind.action_type());
            let cost = [
                (ResourceKind::Budget, -((spec.budget_cost * action.kind.units()) as i32)),
                (ResourceKind::SoftPower, -(spec.soft_cost as i32)),
                (ResourceKind::HardPower, -(spec.hard_cost as i32)),
            ];
            let visibility = Visibility::secret_to(team, action.is_secret());
            r.emit(
                visibility,
                EventBody::ActionResolved {
                    team: team.clone(),
                    index,
                    action: action.clone(),
                    report,
                },
            );
            r.adjust(
                team,
                &cost,
                Cause::Cost {
                    action: action.kind.action_type(),
                },
            );
            r.ctx = None;
        }
    }
}

// Phase 1.

pub(crate) fn treaty_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    let election_state = r.scenario.election_state().map(|t| t.id.clone());
    let contested: Vec<Treaty> = r
        .state
        .treaties
        .iter()
        .filter(|t| t.status == TreatyStatus::Contested && t.contested_turn.is_some_and(|c| c < r.turn))
        .cloned()
        .collect();
    let ratified: BTreeSet<u32> = election_state
        .as_ref()
        .and_then(|s| orders.get(s))
        .map(|o| {
            o.actions
                .iter()
                .filter_map(|a| match a.kind {
                    ActionKind::RatifyTreaty { treaty } => Some(treaty),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default();

    let mut signers: BTreeMap<&TreatyProposal, BTreeSet<TeamId>> = BTreeMap::new();
    for (team, o) in orders {
        for a in &o.actions {
            if let ActionKind::SignTreaty { proposal } = &a.kind {
                signers.entry(proposal).or_default().insert(team.clone());
            }
        }
    }
    let mut formed: BTreeSet<TreatyProposal> = BTreeSet::new();

    each_action(
        r,
        orders,
        |k| {
            matches!(
                k,
                ActionKind::ProposeTreaty { .. } | ActionKind::SignTreaty { .. } | ActionKind::RatifyTreaty { .. }
            )
        },
        |r, team, action| match &action.kind {
            ActionKind::ProposeTreaty { proposal } => {
                r.emit(
                    Visibility::Public,
                    EventBody::TreatyProposed {
                        by: team.clone(),
                        proposal: proposal.clone(),
                    },
                );
                report(true, vec![], "")
            }
            ActionKind::SignTreaty { proposal } => {
                let all = proposal.parties.iter().all(|p| signers[proposal].contains(p));
                if all && formed.insert(proposal.clone()) {
                    sign_treaty(r, proposal);
                }
                report(all, vec![], if all { "" } else { "not every party signed" })
            }
            ActionKind::RatifyTreaty { treaty } => {
                let ok = Some(team) == election_state.as_ref() && contested.iter().any(|t| t.id == *treaty);
                report(ok, vec![], "")
            }
            _ => unreachable!(),
        },
    );

    for t in contested {
        let to = if ratified.contains(&t.id) {
            TreatyStatus::Active
        } else {
            TreatyStatus::Dissolved
        };
        r.emit_world(
            Visibility::Public,
            EventBody::TreatyStatusChanged {
                treaty: t.id,
                from: TreatyStatus::Contested,
                to,
            },
        );
    }
}

fn sign_treaty<D: DiceSource>(r: &mut Resolver<'_, D>, proposal: &TreatyProposal) {
    let treaty = Treaty {
        id: r.state.next_treaty_id(),
        parties: proposal.parties.clone(),
        terms: proposal.terms.clone(),
        verification_rigor: proposal.verification_rigor,
        status: TreatyStatus::Active,
        signed_turn: r.turn,
        contested_turn: None,
    };
    r.emit(Visibility::Public, EventBody::TreatySigned { treaty });
}

// Phase 2.

pub(crate) fn governance_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    each_action(
        r,
        orders,
        |k| {
            matches!(
                k,
                ActionKind::Nationalise { .. }
                    | ActionKind::FormPpp { .. }
                    | ActionKind::Mitigate { .. }
                    | ActionKind::Regulate
                    | ActionKind::InfluenceElection
            )
        },
        |r, team, action| {
            let g = match &action.kind {
                ActionKind::Nationalise { corp } => GovernanceAction::Nationalise { corp: corp.clone() },
                ActionKind::FormPpp { corp } => GovernanceAction::FormPpp {
                    corp: corp.clone(),
                    consent: orders.get(corp).is_some_and(|o| o.ppp_consent.contains(team)),
                },
                ActionKind::Mitigate { concern } => GovernanceAction::Mitigate { concern: *concern },
                ActionKind::Regulate => GovernanceAction::Regulate,
                ActionKind::InfluenceElection => {
                    r.emit(Visibility::Public, EventBody::InfluenceRegistered { by: team.clone() });
                    return report(true, vec![], "");
                }
                _ => unreachable!(),
            };
            governance(r, team, &g).unwrap_or_else(|e| report(false, vec![], e.to_string()))
        },
    );
}

fn check_corp<D: DiceSource>(r: &Resolver<'_, D>, actor: &TeamId, corp: &TeamId) -> Result<(), ActionError> {
    let spec = r
        .scenario
        .team(corp)
        .filter(|c| c.kind == TeamKind::Corporation)
        .ok_or_else(|| ActionError::InvalidTarget(format!("`{corp}` is not a corporation")))?;
    if r.scenario.team(actor).map(|t| t.kind) != Some(TeamKind::State) {
        return Err(ActionError::NotAState(actor.clone()));
    }
    if spec.allegiance.as_ref() != Some(actor) {
        return Err(ActionError::WrongAllegiance {
            actor: actor.clone(),
            corp: corp.clone(),
        });
    }
    let c = &r.state.teams[corp];
    if c.is_nationalised() || c.ppp_partner.is_some() || r.state.teams[actor].ppp_partner.is_some() {
        return Err(ActionError::AlreadyControlled(corp.clone()));
    }
    Ok(())
}

/// Copies `from`'s progress into `into` wherever it is higher.
fn merge_progress<D: DiceSource>(r: &mut Resolver<'_, D>, from: &TeamId, into: &TeamId) {
    let source = r.state.progress.get(from).cloned().unwrap_or_default();
    for (node, p) in source {
        if p.points > r.state.points(into, &node) {
            r.set_points(into, &node, p.points, Cause::Merge, !p.public);
        }
    }
}

fn governance<D: DiceSource>(
    r: &mut Resolver<'_, D>,
    actor: &TeamId,
    action: &GovernanceAction,
) -> Result<ActionReport, ActionError> {
    match action {
        GovernanceAction::Nationalise { corp } => {
            check_corp(r, actor, corp)?;
            let elected = r.scenario.team(actor).is_some_and(|t| t.election_holder);
            let mut checks = Vec::new();
            if elected {
                let internal = opposed_check_for(r.state.stability - 7, 0, RollPurpose::InternalStability, r.dice);
                checks.push(internal);
                if !internal.success {
                    return Ok(report(false, checks, "internal opposition prevailed"));
                }
                let soft = opposed_check(
                    r.state.resource(actor, ResourceKind::SoftPower) as i32 + bonus(r.state, actor, Capability::MassPersuasion),
                    r.state.resource(corp, ResourceKind::SoftPower) as i32,
                    r.dice,
                );
                checks.push(soft);
                if !soft.success {
                    return Ok(report(false, checks, "corporation resisted"));
                }
            }
            r.emit(
                Visibility::Public,
                EventBody::ControlChanged {
                    corp: corp.clone(),
                    controller: actor.clone(),
                },
            );
            merge_progress(r, corp, actor);
            Ok(report(true, checks, ""))
        }
        GovernanceAction::FormPpp { corp, consent } => {
            check_corp(r, actor, corp)?;
            if !consent {
                return Ok(report(false, vec![], "corporation did not consent"));
            }
            r.emit(
                Visibility::Public,
                EventBody::PppFormed {
                    state: actor.clone(),
                    corp: corp.clone(),
                },
            );
            merge_progress(r, actor, corp);
            Ok(report(true, vec![], ""))
        }
        GovernanceAction::Mitigate { concern } => {
            let open = r.state.concern(*concern).is_some_and(|c| !c.mitigated);
            if !open {
                return Err(ActionError::InvalidTarget(format!("concern {concern} is not open")));
            }
            r.emit(
                Visibility::Public,
                EventBody::ConcernMitigated {
                    concern: *concern,
                    by: actor.clone(),
                },
            );
            Ok(report(true, vec![], ""))
        }
        GovernanceAction::Regulate => {
            if r.scenario.team(actor).map(|t| t.kind) != Some(TeamKind::State) {
                return Err(ActionError::NotAState(actor.clone()));
            }
            let corps: Vec<TeamId> = r
                .scenario
                .teams
                .iter()
                .filter(|t| t.kind == TeamKind::Corporation && t.allegiance.as_ref() == Some(actor))
                .map(|t| t.id.clone())
                .collect();
            r.emit(
                Visibility::Public,
                EventBody::RegulationImposed {
                    by: actor.clone(),
                    corps: corps.clone(),
                },
            );
            for corp in &corps {
                let target = r.state.unmitigated_concerns().find(|c| &c.owner == corp).map(|c| c.id);
                if let Some(id) = target {
                    r.emit(
                        Visibility::Public,
                        EventBody::ConcernMitigated {
                            concern: id,
                            by: actor.clone(),
                        },
                    );
                }
            }
            Ok(report(true, vec![], ""))
        }
        GovernanceAction::SignTreaty { proposal, signers } => {
            if proposal.parties.iter().all(|p| signers.contains(p)) {
                sign_treaty(r, proposal);
                Ok(report(true, vec![], ""))
            } else {
                Ok(report(false, vec![], "not every party signed"))
            }
        }
    }
}

/// Standalone governance resolution (no catalog cost is charged).
pub fn resolve_governance(
    scenario: &Scenario,
    state: &mut GameState,
    actor: &TeamId,
    action: &GovernanceAction,
    dice: &mut impl DiceSource,
) -> Result<(ActionReport, Vec<GameEvent>), ActionError> {
    if state.is_over() {
        return Err(ActionError::GameOver);
    }
    if !state.teams.contains_key(actor) {
        return Err(ActionError::InvalidTarget(format!("unknown team `{actor}`")));
    }
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    let rep = governance(&mut r, actor, action)?;
    Ok((rep, r.events))
}

// Phase 3.

pub(crate) fn economy_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    each_action(
        r,
        orders,
        |k| {
            matches!(
                k,
                ActionKind::InvestTalent { .. }
                    | ActionKind::InvestData { .. }
                    | ActionKind::InvestCompute { .. }
                    | ActionKind::RecruitTalent
                    | ActionKind::PoachTalent { .. }
                    | ActionKind::PropagandaCampaign
                    | ActionKind::BuildMilitary
                    | ActionKind::BuildCyber
                    | ActionKind::FundSafety { .. }
                    | ActionKind::DevelopLaws { .. }
            )
        },
        |r, team, action| economy(r, team, action),
    );
}

fn soft_attr<D: DiceSource>(r: &Resolver<'_, D>, team: &TeamId) -> i32 {
    r.state.resource(team, ResourceKind::SoftPower) as i32 + bonus(r.state, team, Capability::MassPersuasion)
}

fn economy<D: DiceSource>(r: &mut Resolver<'_, D>, team: &TeamId, action: &PolicyAction) -> ActionReport {
    let ty = action.kind.action_type();
    let magnitude = r.scenario.action(ty).magnitude as i32;
    let cause = Cause::Action { action: ty };
    let units = action.kind.units() as i32;
    let simple = |kind: ResourceKind| (kind, magnitude * units);
    match &action.kind {
        ActionKind::InvestTalent { .. } => r.adjust(team, &[simple(ResourceKind::Talent)], cause),
        ActionKind::InvestData { .. } => r.adjust(team, &[simple(ResourceKind::Data)], cause),
        ActionKind::InvestCompute { .. } => r.adjust(team, &[simple(ResourceKind::Compute)], cause),
        ActionKind::PropagandaCampaign => r.adjust(team, &[simple(ResourceKind::SoftPower)], cause),
        ActionKind::BuildMilitary => r.adjust(team, &[simple(ResourceKind::HardPower)], cause),
        ActionKind::BuildCyber => r.adjust(team, &[simple(ResourceKind::CyberPower)], cause),
        ActionKind::RecruitTalent => {
            let rival = r
                .state
                .teams
                .keys()
                .filter(|t| !r.scenario.same_bloc(t, team))
                .map(|t| r.state.resource(t, ResourceKind::SoftPower) as i32)
                .max()
                .unwrap_or(0);
            let check = opposed_check(soft_attr(r, team), rival, r.dice);
            if check.success {
                r.adjust(team, &[(ResourceKind::Talent, magnitude)], cause);
            }
            return report(check.success, vec![check], "");
        }
        ActionKind::PoachTalent { target } => {
            let check = opposed_check(soft_attr(r, team), soft_attr(r, target), r.dice);
            if check.success {
                let moved = (magnitude as u32).min(r.state.resource(target, ResourceKind::Talent)) as i32;
                r.adjust(target, &[(ResourceKind::Talent, -moved)], cause.clone());
                r.adjust(team, &[(ResourceKind::Talent, moved)], cause);
            }
            return report(check.success, vec![check], "");
        }
        ActionKind::FundSafety { node, .. } => {
            if r.state.is_completed(team, node) {
                return report(false, vec![], "node already completed");
            }
            r.add_points(team, node, (magnitude * units) as u32, Cause::SafetyGrant, action.is_secret());
        }
        ActionKind::DevelopLaws { corp, payment } => {
            r.adjust(corp, &[(ResourceKind::Budget, *payment as i32)], Cause::LawsContract);
            let Some(node) = r
                .scenario
                .node_with_capability(Capability::AutonomousWeaponSystems)
                .map(|n| n.id.clone())
            else {
                return report(false, vec![], "no autonomous weapons node");
            };
            if !r.state.is_completed(corp, &node) {
                r.add_points(corp, &node, (magnitude * units) as u32, Cause::LawsContract, action.is_secret());
            }
        }
        _ => unreachable!(),
    }
    report(true, vec![], "")
}

// Phase 4.

pub(crate) fn cyber_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    each_action(
        r,
        orders,
        |k| matches!(k, ActionKind::PoolDefense { .. }),
        |r, team, action| {
            let ActionKind::PoolDefense { defender, amount } = &action.kind else {
                unreachable!()
            };
            let amount = (*amount).min(r.state.resource(team, ResourceKind::CyberPower));
            r.emit(
                Visibility::Public,
                EventBody::PoolDeclared {
                    contributor: team.clone(),
                    defender: defender.clone(),
                    amount,
                },
            );
            report(true, vec![], "")
        },
    );
    each_action(
        r,
        orders,
        |k| matches!(k, ActionKind::CyberOp { .. }),
        |r, team, action| {
            let ActionKind::CyberOp { target, mode, node } = &action.kind else {
                unreachable!()
            };
            cyber_op(r, team, target, *mode, node.as_ref()).unwrap_or_else(|e| report(false, vec![], e.to_string()))
        },
    );
}

fn cyber_op<D: DiceSource>(
    r: &mut Resolver<'_, D>,
    actor: &TeamId,
    target: &TeamId,
    mode: CyberMode,
    node: Option<&NodeId>,
) -> Result<ActionReport, ActionError> {
    if !r.state.teams.contains_key(target) || target == actor {
        return Err(ActionError::InvalidTarget(format!("team `{target}`")));
    }
    if let Some(n) = node {
        if r.scenario.node(n).is_none() {
            return Err(ActionError::InvalidTarget(format!("node `{n}`")));
        }
    }
    if node.is_none() && mode != CyberMode::Monitor {
        return Err(ActionError::InvalidTarget("operation needs a node".into()));
    }
    let attack = r.state.resource(actor, ResourceKind::CyberPower) as i32
        + bonus(r.state, actor, Capability::AutonomousCyberWeapon);
    let defence = r.state.resource(target, ResourceKind::CyberPower) as i32
        + r.state.pooled_defense.get(target).copied().unwrap_or(0) as i32
        + bonus(r.state, target, Capability::AutomatedVulnDiscovery);
    let check = opposed_check(attack, defence, r.dice);
    let attribution = |r: &mut Resolver<'_, D>| {
        r.emit(
            Visibility::Public,
            EventBody::Attribution {
                actor: actor.clone(),
                target: target.clone(),
                mode,
                margin: check.margin,
            },
        );
    };
    if !check.success {
        if check.margin <= FAILED_OP_ATTRIBUTION_MARGIN {
            attribution(r);
        }
        return Ok(report(false, vec![check], ""));
    }
    match mode {
        CyberMode::Monitor => {
            let progress = r.state.progress.get(target).cloned().unwrap_or_default();
            let nodes = progress
                .into_iter()
                .filter(|(id, p)| node.map_or(p.points > 0, |n| n == id))
                .map(|(id, p)| (id, p.points))
                .chain(node.filter(|n| r.state.points(target, n) == 0).map(|n| (n.clone(), 0)))
                .collect();
            let entry = IntelEntry {
                owner: actor.clone(),
                target: target.clone(),
                turn: r.turn,
                nodes,
            };
            r.emit(Visibility::team(actor), EventBody::IntelGathered { entry });
        }
        CyberMode::Exfiltrate => {
            let n = node.expect("checked above");
            let theirs = r.state.points(target, n);
            if theirs > r.state.points(actor, n) {
                r.set_points(actor, n, theirs, Cause::Exfiltration, true);
            }
        }
        CyberMode::Sabotage => {
            let n = node.expect("checked above");
            if !r.state.is_completed(target, n) {
                let now = r.state.points(target, n);
                let to = now.saturating_sub(check.margin as u32);
                r.set_points(target, n, to, Cause::Sabotage, true);
            }
            if check.margin <= SABOTAGE_DETECTION_MARGIN {
                attribution(r);
            }
        }
    }
    Ok(report(true, vec![check], ""))
}

/// Standalone cyber operation; uses the pooled defence declared so far.
pub fn resolve_cyber_op(
    scenario: &Scenario,
    state: &mut GameState,
    actor: &TeamId,
    target: &TeamId,
    mode: CyberMode,
    node: Option<&NodeId>,
    dice: &mut impl DiceSource,
) -> Result<(ActionReport, Vec<GameEvent>), ActionError> {
    if !state.teams.contains_key(actor) {
        return Err(ActionError::InvalidTarget(format!("team `{actor}`")));
    }
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    let rep = cyber_op(&mut r, actor, target, mode, node)?;
    Ok((rep, r.events))
}

// Phase 5.

pub(crate) fn hard_power_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    each_action(
        r,
        orders,
        |k| matches!(k, ActionKind::Blockade { .. } | ActionKind::Strike { .. }),
        |r, team, action| {
            let hp = match &action.kind {
                ActionKind::Blockade { supply } => HardPowerAction::Blockade { supply: supply.clone() },
                ActionKind::Strike { target } => HardPowerAction::Strike { target: target.clone() },
                _ => unreachable!(),
            };
            hard_power(r, team, &hp).unwrap_or_else(|e| report(false, vec![], e.to_string()))
        },
    );
}

fn hard_power<D: DiceSource>(
    r: &mut Resolver<'_, D>,
    actor: &TeamId,
    action: &HardPowerAction,
) -> Result<ActionReport, ActionError> {
    let attack = r.state.resource(actor, ResourceKind::HardPower) as i32
        + bonus(r.state, actor, Capability::AutonomousWeaponSystems);
    let check = match action {
        HardPowerAction::Blockade { supply } => {
            if !r.scenario.supply_chokepoints.contains(supply) {
                return Err(ActionError::InvalidTarget(format!("supply `{supply}`")));
            }
            let defender = r
                .other_state(actor)
                .ok_or_else(|| ActionError::InvalidTarget("no opposing bloc".into()))?;
            let check = opposed_check(attack, r.bloc_hard_power(&defender), r.dice);
            if check.success {
                let teams: Vec<TeamId> = r.import_dependent().into_iter().collect();
                r.emit(
                    Visibility::Public,
                    EventBody::BlockadeImposed {
                        by: actor.clone(),
                        teams,
                        turns: BLOCKADE_TURNS,
                    },
                );
                r.change_stability(HARD_POWER_STABILITY_HIT, Cause::Blockade);
                if check.margin >= CAPTURE_MARGIN {
                    r.adjust(actor, &[(ResourceKind::Compute, CAPTURED_COMPUTE)], Cause::Blockade);
                }
            }
            check
        }
        HardPowerAction::Strike { target } => {
            if !r.state.teams.contains_key(target) || target == actor {
                return Err(ActionError::InvalidTarget(format!("team `{target}`")));
            }
            let check = opposed_check(attack, r.bloc_hard_power(target), r.dice);
            if check.success {
                let loss = check.margin / 2;
                r.adjust(
                    target,
                    &[(ResourceKind::Compute, -loss), (ResourceKind::Talent, -loss)],
                    Cause::Strike,
                );
                r.change_stability(HARD_POWER_STABILITY_HIT, Cause::Strike);
            }
            check
        }
    };
    r.emit(Visibility::Public, EventBody::PressureMarkerAdded { by: actor.clone() });
    Ok(report(check.success, vec![check], ""))
}

/// Standalone hard-power resolution; checks the State and hard-power
/// preconditions and charges the catalog hard-power cost after the check.
pub fn resolve_hard_power(
    scenario: &Scenario,
    state: &mut GameState,
    actor: &TeamId,
    action: &HardPowerAction,
    dice: &mut impl DiceSource,
) -> Result<(ActionReport, Vec<GameEvent>), ActionError> {
    let team = state
        .teams
        .get(actor)
        .ok_or_else(|| ActionError::InvalidTarget(format!("team `{actor}`")))?;
    if team.kind != TeamKind::State {
        return Err(ActionError::NotAState(actor.clone()));
    }
    let ty = match action {
        HardPowerAction::Blockade { .. } => ActionType::Blockade,
        HardPowerAction::Strike { .. } => ActionType::Strike,
    };
    let need = scenario.action(ty).hard_cost;
    if team.resources.hard_power < need {
        return Err(ActionError::InsufficientHardPower {
            team: actor.clone(),
            have: team.resources.hard_power,
            need,
        });
    }
    let turn = state.turn + 1;
    let mut r = Resolver::new(scenario, state, dice, turn);
    let rep = hard_power(&mut r, actor, action)?;
    r.adjust(actor, &[(ResourceKind::HardPower, -(need as i32))], Cause::Cost { action: ty });
    Ok((rep, r.events))
}

// Phase 6.

pub(crate) fn rnd_phase<D: DiceSource>(r: &mut Resolver<'_, D>, orders: &BTreeMap<TeamId, TurnOrders>) {
    for (team, o) in orders {
        allocate(r, team, &o.rnd_allocation, o.rnd_secret);
    }
    each_action(
        r,
        orders,
        |k| matches!(k, ActionKind::OpenSource { .. }),
        |r, team, action| {
            let ActionKind::OpenSource { node } = &action.kind else {
                unreachable!()
            };
            if !r.state.is_completed(team, node) {
                return report(false, vec![], "node not completed");
            }
            let teams: Vec<TeamId> = r.state.teams.keys().cloned().collect();
            for t in teams {
                r.complete(&t, node, Cause::OpenSource);
            }
            report(true, vec![], "")
        },
    );
}

fn allocate<D: DiceSource>(r: &mut Resolver<'_, D>, team: &TeamId, allocation: &BTreeMap<NodeId, u32>, secret: bool) {
    let mut available = r.state.allocatable_points(team);
    for (node, &requested) in allocation {
        if requested == 0 {
            continue;
        }
        let applied = if r.state.is_completed(team, node) {
            0
        } else {
            requested.min(available)
        };
        available -= applied;
        if applied < requested {
            r.emit(
                Visibility::team(team),
                EventBody::AllocationCurtailed {
                    team: team.clone(),
                    node: node.clone(),
                    requested,
                    applied,
                },
            );
        }
        if applied > 0 {
            r.add_points(team, node, applied, Cause::Allocation, secret);
        }
    }
}

/// Adds an allocation to a team's progress, capped by its current points.
pub fn apply_rnd_allocation(
    scenario: &Scenario,
    state: &mut GameState,
    team: &TeamId,
    allocation: &BTreeMap<NodeId, u32>,
    secret: bool,
) -> Vec<GameEvent> {
    let turn = state.turn + 1;
    let mut dice = NoDice;
    let mut r = Resolver::new(scenario, state, &mut dice, turn);
    allocate(&mut r, team, allocation, secret);
    r.events
}
