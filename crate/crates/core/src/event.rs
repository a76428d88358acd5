//! Append-only game events and the fold that applies them to a state.
//!
//! The engine never mutates a [`GameState`] directly: every change is
//! expressed as an event and applied through [`apply_event`], so replaying a
//! log over a fresh game reproduces the live state exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dice::{CheckOutcome, DiceOverride, DieRoll, TwoDiceRoll};
use crate::ids::{ConcernId, NodeId, ShockId, TeamId, TreatyId};
use crate::orders::{CyberMode, PolicyAction};
use crate::rng::RngState;
use crate::scenario::{ActionType, Capability, Party, Project, ResourceKind, ShockKind};
use crate::state::{
    Concern, DeploymentRecord, GameOutcome, GameState, IntelEntry, Treaty, TreatyProposal,
    TreatyStatus,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    TeamOnly(BTreeSet<TeamId>),
    FacilitatorOnly,
}

impl Visibility {
    pub fn team(team: &TeamId) -> Self {
        Visibility::TeamOnly(BTreeSet::from([team.clone()]))
    }

    /// Public, or only for `team` when `secret` is set.
    pub fn secret_to(team: &TeamId, secret: bool) -> Self {
        if secret {
            Self::team(team)
        } else {
            Visibility::Public
        }
    }

    pub fn visible_to(&self, team: &TeamId) -> bool {
        match self {
            Visibility::Public => true,
            Visibility::TeamOnly(set) => set.contains(team),
            Visibility::FacilitatorOnly => false,
        }
    }
}

/// Position of a policy action within one turn's orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRef {
    pub team: TeamId,
    pub index: usize,
    pub secret: bool,
}

/// Why a resource, progress or stability value moved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Cause {
    Cost { action: ActionType },
    Action { action: ActionType },
    NodeEffect { node: NodeId },
    Shock { shock: ShockId },
    Allocation,
    SafetyGrant,
    LawsContract,
    Exfiltration,
    Sabotage,
    OpenSource,
    Merge,
    Blockade,
    Strike,
    Defection { treaty: TreatyId },
    Election,
}

/// Per-action resolution record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionReport {
    pub success: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckOutcome>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    GameCreated {
        seed: u64,
        scenario_digest: String,
    },
    OverrideQueued {
        dice_override: DiceOverride,
    },
    OverrideUnused {
        overrides: Vec<DiceOverride>,
    },
    ActionResolved {
        team: TeamId,
        index: usize,
        action: PolicyAction,
        report: ActionReport,
    },
    ResourcesAdjusted {
        team: TeamId,
        changes: BTreeMap<ResourceKind, i32>,
        cause: Cause,
    },
    CapabilityGained {
        team: TeamId,
        capability: Capability,
    },
    ProgressChanged {
        team: TeamId,
        node: NodeId,
        from: u32,
        to: u32,
        completed: bool,
        cause: Cause,
    },
    NodeCompleted {
        team: TeamId,
        node: NodeId,
        public: bool,
    },
    AllocationCurtailed {
        team: TeamId,
        node: NodeId,
        requested: u32,
        applied: u32,
    },
    ConcernRaised {
        concern: Concern,
    },
    ConcernMitigated {
        concern: ConcernId,
        by: TeamId,
    },
    TreatyProposed {
        by: TeamId,
        proposal: TreatyProposal,
    },
    TreatySigned {
        treaty: Treaty,
    },
    TreatyStatusChanged {
        treaty: TreatyId,
        from: TreatyStatus,
        to: TreatyStatus,
    },
    DefectionDetected {
        treaty: TreatyId,
        team: TeamId,
        roll: TwoDiceRoll,
        threshold: i32,
    },
    DefectionUndetected {
        treaty: TreatyId,
        team: TeamId,
        roll: TwoDiceRoll,
        threshold: i32,
    },
    ControlChanged {
        corp: TeamId,
        controller: TeamId,
    },
    PppFormed {
        state: TeamId,
        corp: TeamId,
    },
    RegulationImposed {
        by: TeamId,
        corps: Vec<TeamId>,
    },
    InfluenceRegistered {
        by: TeamId,
    },
    PoolDeclared {
        contributor: TeamId,
        defender: TeamId,
        amount: u32,
    },
    IntelGathered {
        entry: IntelEntry,
    },
    Attribution {
        actor: TeamId,
        target: TeamId,
        mode: CyberMode,
        margin: i32,
    },
    PressureMarkerAdded {
        by: TeamId,
    },
    BlockadeImposed {
        by: TeamId,
        teams: Vec<TeamId>,
        turns: u32,
    },
    ShockCheck {
        roll: DieRoll,
        drawn: bool,
    },
    ShockDrawn {
        shock: ShockId,
        shock_kind: ShockKind,
        injected: bool,
    },
    StabilityChanged {
        from: i32,
        to: i32,
        cause: Cause,
    },
    StabilityUpdated {
        from: i32,
        to: i32,
        concern_drain: u32,
        marker_drain: u32,
    },
    StabilityUnchanged {
        stability: i32,
    },
    ElectionHeld {
        incumbent: Party,
        modifier: i32,
        check: CheckOutcome,
        retained: bool,
    },
    PauseOffered {
        team: TeamId,
        project: Project,
    },
    PauseDeclined {
        team: TeamId,
        project: Project,
    },
    PauseAccepted {
        team: TeamId,
        project: Project,
    },
    DeploymentAborted {
        team: TeamId,
        project: Project,
        reason: String,
    },
    SafetyRolled {
        record: DeploymentRecord,
    },
    TurnAdvanced {
        turn: u32,
        year: i32,
        income: BTreeMap<TeamId, u32>,
    },
    RngCheckpoint {
        state: RngState,
        draws: u32,
    },
    GameEnded {
        outcome: GameOutcome,
    },
}

impl EventBody {
    /// The serialized `kind` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::GameCreated { .. } => "GameCreated",
            EventBody::OverrideQueued { .. } => "OverrideQueued",
            EventBody::OverrideUnused { .. } => "OverrideUnused",
            EventBody::ActionResolved { .. } => "ActionResolved",
            EventBody::ResourcesAdjusted { .. } => "ResourcesAdjusted",
            EventBody::CapabilityGained { .. } => "CapabilityGained",
            EventBody::ProgressChanged { .. } => "ProgressChanged",
            EventBody::NodeCompleted { .. } => "NodeCompleted",
            EventBody::AllocationCurtailed { .. } => "AllocationCurtailed",
            EventBody::ConcernRaised { .. } => "ConcernRaised",
            EventBody::ConcernMitigated { .. } => "ConcernMitigated",
            EventBody::TreatyProposed { .. } => "TreatyProposed",
            EventBody::TreatySigned { .. } => "TreatySigned",
            EventBody::TreatyStatusChanged { .. } => "TreatyStatusChanged",
            EventBody::DefectionDetected { .. } => "DefectionDetected",
            EventBody::DefectionUndetected { .. } => "DefectionUndetected",
            EventBody::ControlChanged { .. } => "ControlChanged",
            EventBody::PppFormed { .. } => "PppFormed",
            EventBody::RegulationImposed { .. } => "RegulationImposed",
            EventBody::InfluenceRegistered { .. } => "InfluenceRegistered",
            EventBody::PoolDeclared { .. } => "PoolDeclared",
            EventBody::IntelGathered { .. } => "IntelGathered",
            EventBody::Attribution { .. } => "Attribution",
            EventBody::PressureMarkerAdded { .. } => "PressureMarkerAdded",
            EventBody::BlockadeImposed { .. } => "BlockadeImposed",
            EventBody::ShockCheck { .. } => "ShockCheck",
            EventBody::ShockDrawn { .. } => "ShockDrawn",
            EventBody::StabilityChanged { .. } => "StabilityChanged",
            EventBody::StabilityUpdated { .. } => "StabilityUpdated",
            EventBody::StabilityUnchanged { .. } => "StabilityUnchanged",
            EventBody::ElectionHeld { .. } => "ElectionHeld",
            EventBody::PauseOffered { .. } => "PauseOffered",
            EventBody::PauseDeclined { .. } => "PauseDeclined",
            EventBody::PauseAccepted { .. } => "PauseAccepted",
            EventBody::DeploymentAborted { .. } => "DeploymentAborted",
            EventBody::SafetyRolled { .. } => "SafetyRolled",
            EventBody::TurnAdvanced { .. } => "TurnAdvanced",
            EventBody::RngCheckpoint { .. } => "RngCheckpoint",
            EventBody::GameEnded { .. } => "GameEnded",
        }
    }

    /// Generator draws consumed to produce the dice recorded in this event.
    pub fn rng_draws(&self) -> u32 {
        match self {
            EventBody::ActionResolved { report, .. } => report.checks.iter().map(|c| c.draws()).sum(),
            EventBody::DefectionDetected { roll, .. } | EventBody::DefectionUndetected { roll, .. } => roll.draws(),
            EventBody::ShockCheck { roll, .. } => roll.draws(),
            EventBody::ElectionHeld { check, .. } => check.draws(),
            EventBody::SafetyRolled { record } => record.outcome.dice.draws(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub seq: u64,
    pub turn: u32,
    pub visibility: Visibility,
    /// The policy action this event resulted from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<ActionRef>,
    #[serde(flatten)]
    pub body: EventBody,
}

impl GameEvent {
    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }

    pub fn visible_to(&self, team: &TeamId) -> bool {
        self.visibility.visible_to(team)
    }
}

/// Applies one event. Unknown references are ignored rather than panicking,
/// so a log that passed its integrity checks never aborts a replay.
pub fn apply_event(state: &mut GameState, event: &GameEvent) {
    state.event_seq = event.seq + 1;
    match &event.body {
        EventBody::GameCreated { .. }
        | EventBody::OverrideQueued { .. }
        | EventBody::OverrideUnused { .. }
        | EventBody::ActionResolved { .. }
        | EventBody::AllocationCurtailed { .. }
        | EventBody::TreatyProposed { .. }
        | EventBody::DefectionDetected { .. }
        | EventBody::DefectionUndetected { .. }
        | EventBody::Attribution { .. }
        | EventBody::ShockCheck { .. }
        | EventBody::PauseOffered { .. }
        | EventBody::PauseDeclined { .. }
        | EventBody::PauseAccepted { .. }
        | EventBody::DeploymentAborted { .. } => {}
        EventBody::ResourcesAdjusted { team, changes, .. } => {
            if let Some(t) = state.teams.get_mut(team) {
                for (&kind, &delta) in changes {
                    let slot = t.resources.get_mut(kind);
                    let next = (*slot as i64 + delta as i64).max(0);
                    *slot = if kind.is_power() {
                        next.min(state.power_cap as i64) as u32
                    } else {
                        next.min(u32::MAX as i64) as u32
                    };
                }
            }
        }
        EventBody::CapabilityGained { team, capability } => {
            if let Some(t) = state.teams.get_mut(team) {
                t.capabilities.insert(*capability);
            }
        }
        EventBody::ProgressChanged {
            team,
            node,
            to,
            completed,
            ..
        } => {
            let p = state
                .progress
                .entry(team.clone())
                .or_default()
                .entry(node.clone())
                .or_default();
            p.points = *to;
            p.completed = *completed;
        }
        EventBody::NodeCompleted { team, node, public } => {
            let p = state
                .progress
                .entry(team.clone())
                .or_default()
                .entry(node.clone())
                .or_default();
            p.ever_completed = true;
            p.public |= *public;
        }
        EventBody::ConcernRaised { concern } => state.concerns.push(concern.clone()),
        EventBody::ConcernMitigated { concern, .. } => {
            if let Some(c) = state.concerns.iter_mut().find(|c| c.id == *concern) {
                c.mitigated = true;
            }
        }
        EventBody::TreatySigned { treaty } => state.treaties.push(treaty.clone()),
        EventBody::TreatyStatusChanged { treaty, to, .. } => {
            let turn = event.turn;
            if let Some(t) = state.treaties.iter_mut().find(|t| t.id == *treaty) {
                t.status = *to;
                t.contested_turn = (*to == TreatyStatus::Contested).then_some(turn);
            }
        }
        EventBody::ControlChanged { corp, controller } => {
            if let Some(t) = state.teams.get_mut(corp) {
                if !t.controlled_by.contains(controller) {
                    t.controlled_by.push(controller.clone());
                }
            }
        }
        EventBody::PppFormed { state: st, corp } => {
            if let Some(t) = state.teams.get_mut(st) {
                t.ppp_partner = Some(corp.clone());
            }
            if let Some(t) = state.teams.get_mut(corp) {
                t.ppp_partner = Some(st.clone());
            }
        }
        EventBody::RegulationImposed { corps, .. } => {
            for c in corps {
                if let Some(t) = state.teams.get_mut(c) {
                    t.pending_rnd_penalty += 1;
                }
            }
        }
        EventBody::InfluenceRegistered { .. } => state.election_interference = true,
        EventBody::PoolDeclared { defender, amount, .. } => {
            *state.pooled_defense.entry(defender.clone()).or_default() += amount;
        }
        EventBody::IntelGathered { entry } => state.intel.push(entry.clone()),
        EventBody::PressureMarkerAdded { .. } => state.pressure_markers += 1,
        EventBody::BlockadeImposed { teams, turns, .. } => {
            for id in teams {
                if let Some(t) = state.teams.get_mut(id) {
                    t.blockade_turns = t.blockade_turns.max(*turns);
                }
            }
        }
        EventBody::ShockDrawn { shock, .. } => state.shocks_drawn.push(shock.clone()),
        EventBody::StabilityChanged { to, .. } => state.stability = (*to).clamp(0, 10),
        EventBody::StabilityUpdated { to, .. } => {
            state.stability = (*to).clamp(0, 10);
            state.pressure_markers = 0;
        }
        EventBody::StabilityUnchanged { .. } => state.pressure_markers = 0,
        EventBody::ElectionHeld { retained, .. } => {
            if !retained {
                for t in state.teams.values_mut() {
                    if let Some(p) = t.party {
                        t.party = Some(p.other());
                    }
                }
            }
        }
        EventBody::SafetyRolled { record } => state.deployments.push(record.clone()),
        EventBody::TurnAdvanced { turn, year, income } => {
            state.turn = *turn;
            state.year = *year;
            for (id, t) in state.teams.iter_mut() {
                t.resources.budget += income.get(id).copied().unwrap_or(0);
                t.blockade_turns = t.blockade_turns.saturating_sub(1);
                t.rnd_penalty = std::mem::take(&mut t.pending_rnd_penalty);
            }
            state.pooled_defense.clear();
            state.election_interference = false;
            state.pressure_markers = 0;
        }
        EventBody::RngCheckpoint { state: rng, .. } => state.rng = rng.clone(),
        EventBody::GameEnded { outcome } => state.outcome = Some(outcome.clone()),
    }
}

/// Checks that every turn's `RngCheckpoint` draw count equals the draws
/// implied by the dice recorded in that turn's events. Returns the first
/// offending checkpoint sequence number.
pub fn verify_draw_counts(events: &[GameEvent]) -> Result<(), u64> {
    let mut pending = 0u32;
    for e in events {
        match &e.body {
            EventBody::RngCheckpoint { draws, .. } => {
                if *draws != pending {
                    return Err(e.seq);
                }
                pending = 0;
            }
            body => pending += body.rng_draws(),
        }
    }
    Ok(())
}
