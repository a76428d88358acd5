use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dice::TwoDiceRoll;
use crate::event::{EventBody, GameEvent, Visibility};
use crate::ids::{ConcernId, NodeId, ShockId, TeamId, TreatyId};
use crate::rng::RngState;
use crate::scenario::{
    Capability, Lane, NodeKind, Party, Project, ResourceKind, ResourcePool, Scenario, TeamKind,
    TechNode,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamState {
    pub id: TeamId,
    pub kind: TeamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allegiance: Option<TeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<Party>,
    pub resources: ResourcePool,
    /// Controlling State after nationalisation.
    #[serde(default)]
    pub controlled_by: Vec<TeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppp_partner: Option<TeamId>,
    /// Turns of halved compute left from a blockade.
    #[serde(default)]
    pub blockade_turns: u32,
    /// R&D points withheld this turn by regulation.
    #[serde(default)]
    pub rnd_penalty: u32,
    /// Penalty that becomes active next turn.
    #[serde(default)]
    pub pending_rnd_penalty: u32,
    #[serde(default)]
    pub capabilities: BTreeSet<Capability>,
}

impl TeamState {
    pub fn effective_compute(&self) -> u32 {
        if self.blockade_turns > 0 {
            self.resources.compute / 2
        } else {
            self.resources.compute
        }
    }

    pub fn is_nationalised(&self) -> bool {
        !self.controlled_by.is_empty()
    }
}

/// `min(floor((talent + data) / 2), compute)`, using blockade-reduced compute.
pub fn usable_rnd_points(team: &TeamState) -> u32 {
    ((team.resources.talent + team.resources.data) / 2).min(team.effective_compute())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeProgress {
    pub points: u32,
    pub completed: bool,
    /// Completion was announced publicly.
    #[serde(default)]
    pub public: bool,
    /// Completion side effects (concern, effects) already happened once.
    #[serde(default)]
    pub ever_completed: bool,
}

/// Points per (team, node).
pub type TechProgress = BTreeMap<TeamId, BTreeMap<NodeId, NodeProgress>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concern {
    pub id: ConcernId,
    pub source_node: NodeId,
    pub owner: TeamId,
    pub severity: u32,
    pub mitigated: bool,
    pub raised_turn: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Term {
    /// No capability research in `lane` above `max_level`.
    RndCap { lane: Lane, max_level: u8 },
    /// Minimum completed Safety nodes (bloc-shared) before any Deployment work.
    SafetyFloor { min_safety: u32 },
    /// No strikes, blockades or cyber operations against fellow parties.
    AutonomyGuarantee,
    /// Deployment needs the consent of every other party.
    DeploymentConsent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreatyStatus {
    Active,
    Contested,
    Dissolved,
}

impl TreatyStatus {
    pub fn can_become(self, next: TreatyStatus) -> bool {
        use TreatyStatus::*;
        matches!(
            (self, next),
            (Active, Contested) | (Contested, Active) | (Contested, Dissolved) | (Active, Dissolved)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreatyProposal {
    pub parties: BTreeSet<TeamId>,
    pub terms: Vec<Term>,
    pub verification_rigor: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Treaty {
    pub id: TreatyId,
    pub parties: BTreeSet<TeamId>,
    pub terms: Vec<Term>,
    pub verification_rigor: u8,
    pub status: TreatyStatus,
    pub signed_turn: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contested_turn: Option<u32>,
}

impl Treaty {
    pub fn safety_floor(&self) -> Option<u32> {
        self.terms.iter().find_map(|t| match t {
            Term::SafetyFloor { min_safety } => Some(*min_safety),
            _ => None,
        })
    }

    pub fn has_term(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelEntry {
    pub owner: TeamId,
    pub target: TeamId,
    pub turn: u32,
    pub nodes: BTreeMap<NodeId, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyOutcome {
    pub team: TeamId,
    pub threshold: i32,
    pub roll: i32,
    pub dice: TwoDiceRoll,
    pub aligned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRecord {
    pub turn: u32,
    pub project: Project,
    /// Safety score as completed / total Safety nodes.
    pub safety_completed: u32,
    pub safety_total: u32,
    pub outcome: SafetyOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum OutcomeKind {
    SafeUnipolar { team: TeamId },
    SafeMultipolar { teams: Vec<TeamId> },
    MisalignedCatastrophe { teams: Vec<TeamId> },
    Collapse,
    Timeout,
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::SafeUnipolar { .. } => "SafeUnipolar",
            OutcomeKind::SafeMultipolar { .. } => "SafeMultipolar",
            OutcomeKind::MisalignedCatastrophe { .. } => "MisalignedCatastrophe",
            OutcomeKind::Collapse => "Collapse",
            OutcomeKind::Timeout => "Timeout",
        }
    }

    pub fn is_collective_loss(&self) -> bool {
        matches!(
            self,
            OutcomeKind::MisalignedCatastrophe { .. } | OutcomeKind::Collapse
        )
    }

    pub fn is_safe(&self) -> bool {
        matches!(
            self,
            OutcomeKind::SafeUnipolar { .. } | OutcomeKind::SafeMultipolar { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub kind: OutcomeKind,
    pub turn: u32,
    pub team_scores: BTreeMap<TeamId, i32>,
    pub collective_loss: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub turn: u32,
    pub year: i32,
    pub stability: i32,
    pub teams: BTreeMap<TeamId, TeamState>,
    pub progress: TechProgress,
    pub concerns: Vec<Concern>,
    pub treaties: Vec<Treaty>,
    pub pooled_defense: BTreeMap<TeamId, u32>,
    /// Adversarial-pressure markers accumulated this turn.
    pub pressure_markers: u32,
    pub election_interference: bool,
    pub shocks_drawn: Vec<ShockId>,
    pub intel: Vec<IntelEntry>,
    pub deployments: Vec<DeploymentRecord>,
    pub rng: RngState,
    /// Upper bound for every power attribute.
    pub power_cap: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<GameOutcome>,
    /// Sequence number of the next event.
    pub event_seq: u64,
}

/// Fresh game: turn 0, starting stability, zero progress.
pub fn new_game(scenario: &Scenario, seed: u64) -> (GameState, GameEvent) {
    let teams = scenario
        .teams
        .iter()
        .map(|spec| {
            let state = TeamState {
                id: spec.id.clone(),
                kind: spec.kind,
                allegiance: spec.allegiance.clone(),
                party: spec.party,
                resources: spec.resources.clone(),
                controlled_by: Vec::new(),
                ppp_partner: None,
                blockade_turns: 0,
                rnd_penalty: 0,
                pending_rnd_penalty: 0,
                capabilities: BTreeSet::new(),
            };
            (spec.id.clone(), state)
        })
        .collect();
    let progress = scenario
        .teams
        .iter()
        .map(|t| (t.id.clone(), BTreeMap::new()))
        .collect();
    let state = GameState {
        turn: 0,
        year: scenario.constants.start_year,
        stability: scenario.constants.start_stability,
        teams,
        progress,
        concerns: Vec::new(),
        treaties: Vec::new(),
        pooled_defense: BTreeMap::new(),
        pressure_markers: 0,
        election_interference: false,
        shocks_drawn: Vec::new(),
        intel: Vec::new(),
        deployments: Vec::new(),
        rng: RngState::from_seed(seed),
        power_cap: scenario.constants.power_cap,
        outcome: None,
        event_seq: 1,
    };
    let created = GameEvent {
        seq: 0,
        turn: 0,
        visibility: Visibility::Public,
        origin: None,
        body: EventBody::GameCreated {
            seed,
            scenario_digest: scenario.digest(),
        },
    };
    (state, created)
}

impl GameState {
    pub fn team(&self, id: &TeamId) -> Option<&TeamState> {
        self.teams.get(id)
    }

    pub fn node_progress(&self, team: &TeamId, node: &NodeId) -> Option<&NodeProgress> {
        self.progress.get(team).and_then(|m| m.get(node))
    }

    pub fn points(&self, team: &TeamId, node: &NodeId) -> u32 {
        self.node_progress(team, node).map_or(0, |p| p.points)
    }

    pub fn is_completed(&self, team: &TeamId, node: &NodeId) -> bool {
        self.node_progress(team, node).is_some_and(|p| p.completed)
    }

    pub fn is_unlocked(&self, team: &TeamId, node: &TechNode) -> bool {
        node.prereqs.iter().all(|p| self.is_completed(team, p))
    }

    /// Nodes the team may allocate R&D to right now.
    pub fn allocatable_nodes<'s>(
        &self,
        scenario: &'s Scenario,
        team: &TeamId,
    ) -> Vec<&'s TechNode> {
        scenario
            .tech_tree
            .iter()
            .filter(|n| !self.is_completed(team, &n.id) && self.is_unlocked(team, n))
            .collect()
    }

    /// Highest completed Basic level in `lane` (0 when none).
    pub fn basic_level(&self, scenario: &Scenario, team: &TeamId, lane: Lane) -> u8 {
        (1..=crate::scenario::MAX_LEVEL)
            .rev()
            .find(|&l| {
                scenario
                    .basic_node(lane, l)
                    .is_some_and(|n| self.is_completed(team, &n.id))
            })
            .unwrap_or(0)
    }

    pub fn max_basic_level(&self, scenario: &Scenario, team: &TeamId) -> u8 {
        Lane::ALL
            .iter()
            .map(|&l| self.basic_level(scenario, team, l))
            .max()
            .unwrap_or(0)
    }

    /// R&D points the team can allocate this turn, including any pool it hosts.
    pub fn allocatable_points(&self, team: &TeamId) -> u32 {
        let Some(t) = self.teams.get(team) else {
            return 0;
        };
        if t.is_nationalised() {
            return 0;
        }
        if t.kind == TeamKind::State && t.ppp_partner.is_some() {
            return 0;
        }
        let mut total = usable_rnd_points(t).saturating_sub(t.rnd_penalty);
        for other in self.teams.values() {
            if other.id == *team {
                continue;
            }
            let contributes = other.controlled_by.contains(team)
                || (other.kind == TeamKind::State
                    && t.kind == TeamKind::Corporation
                    && other.ppp_partner.as_ref() == Some(team)
                    && t.ppp_partner.as_ref() == Some(&other.id));
            if contributes {
                total += usable_rnd_points(other).saturating_sub(other.rnd_penalty);
            }
        }
        total
    }

    /// Safety nodes completed by any member of the team's bloc.
    pub fn bloc_safety_completed(&self, scenario: &Scenario, team: &TeamId) -> u32 {
        let Some(leader) = scenario.bloc_leader(team) else {
            return 0;
        };
        let members = scenario.bloc_members(leader);
        scenario
            .tech_tree
            .iter()
            .filter(|n| n.kind == NodeKind::Safety)
            .filter(|n| members.iter().any(|m| self.is_completed(m, &n.id)))
            .count() as u32
    }

    pub fn unmitigated_concerns(&self) -> impl Iterator<Item = &Concern> {
        self.concerns.iter().filter(|c| !c.mitigated)
    }

    pub fn concern(&self, id: ConcernId) -> Option<&Concern> {
        self.concerns.iter().find(|c| c.id == id)
    }

    pub fn treaty(&self, id: TreatyId) -> Option<&Treaty> {
        self.treaties.iter().find(|t| t.id == id)
    }

    pub fn active_treaties_of<'a>(&'a self, team: &'a TeamId) -> impl Iterator<Item = &'a Treaty> {
        self.treaties
            .iter()
            .filter(move |t| t.status == TreatyStatus::Active && t.parties.contains(team))
    }

    pub fn resource(&self, team: &TeamId, kind: ResourceKind) -> u32 {
        self.teams.get(team).map_or(0, |t| t.resources.get(kind))
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn next_concern_id(&self) -> ConcernId {
        self.concerns.len() as ConcernId
    }

    pub fn next_treaty_id(&self) -> TreatyId {
        self.treaties.len() as TreatyId
    }
}
