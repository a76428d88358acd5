//! Per-team fog-of-war projection of the game state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ViewError;
use crate::event::GameEvent;
use crate::ids::{NodeId, ShockId, TeamId};
use crate::scenario::{Party, TeamKind};
use crate::state::{
    Concern, DeploymentRecord, GameOutcome, GameState, IntelEntry, NodeProgress, TeamState, Treaty,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Viewer {
    Facilitator,
    Team(TeamId),
}

/// What every team can see about another team.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicTeam {
    pub id: TeamId,
    pub kind: TeamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allegiance: Option<TeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<Party>,
    pub soft_power: u32,
    pub hard_power: u32,
    pub cyber_power: u32,
    pub controlled_by: Vec<TeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppp_partner: Option<TeamId>,
    /// Nodes whose completion was announced.
    pub public_completions: BTreeSet<NodeId>,
}

impl PublicTeam {
    fn of(team: &TeamState, progress: Option<&BTreeMap<NodeId, NodeProgress>>) -> Self {
        let public_completions = progress
            .into_iter()
            .flatten()
            .filter(|(_, p)| p.completed && p.public)
            .map(|(id, _)| id.clone())
            .collect();
        Self {
            id: team.id.clone(),
            kind: team.kind,
            allegiance: team.allegiance.clone(),
            party: team.party,
            soft_power: team.resources.soft_power,
            hard_power: team.resources.hard_power,
            cyber_power: team.resources.cyber_power,
            controlled_by: team.controlled_by.clone(),
            ppp_partner: team.ppp_partner.clone(),
            public_completions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnKnowledge {
    pub team: TeamState,
    pub progress: BTreeMap<NodeId, NodeProgress>,
    /// R&D points this team may allocate this turn, pooled points included.
    pub rnd_points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeView {
    pub viewer: Viewer,
    pub turn: u32,
    pub year: i32,
    pub stability: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own: Option<OwnKnowledge>,
    pub others: BTreeMap<TeamId, PublicTeam>,
    pub concerns: Vec<Concern>,
    pub treaties: Vec<Treaty>,
    pub deployments: Vec<DeploymentRecord>,
    pub shocks_drawn: Vec<ShockId>,
    pub intel: Vec<IntelEntry>,
    pub events: Vec<GameEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<GameOutcome>,
    /// The unfiltered state; facilitator only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_state: Option<GameState>,
}

impl KnowledgeView {
    pub fn own_team(&self) -> Option<&TeamId> {
        match &self.viewer {
            Viewer::Team(t) => Some(t),
            Viewer::Facilitator => None,
        }
    }

    /// Completion as known to the viewer: own progress, or announced completions.
    pub fn knows_completed(&self, team: &TeamId, node: &NodeId) -> bool {
        if let Some(state) = &self.full_state {
            return state.is_completed(team, node);
        }
        if let Some(own) = &self.own {
            if &own.team.id == team {
                return own.progress.get(node).is_some_and(|p| p.completed);
            }
        }
        self.others
            .get(team)
            .is_some_and(|t| t.public_completions.contains(node))
    }
}

/// Projects `state` and the event history onto what `viewer` may know.
pub fn knowledge_view(
    state: &GameState,
    events: &[GameEvent],
    viewer: &Viewer,
) -> Result<KnowledgeView, ViewError> {
    let base = |viewer: Viewer| KnowledgeView {
        viewer,
        turn: state.turn,
        year: state.year,
        stability: state.stability,
        own: None,
        others: BTreeMap::new(),
        concerns: state.concerns.clone(),
        treaties: state.treaties.clone(),
        deployments: state.deployments.clone(),
        shocks_drawn: state.shocks_drawn.clone(),
        intel: Vec::new(),
        events: Vec::new(),
        outcome: state.outcome.clone(),
        full_state: None,
    };
    match viewer {
        Viewer::Facilitator => {
            let mut v = base(Viewer::Facilitator);
            v.others = state
                .teams
                .values()
                .map(|t| (t.id.clone(), PublicTeam::of(t, state.progress.get(&t.id))))
                .collect();
            v.intel = state.intel.clone();
            v.events = events.to_vec();
            v.full_state = Some(state.clone());
            Ok(v)
        }
        Viewer::Team(id) => {
            let team = state
                .teams
                .get(id)
                .ok_or_else(|| ViewError::UnknownViewer(id.clone()))?;
            let mut v = base(viewer.clone());
            v.own = Some(OwnKnowledge {
                team: team.clone(),
                progress: state.progress.get(id).cloned().unwrap_or_default(),
                rnd_points: state.allocatable_points(id),
            });
            v.others = state
                .teams
                .values()
                .filter(|t| &t.id != id)
                .map(|t| (t.id.clone(), PublicTeam::of(t, state.progress.get(&t.id))))
                .collect();
            v.intel = state.intel.iter().filter(|e| &e.owner == id).cloned().collect();
            v.events = events.iter().filter(|e| e.visible_to(id)).cloned().collect();
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use crate::state::new_game;

    #[test]
    fn facilitator_sees_everything() {
        let s = Scenario::default_scenario();
        let (g, created) = new_game(&s, 42);
        let v = knowledge_view(&g, &[created.clone()], &Viewer::Facilitator).unwrap();
        assert_eq!(v.full_state.as_ref(), Some(&g));
        assert_eq!(v.events, vec![created]);
    }

    #[test]
    fn unknown_viewer_is_rejected() {
        let s = Scenario::default_scenario();
        let (g, _) = new_game(&s, 42);
        let err = knowledge_view(&g, &[], &Viewer::Team(TeamId::new("nobody"))).unwrap_err();
        assert_eq!(err, ViewError::UnknownViewer(TeamId::new("nobody")));
    }

    #[test]
    fn team_view_hides_private_resources_of_others() {
        let s = Scenario::default_scenario();
        let (g, _) = new_game(&s, 42);
        let me = s.team_ids()[0].clone();
        let v = knowledge_view(&g, &[], &Viewer::Team(me.clone())).unwrap();
        assert!(v.full_state.is_none());
        assert!(!v.others.contains_key(&me));
        assert_eq!(v.others.len(), 3);
        let json = serde_json::to_value(&v.others).unwrap();
        assert!(!json.to_string().contains("budget"));
        let again = knowledge_view(&g, &[], &Viewer::Team(me)).unwrap();
        assert_eq!(v, again);
    }
}
