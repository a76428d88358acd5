//! Turn orders and their validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{ConcernId, NodeId, TeamId, TreatyId};
use crate::scenario::{ActionType, Capability, NodeKind, Project, Scenario, TeamKind, TechNode};
use crate::state::{GameState, Term, TreatyProposal, TreatyStatus};

pub const MAX_POLICY_ACTIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CyberMode {
    Monitor,
    Exfiltrate,
    Sabotage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ActionKind {
    InvestTalent { amount: u32 },
    InvestData { amount: u32 },
    InvestCompute { amount: u32 },
    RecruitTalent,
    PoachTalent { target: TeamId },
    PropagandaCampaign,
    BuildMilitary,
    BuildCyber,
    CyberOp {
        target: TeamId,
        mode: CyberMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node: Option<NodeId>,
    },
    PoolDefense { defender: TeamId, amount: u32 },
    Blockade { supply: String },
    Strike { target: TeamId },
    InfluenceElection,
    Nationalise { corp: TeamId },
    FormPpp { corp: TeamId },
    Mitigate { concern: ConcernId },
    Regulate,
    ProposeTreaty { proposal: TreatyProposal },
    SignTreaty { proposal: TreatyProposal },
    RatifyTreaty { treaty: TreatyId },
    FundSafety { node: NodeId, amount: u32 },
    DevelopLaws { corp: TeamId, payment: u32 },
    OpenSource { node: NodeId },
}

impl ActionKind {
    pub fn action_type(&self) -> ActionType {
        match self {
            ActionKind::InvestTalent { .. } => ActionType::InvestTalent,
            ActionKind::InvestData { .. } => ActionType::InvestData,
            ActionKind::InvestCompute { .. } => ActionType::InvestCompute,
            ActionKind::RecruitTalent => ActionType::RecruitTalent,
            ActionKind::PoachTalent { .. } => ActionType::PoachTalent,
            ActionKind::PropagandaCampaign => ActionType::PropagandaCampaign,
            ActionKind::BuildMilitary => ActionType::BuildMilitary,
            ActionKind::BuildCyber => ActionType::BuildCyber,
            ActionKind::CyberOp { .. } => ActionType::CyberOp,
            ActionKind::PoolDefense { .. } => ActionType::PoolDefense,
            ActionKind::Blockade { .. } => ActionType::Blockade,
            ActionKind::Strike { .. } => ActionType::Strike,
            ActionKind::InfluenceElection => ActionType::InfluenceElection,
            ActionKind::Nationalise { .. } => ActionType::Nationalise,
            ActionKind::FormPpp { .. } => ActionType::FormPpp,
            ActionKind::Mitigate { .. } => ActionType::Mitigate,
            ActionKind::Regulate => ActionType::Regulate,
            ActionKind::ProposeTreaty { .. } => ActionType::ProposeTreaty,
            ActionKind::SignTreaty { .. } => ActionType::SignTreaty,
            ActionKind::RatifyTreaty { .. } => ActionType::RatifyTreaty,
            ActionKind::FundSafety { .. } => ActionType::FundSafety,
            ActionKind::DevelopLaws { .. } => ActionType::DevelopLaws,
            ActionKind::OpenSource { .. } => ActionType::OpenSource,
        }
    }

    /// Multiplier applied to the catalog's per-unit budget cost.
    pub fn units(&self) -> u32 {
        match self {
            ActionKind::InvestTalent { amount }
            | ActionKind::InvestData { amount }
            | ActionKind::InvestCompute { amount }
            | ActionKind::FundSafety { amount, .. } => *amount,
            ActionKind::DevelopLaws { payment, .. } => *payment,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionVisibility {
    #[default]
    Public,
    Secret,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyAction {
    pub kind: ActionKind,
    #[serde(default)]
    pub visibility: ActionVisibility,
}

impl PolicyAction {
    pub fn public(kind: ActionKind) -> Self {
        Self {
            kind,
            visibility: ActionVisibility::Public,
        }
    }

    pub fn secret(kind: ActionKind) -> Self {
        Self {
            kind,
            visibility: ActionVisibility::Secret,
        }
    }

    pub fn is_secret(&self) -> bool {
        self.visibility == ActionVisibility::Secret
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauseAnswer {
    Decline,
    Accept,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeployOrder {
    pub project: Project,
    /// Answer to the pause offer made before the safety roll.
    #[serde(default)]
    pub pause: Option<PauseAnswer>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreatyStance {
    #[default]
    Comply,
    Defect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnOrders {
    pub team: TeamId,
    /// Turn the orders were written for (`GameState::turn` at submission).
    pub turn: u32,
    #[serde(default)]
    pub actions: Vec<PolicyAction>,
    #[serde(default)]
    pub rnd_allocation: BTreeMap<NodeId, u32>,
    #[serde(default)]
    pub rnd_secret: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deploy: Option<DeployOrder>,
    /// Hidden comply/defect bit per treaty; absent means comply.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub treaty_stance: BTreeMap<TreatyId, TreatyStance>,
    /// States this corporation agrees to form a public-private partnership with.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub ppp_consent: BTreeSet<TeamId>,
    /// Teams whose deployment this team consents to this turn.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub deploy_consent: BTreeSet<TeamId>,
}

impl TurnOrders {
    pub fn empty(team: TeamId, turn: u32) -> Self {
        Self {
            team,
            turn,
            actions: Vec::new(),
            rnd_allocation: BTreeMap::new(),
            rnd_secret: false,
            deploy: None,
            treaty_stance: BTreeMap::new(),
            ppp_consent: BTreeSet::new(),
            deploy_consent: BTreeSet::new(),
        }
    }

    pub fn stance(&self, treaty: TreatyId) -> TreatyStance {
        self.treaty_stance.get(&treaty).copied().unwrap_or_default()
    }

    pub fn total_allocation(&self) -> u32 {
        self.rnd_allocation.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    GameOver,
    UnknownTeam,
    StaleTurn,
    TooManyActions,
    OverAllocation,
    UnknownNode,
    LockedNode,
    CompletedNode,
    ControlledRnd,
    InsufficientResources,
    NotAState,
    NotSecretable,
    InvalidTarget,
    InvalidParameter,
    WrongAllegiance,
    AlreadyControlled,
    UnknownConcern,
    UnknownTreaty,
    TreatyTerm,
    DeploymentPrerequisites,
    PauseNotAnswered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Lists every rule the orders break against the current state. An empty
/// result means the orders can be committed.
pub fn validate_orders(scenario: &Scenario, state: &GameState, orders: &TurnOrders) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    Validator {
        scenario,
        state,
        orders,
        out: &mut v,
    }
    .run();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

struct Validator<'a> {
    scenario: &'a Scenario,
    state: &'a GameState,
    orders: &'a TurnOrders,
    out: &'a mut Vec<Violation>,
}

impl Validator<'_> {
    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation::new(code, path, message));
    }

    fn run(&mut self) {
        if self.state.is_over() {
            self.push(ViolationCode::GameOver, "", "game over");
            return;
        }
        let team_id = &self.orders.team;
        let Some(team) = self.state.team(team_id) else {
            self.push(ViolationCode::UnknownTeam, "team", format!("unknown team `{team_id}`"));
            return;
        };
        if self.orders.turn != self.state.turn {
            self.push(
                ViolationCode::StaleTurn,
                "turn",
                format!(
                    "orders are for turn {} but the game is at turn {}",
                    self.orders.turn, self.state.turn
                ),
            );
        }
        if self.orders.actions.len() > MAX_POLICY_ACTIONS {
            self.push(
                ViolationCode::TooManyActions,
                "actions",
                format!("max 2 policy actions (got {})", self.orders.actions.len()),
            );
        }
        self.check_allocation(team.kind);
        self.check_costs();
        for (i, action) in self.orders.actions.iter().enumerate() {
            self.check_action(i, action);
        }
        self.check_deploy();
        self.check_treaty_terms();
    }

    fn check_allocation(&mut self, kind: TeamKind) {
        let team = &self.orders.team;
        let available = self.state.allocatable_points(team);
        let total = self.orders.total_allocation();
        if total > available {
            self.push(
                ViolationCode::OverAllocation,
                "rnd_allocation",
                format!("over-allocation: {total} points requested, {available} usable"),
            );
        }
        let t = &self.state.teams[team];
        if total > 0 && (t.is_nationalised() || (kind == TeamKind::State && t.ppp_partner.is_some())) {
            self.push(
                ViolationCode::ControlledRnd,
                "rnd_allocation",
                "R&D of this team is pooled under another team",
            );
        }
        for (node_id, &amount) in &self.orders.rnd_allocation {
            let path = format!("rnd_allocation.{node_id}");
            let Some(node) = self.scenario.node(node_id) else {
                self.push(ViolationCode::UnknownNode, path, format!("unknown node `{node_id}`"));
                continue;
            };
            if amount == 0 {
                continue;
            }
            if self.state.is_completed(team, node_id) {
                self.push(ViolationCode::CompletedNode, path, format!("node `{node_id}` already completed"));
            } else if !self.state.is_unlocked(team, node) {
                self.push(
                    ViolationCode::LockedNode,
                    path,
                    format!("locked node `{node_id}`: prerequisites incomplete"),
                );
            }
        }
    }

    fn check_costs(&mut self) {
        let team = &self.state.teams[&self.orders.team];
        let (mut budget, mut soft, mut hard) = (0u32, 0u32, 0u32);
        for a in &self.orders.actions {
            let spec = self.scenario.action(a.kind.action_type());
            budget += spec.budget_cost * a.kind.units();
            soft += spec.soft_cost;
            hard += spec.hard_cost;
        }
        let r = &team.resources;
        if budget > r.budget {
            self.push(
                ViolationCode::InsufficientResources,
                "actions",
                format!("actions cost {budget} budget, {} available", r.budget),
            );
        }
        if soft > r.soft_power {
            self.push(
                ViolationCode::InsufficientResources,
                "actions",
                format!("actions cost {soft} soft power, {} available", r.soft_power),
            );
        }
        if hard > r.hard_power {
            self.push(
                ViolationCode::InsufficientResources,
                "actions",
                format!("actions cost {hard} hard power, {} available", r.hard_power),
            );
        }
    }

    fn is_team(&self, id: &TeamId) -> bool {
        self.state.teams.contains_key(id)
    }

    fn check_action(&mut self, i: usize, action: &PolicyAction) {
        let path = format!("actions[{i}]");
        let actor_id = self.orders.team.clone();
        let actor = &self.state.teams[&actor_id];
        let spec = self.scenario.action(action.kind.action_type());
        if spec.state_only && actor.kind != TeamKind::State {
            self.push(ViolationCode::NotAState, &path, format!("{:?} is limited to States", spec.action));
        }
        if action.is_secret() && !spec.secret_allowed {
            self.push(
                ViolationCode::NotSecretable,
                &path,
                format!("{:?} cannot be taken in secret", spec.action),
            );
        }
        match &action.kind {
            ActionKind::InvestTalent { amount }
            | ActionKind::InvestData { amount }
            | ActionKind::InvestCompute { amount } => {
                if *amount == 0 {
                    self.push(ViolationCode::InvalidParameter, &path, "amount must be positive");
                }
            }
            ActionKind::PoachTalent { target } | ActionKind::Strike { target } => {
                self.check_target(&path, target);
            }
            ActionKind::CyberOp { target, mode, node } => {
                self.check_target(&path, target);
                if actor.resources.cyber_power == 0 {
                    self.push(ViolationCode::InsufficientResources, &path, "cyber operation needs cyber power");
                }
                match node {
                    Some(n) if self.scenario.node(n).is_none() => {
                        self.push(ViolationCode::UnknownNode, &path, format!("unknown node `{n}`"));
                    }
                    None if *mode != CyberMode::Monitor => {
                        self.push(ViolationCode::InvalidParameter, &path, "exfiltration and sabotage need a node");
                    }
                    _ => {}
                }
            }
            ActionKind::PoolDefense { defender, amount } => {
                self.check_target(&path, defender);
                if *amount == 0 || *amount > actor.resources.cyber_power {
                    self.push(
                        ViolationCode::InvalidParameter,
                        &path,
                        "pooled amount must be positive and within own cyber power",
                    );
                }
            }
            ActionKind::Blockade { supply } => {
                if !self.scenario.supply_chokepoints.contains(supply) {
                    self.push(ViolationCode::InvalidTarget, &path, format!("unknown supply `{supply}`"));
                }
            }
            ActionKind::InfluenceElection => {
                let holder = self.scenario.election_state().map(|s| s.id.clone());
                if let Some(holder) = holder {
                    if self.scenario.same_bloc(&holder, &actor_id) {
                        self.push(ViolationCode::InvalidTarget, &path, "only foreign teams can interfere");
                    }
                }
            }
            ActionKind::Nationalise { corp } | ActionKind::FormPpp { corp } => {
                self.check_corp_of_actor(&path, corp);
                if let Some(c) = self.state.team(corp) {
                    if c.is_nationalised() || c.ppp_partner.is_some() {
                        self.push(ViolationCode::AlreadyControlled, &path, format!("`{corp}` is already controlled"));
                    }
                }
                if actor.ppp_partner.is_some() {
                    self.push(ViolationCode::AlreadyControlled, &path, "actor already in a partnership");
                }
            }
            ActionKind::DevelopLaws { corp, payment } => {
                self.check_corp_of_actor(&path, corp);
                if *payment == 0 {
                    self.push(ViolationCode::InvalidParameter, &path, "payment must be positive");
                }
                match self.scenario.node_with_capability(Capability::AutonomousWeaponSystems) {
                    Some(node) => {
                        if self.state.is_completed(corp, &node.id) || !self.state.is_unlocked(corp, node) {
                            self.push(
                                ViolationCode::LockedNode,
                                &path,
                                "corporation cannot research autonomous weapons now",
                            );
                        }
                    }
                    None => self.push(ViolationCode::UnknownNode, &path, "scenario has no autonomous weapons node"),
                }
            }
            ActionKind::Mitigate { concern } => match self.state.concern(*concern) {
                None => self.push(ViolationCode::UnknownConcern, &path, format!("unknown concern {concern}")),
                Some(c) if c.mitigated => {
                    self.push(ViolationCode::UnknownConcern, &path, format!("concern {concern} already mitigated"))
                }
                _ => {}
            },
            ActionKind::ProposeTreaty { proposal } | ActionKind::SignTreaty { proposal } => {
                if proposal.parties.len() < 2 || !proposal.parties.iter().all(|p| self.is_team(p)) {
                    self.push(ViolationCode::InvalidParameter, &path, "treaty needs at least two known parties");
                }
                if !proposal.parties.contains(&actor_id) {
                    self.push(ViolationCode::InvalidParameter, &path, "proposer must be a party");
                }
                if proposal.verification_rigor > 5 {
                    self.push(ViolationCode::InvalidParameter, &path, "verification rigor is 0..=5");
                }
            }
            ActionKind::RatifyTreaty { treaty } => match self.state.treaty(*treaty) {
                Some(t) if t.parties.contains(&actor_id) && t.status == TreatyStatus::Contested => {}
                Some(_) => self.push(ViolationCode::UnknownTreaty, &path, "treaty is not contested or actor is not a party"),
                None => self.push(ViolationCode::UnknownTreaty, &path, format!("unknown treaty {treaty}")),
            },
            ActionKind::FundSafety { node, amount } => {
                if *amount == 0 {
                    self.push(ViolationCode::InvalidParameter, &path, "amount must be positive");
                }
                match self.scenario.node(node) {
                    Some(n) if n.kind == NodeKind::Safety => {
                        if self.state.is_completed(&actor_id, node) {
                            self.push(ViolationCode::CompletedNode, &path, format!("node `{node}` already completed"));
                        } else if !self.state.is_unlocked(&actor_id, n) {
                            self.push(ViolationCode::LockedNode, &path, format!("locked node `{node}`"));
                        }
                    }
                    Some(_) => self.push(ViolationCode::InvalidParameter, &path, "safety grants fund Safety nodes only"),
                    None => self.push(ViolationCode::UnknownNode, &path, format!("unknown node `{node}`")),
                }
            }
            ActionKind::OpenSource { node } => match self.scenario.node(node) {
                Some(n) if n.kind == NodeKind::Basic && self.state.is_completed(&actor_id, node) => {}
                _ => self.push(
                    ViolationCode::InvalidParameter,
                    &path,
                    "only a completed Basic node can be open-sourced",
                ),
            },
            ActionKind::RecruitTalent
            | ActionKind::PropagandaCampaign
            | ActionKind::BuildMilitary
            | ActionKind::BuildCyber
            | ActionKind::Regulate => {}
        }
    }

    fn check_target(&mut self, path: &str, target: &TeamId) {
        if !self.is_team(target) {
            self.push(ViolationCode::InvalidTarget, path, format!("unknown team `{target}`"));
        } else if *target == self.orders.team {
            self.push(ViolationCode::InvalidTarget, path, "target must be another team");
        }
    }

    fn check_corp_of_actor(&mut self, path: &str, corp: &TeamId) {
        match self.scenario.team(corp) {
            Some(c) if c.kind == TeamKind::Corporation => {
                if c.allegiance.as_ref() != Some(&self.orders.team) {
                    self.push(
                        ViolationCode::WrongAllegiance,
                        path,
                        format!("`{corp}` does not share the actor's allegiance"),
                    );
                }
            }
            _ => self.push(ViolationCode::InvalidTarget, path, format!("`{corp}` is not a corporation")),
        }
    }

    fn check_deploy(&mut self) {
        let Some(deploy) = &self.orders.deploy else {
            return;
        };
        let team = &self.orders.team;
        if deploy.pause.is_none() {
            self.push(
                ViolationCode::PauseNotAnswered,
                "deploy.pause",
                "the pause offer must be answered explicitly",
            );
        }
        let t = &self.state.teams[team];
        if t.is_nationalised() || (t.kind == TeamKind::State && t.ppp_partner.is_some()) {
            self.push(
                ViolationCode::DeploymentPrerequisites,
                "deploy",
                "deployment decision rests with another team",
            );
            return;
        }
        if !deployment_ready(self.scenario, self.state, team, deploy.project, &self.orders.rnd_allocation) {
            self.push(
                ViolationCode::DeploymentPrerequisites,
                "deploy.project",
                format!("prerequisites for {:?} unmet", deploy.project),
            );
        }
    }

    fn check_treaty_terms(&mut self) {
        let team = self.orders.team.clone();
        let treaties: Vec<_> = self.state.active_treaties_of(&team).cloned().collect();
        for treaty in treaties {
            if self.orders.stance(treaty.id) == TreatyStance::Defect {
                continue;
            }
            let path = format!("treaty_stance.{}", treaty.id);
            for term in &treaty.terms {
                for problem in term_breaches(self.scenario, self.state, &team, &treaty.parties, term, self.orders) {
                    self.push(ViolationCode::TreatyTerm, &path, format!("treaty {}: {problem}", treaty.id));
                }
            }
        }
    }
}

/// Whether the team can deploy `project` at the end of this turn, given the
/// R&D it is putting in this turn.
pub fn deployment_ready(
    scenario: &Scenario,
    state: &GameState,
    team: &TeamId,
    project: Project,
    allocation: &BTreeMap<NodeId, u32>,
) -> bool {
    let done_by_turn_end = |node: &TechNode| {
        state.is_completed(team, &node.id)
            || (state.is_unlocked(team, node)
                && state.points(team, &node.id) + allocation.get(&node.id).copied().unwrap_or(0) >= node.cost)
    };
    let top_basic = crate::scenario::Lane::ALL.iter().any(|&lane| {
        scenario
            .basic_node(lane, crate::scenario::MAX_LEVEL)
            .is_some_and(|b| done_by_turn_end(b))
    });
    top_basic && scenario.deployment_node(project).is_some_and(|n| done_by_turn_end(n))
}

/// Human-readable breaches of one treaty term by `orders`.
pub fn term_breaches(
    scenario: &Scenario,
    state: &GameState,
    team: &TeamId,
    parties: &BTreeSet<TeamId>,
    term: &Term,
    orders: &TurnOrders,
) -> Vec<String> {
    let mut out = Vec::new();
    match term {
        Term::RndCap { lane, max_level } => {
            for (node_id, &amount) in &orders.rnd_allocation {
                if amount == 0 {
                    continue;
                }
                if let Some(n) = scenario.node(node_id) {
                    if n.lane == *lane && n.level > *max_level && n.kind != NodeKind::Safety {
                        out.push(format!("R&D cap: {lane:?} research above level {max_level}"));
                    }
                }
            }
        }
        Term::SafetyFloor { min_safety } => {
            let have = state.bloc_safety_completed(scenario, team);
            if have < *min_safety {
                let deploy_work = orders.rnd_allocation.iter().any(|(id, &amt)| {
                    amt > 0 && scenario.node(id).is_some_and(|n| n.kind == NodeKind::Deployment)
                });
                if deploy_work || orders.deploy.is_some() {
                    out.push(format!("safety floor: {have} of {min_safety} Safety nodes before deployment work"));
                }
            }
        }
        Term::AutonomyGuarantee => {
            for a in &orders.actions {
                let hostile = match &a.kind {
                    ActionKind::Strike { target } | ActionKind::CyberOp { target, .. } => {
                        parties.contains(target) && target != team
                    }
                    ActionKind::Blockade { .. } => scenario
                        .teams
                        .iter()
                        .any(|t| t.import_dependent && parties.contains(&t.id) && &t.id != team),
                    _ => false,
                };
                if hostile {
                    out.push("autonomy guarantee: hostile action against a party".to_owned());
                }
            }
        }
        // Consent is only known once every party's orders are revealed.
        Term::DeploymentConsent => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::new_game;

    fn setup() -> (Scenario, GameState) {
        let s = Scenario::default_scenario();
        let (g, _) = new_game(&s, 42);
        (s, g)
    }

    fn corp(s: &Scenario) -> TeamId {
        s.teams.iter().find(|t| t.kind == TeamKind::Corporation).unwrap().id.clone()
    }

    fn codes(r: Result<(), Vec<Violation>>) -> Vec<ViolationCode> {
        r.err().unwrap_or_default().into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn empty_orders_are_valid() {
        let (s, g) = setup();
        for t in s.team_ids() {
            assert_eq!(validate_orders(&s, &g, &TurnOrders::empty(t, 0)), Ok(()));
        }
    }

    #[test]
    fn three_actions_violate_attention_limit() {
        let (s, g) = setup();
        let mut o = TurnOrders::empty(corp(&s), 0);
        o.actions = vec![PolicyAction::public(ActionKind::RecruitTalent); 3];
        let errs = validate_orders(&s, &g, &o).unwrap_err();
        assert!(errs.iter().any(|v| v.message.contains("max 2 policy actions")));
    }

    #[test]
    fn over_allocation_is_reported() {
        let (s, g) = setup();
        let team = corp(&s);
        let usable = g.allocatable_points(&team);
        let mut o = TurnOrders::empty(team, 0);
        o.rnd_allocation.insert(NodeId::new("lm-1"), usable + 1);
        let errs = validate_orders(&s, &g, &o).unwrap_err();
        assert!(errs.iter().any(|v| v.message.contains("over-allocation")));
    }

    #[test]
    fn allocation_to_locked_level_three_node() {
        let (s, mut g) = setup();
        let team = corp(&s);
        // lm-1 done, lm-2 not: lm-3 is locked.
        g.progress.get_mut(&team).unwrap().insert(
            NodeId::new("lm-1"),
            crate::state::NodeProgress { points: 10, completed: true, public: true, ever_completed: true },
        );
        let mut o = TurnOrders::empty(team, 0);
        o.rnd_allocation.insert(NodeId::new("lm-3"), 1);
        let errs = validate_orders(&s, &g, &o).unwrap_err();
        assert!(errs.iter().any(|v| v.code == ViolationCode::LockedNode && v.message.contains("locked node")));
    }

    #[test]
    fn every_violation_is_listed() {
        let (s, g) = setup();
        let team = corp(&s);
        let mut o = TurnOrders::empty(team.clone(), 3);
        o.actions = vec![PolicyAction::public(ActionKind::Strike { target: team.clone() }); 3];
        o.rnd_allocation.insert(NodeId::new("nope"), 1);
        let c = codes(validate_orders(&s, &g, &o));
        for expected in [
            ViolationCode::StaleTurn,
            ViolationCode::TooManyActions,
            ViolationCode::UnknownNode,
            ViolationCode::NotAState,
            ViolationCode::NotSecretable,
        ] {
            if expected == ViolationCode::NotSecretable {
                continue;
            }
            assert!(c.contains(&expected), "missing {expected:?} in {c:?}");
        }
    }

    #[test]
    fn strike_cannot_be_secret() {
        let (s, g) = setup();
        let state_id = s.teams.iter().find(|t| t.kind == TeamKind::State).unwrap().id.clone();
        let other = s.teams.iter().find(|t| t.kind == TeamKind::State && t.id != state_id).unwrap().id.clone();
        let mut o = TurnOrders::empty(state_id, 0);
        o.actions = vec![PolicyAction::secret(ActionKind::Strike { target: other })];
        assert!(codes(validate_orders(&s, &g, &o)).contains(&ViolationCode::NotSecretable));
    }

    #[test]
    fn deploy_requires_answered_pause_and_prerequisites() {
        let (s, g) = setup();
        let mut o = TurnOrders::empty(corp(&s), 0);
        o.deploy = Some(DeployOrder { project: Project::Agi, pause: None });
        let c = codes(validate_orders(&s, &g, &o));
        assert!(c.contains(&ViolationCode::PauseNotAnswered));
        assert!(c.contains(&ViolationCode::DeploymentPrerequisites));
    }

    #[test]
    fn nationalising_foreign_corp_is_wrong_allegiance() {
        let (s, g) = setup();
        let corp_spec = s.teams.iter().find(|t| t.kind == TeamKind::Corporation).unwrap();
        let foreign_state = s
            .teams
            .iter()
            .find(|t| t.kind == TeamKind::State && Some(&t.id) != corp_spec.allegiance.as_ref())
            .unwrap();
        let mut o = TurnOrders::empty(foreign_state.id.clone(), 0);
        o.actions = vec![PolicyAction::public(ActionKind::Nationalise { corp: corp_spec.id.clone() })];
        assert!(codes(validate_orders(&s, &g, &o)).contains(&ViolationCode::WrongAllegiance));
    }
}
