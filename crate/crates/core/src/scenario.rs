//! Scenario configuration: roster, tech tree, action catalog and shock deck.
//!
//! Scenarios are UTF-8 JSON documents (see `docs/scenario-schema.md`). A
//! loaded [`Scenario`] has passed every structural check, so the engine can
//! index into it without re-validating.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::canon;
use crate::error::ScenarioError;
use crate::ids::{NodeId, ShockId, TeamId};

pub const SCHEMA_VERSION: &str = "1";
pub const MAX_LEVEL: u8 = 4;

const DEFAULT_SCENARIO_JSON: &str = include_str!("../scenarios/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TeamKind {
    State,
    Corporation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    PartyA,
    PartyB,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::PartyA => Party::PartyB,
            Party::PartyB => Party::PartyA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lane {
    /// Language and world-modelling capabilities.
    LM,
    /// Reinforcement learning in increasingly complex environments.
    RL,
}

impl Lane {
    pub const ALL: [Lane; 2] = [Lane::LM, Lane::RL];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Basic,
    Application,
    Safety,
    Deployment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Project {
    /// An agentic goal-driven system.
    #[serde(rename = "AGI")]
    Agi,
    /// Comprehensive AI services.
    #[serde(rename = "CAIS")]
    Cais,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    SoftPower,
    HardPower,
    CyberPower,
    Budget,
    Talent,
    Data,
    Compute,
}

impl ResourceKind {
    pub fn is_power(self) -> bool {
        matches!(
            self,
            ResourceKind::SoftPower | ResourceKind::HardPower | ResourceKind::CyberPower
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Capability {
    AutomatedVulnDiscovery,
    AutonomousCyberWeapon,
    AutonomousWeaponSystems,
    MassPersuasion,
    AutomatedResearch,
    LaborAutomation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePool {
    pub soft_power: u32,
    pub hard_power: u32,
    pub cyber_power: u32,
    pub budget: u32,
    pub talent: u32,
    pub data: u32,
    pub compute: u32,
}

impl ResourcePool {
    pub fn get(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::SoftPower => self.soft_power,
            ResourceKind::HardPower => self.hard_power,
            ResourceKind::CyberPower => self.cyber_power,
            ResourceKind::Budget => self.budget,
            ResourceKind::Talent => self.talent,
            ResourceKind::Data => self.data,
            ResourceKind::Compute => self.compute,
        }
    }

    pub fn get_mut(&mut self, kind: ResourceKind) -> &mut u32 {
        match kind {
            ResourceKind::SoftPower => &mut self.soft_power,
            ResourceKind::HardPower => &mut self.hard_power,
            ResourceKind::CyberPower => &mut self.cyber_power,
            ResourceKind::Budget => &mut self.budget,
            ResourceKind::Talent => &mut self.talent,
            ResourceKind::Data => &mut self.data,
            ResourceKind::Compute => &mut self.compute,
        }
    }

    pub fn power_sum(&self) -> u32 {
        self.soft_power + self.hard_power + self.cyber_power
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub id: TeamId,
    pub name: String,
    pub kind: TeamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allegiance: Option<TeamId>,
    /// Marks the State whose government faces periodic elections.
    #[serde(default)]
    pub election_holder: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub party: Option<Party>,
    /// Teams whose compute supply is exposed to a blockade.
    #[serde(default)]
    pub import_dependent: bool,
    /// Budget gained at the end of every turn.
    pub income: u32,
    pub resources: ResourcePool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcernSpec {
    pub severity: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Effect {
    /// Resource delta applied to the team that completes the node.
    Resource { resource: ResourceKind, delta: i32 },
    /// Resource delta applied to the completing team's aligned State.
    AllyResource { resource: ResourceKind, delta: i32 },
    Capability { capability: Capability },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechNode {
    pub id: NodeId,
    pub name: String,
    pub lane: Lane,
    pub level: u8,
    pub kind: NodeKind,
    pub cost: u32,
    #[serde(default)]
    pub prereqs: BTreeSet<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concern: Option<ConcernSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
    /// Set on the two Deployment nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<Project>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionType {
    InvestTalent,
    InvestData,
    InvestCompute,
    RecruitTalent,
    PoachTalent,
    PropagandaCampaign,
    BuildMilitary,
    BuildCyber,
    CyberOp,
    PoolDefense,
    Blockade,
    Strike,
    InfluenceElection,
    Nationalise,
    FormPpp,
    Mitigate,
    Regulate,
    ProposeTreaty,
    SignTreaty,
    RatifyTreaty,
    FundSafety,
    DevelopLaws,
    OpenSource,
}

impl ActionType {
    pub const ALL: [ActionType; 23] = [
        ActionType::InvestTalent,
        ActionType::InvestData,
        ActionType::InvestCompute,
        ActionType::RecruitTalent,
        ActionType::PoachTalent,
        ActionType::PropagandaCampaign,
        ActionType::BuildMilitary,
        ActionType::BuildCyber,
        ActionType::CyberOp,
        ActionType::PoolDefense,
        ActionType::Blockade,
        ActionType::Strike,
        ActionType::InfluenceElection,
        ActionType::Nationalise,
        ActionType::FormPpp,
        ActionType::Mitigate,
        ActionType::Regulate,
        ActionType::ProposeTreaty,
        ActionType::SignTreaty,
        ActionType::RatifyTreaty,
        ActionType::FundSafety,
        ActionType::DevelopLaws,
        ActionType::OpenSource,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Team,
    Node,
    Concern,
    Treaty,
    Amount,
    Supply,
    CyberMode,
    Proposal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    #[serde(default)]
    pub optional: bool,
}

/// Catalog entry: costs and restrictions of one action type.
///
/// For amount-parameterised actions (`Invest*`, `FundSafety`,
/// `DevelopLaws`) `budget_cost` and `magnitude` are per unit of amount.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub action: ActionType,
    #[serde(default)]
    pub budget_cost: u32,
    #[serde(default)]
    pub soft_cost: u32,
    #[serde(default)]
    pub hard_cost: u32,
    #[serde(default)]
    pub magnitude: u32,
    #[serde(default)]
    pub state_only: bool,
    #[serde(default)]
    pub secret_allowed: bool,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockKind {
    StartupBreakthrough,
    OpenSourceRelease,
    PublicBacklash,
    WarningShot,
    MarketCrash,
    TalentExodus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ShockEffect {
    /// Completes the lowest Basic node not yet held by every team, for all teams.
    PublishLowestBasic,
    Stability { delta: i32 },
    AllTeams { resource: ResourceKind, delta: i32 },
    /// Applies to the team holding the most of `resource` (ties: lowest id).
    Leader { resource: ResourceKind, delta: i32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShockEvent {
    pub id: ShockId,
    pub kind: ShockKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub effect: Vec<ShockEffect>,
}

fn default_power_cap() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub start_stability: i32,
    pub horizon_turns: u32,
    pub start_year: i32,
    pub years_per_turn: i32,
    pub election_period: u32,
    #[serde(default = "default_power_cap")]
    pub power_cap: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            start_stability: 7,
            horizon_turns: 8,
            start_year: 2025,
            years_per_turn: 2,
            election_period: 2,
            power_cap: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: String,
    pub name: String,
    pub constants: Constants,
    pub teams: Vec<TeamSpec>,
    pub tech_tree: Vec<TechNode>,
    pub action_catalog: Vec<ActionSpec>,
    pub shock_deck: Vec<ShockEvent>,
    /// Blockade targets, e.g. an overseas semiconductor supply.
    #[serde(default)]
    pub supply_chokepoints: Vec<String>,
}

impl Scenario {
    /// The bundled four-team scenario.
    pub fn default_scenario() -> Scenario {
        load_scenario(DEFAULT_SCENARIO_JSON).expect("bundled scenario is valid")
    }

    pub fn default_json() -> &'static str {
        DEFAULT_SCENARIO_JSON
    }

    pub fn team(&self, id: &TeamId) -> Option<&TeamSpec> {
        self.teams.iter().find(|t| &t.id == id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&TechNode> {
        self.tech_tree.iter().find(|n| &n.id == id)
    }

    pub fn action(&self, action: ActionType) -> &ActionSpec {
        self.action_catalog
            .iter()
            .find(|a| a.action == action)
            .expect("validated catalog covers every action type")
    }

    pub fn basic_node(&self, lane: Lane, level: u8) -> Option<&TechNode> {
        self.tech_tree
            .iter()
            .find(|n| n.kind == NodeKind::Basic && n.lane == lane && n.level == level)
    }

    pub fn deployment_node(&self, project: Project) -> Option<&TechNode> {
        self.tech_tree
            .iter()
            .find(|n| n.kind == NodeKind::Deployment && n.project == Some(project))
    }

    pub fn safety_node_count(&self) -> usize {
        self.tech_tree
            .iter()
            .filter(|n| n.kind == NodeKind::Safety)
            .count()
    }

    pub fn node_with_capability(&self, capability: Capability) -> Option<&TechNode> {
        self.tech_tree.iter().find(|n| {
            n.effects
                .iter()
                .any(|e| matches!(e, Effect::Capability { capability: c } if *c == capability))
        })
    }

    pub fn team_ids(&self) -> Vec<TeamId> {
        let mut ids: Vec<TeamId> = self.teams.iter().map(|t| t.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn election_state(&self) -> Option<&TeamSpec> {
        self.teams.iter().find(|t| t.election_holder)
    }

    /// The State that heads `team`'s bloc (itself, for a State).
    pub fn bloc_leader(&self, team: &TeamId) -> Option<&TeamId> {
        let spec = self.team(team)?;
        match spec.kind {
            TeamKind::State => Some(&spec.id),
            TeamKind::Corporation => spec.allegiance.as_ref(),
        }
    }

    pub fn same_bloc(&self, a: &TeamId, b: &TeamId) -> bool {
        match (self.bloc_leader(a), self.bloc_leader(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    pub fn bloc_members(&self, leader: &TeamId) -> Vec<TeamId> {
        let mut ids: Vec<TeamId> = self
            .teams
            .iter()
            .filter(|t| self.bloc_leader(&t.id) == Some(leader))
            .map(|t| t.id.clone())
            .collect();
        ids.sort();
        ids
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        canon::sha256_hex(&canon::to_canonical_string(self))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    validate_scenario(&scenario)?;
    Ok(scenario)
}

pub fn validate_scenario(s: &Scenario) -> Result<(), ScenarioError> {
    if s.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::invalid(
            "schema_version",
            format!(
                "unsupported schema version `{}` (expected `{SCHEMA_VERSION}`)",
                s.schema_version
            ),
        ));
    }
    validate_constants(&s.constants)?;
    validate_teams(s)?;
    validate_tree(s)?;
    validate_catalog(s)?;
    validate_deck(s)?;
    Ok(())
}

fn validate_constants(c: &Constants) -> Result<(), ScenarioError> {
    if !(0..=10).contains(&c.start_stability) {
        return Err(ScenarioError::invalid(
            "constants.start_stability",
            "must lie in 0..=10",
        ));
    }
    if c.horizon_turns < 2 {
        return Err(ScenarioError::invalid(
            "constants.horizon_turns",
            "must be at least 2",
        ));
    }
    if c.election_period < 1 {
        return Err(ScenarioError::invalid(
            "constants.election_period",
            "must be at least 1",
        ));
    }
    if c.years_per_turn < 1 {
        return Err(ScenarioError::invalid(
            "constants.years_per_turn",
            "must be at least 1",
        ));
    }
    if c.power_cap == 0 {
        return Err(ScenarioError::invalid("constants.power_cap", "must be positive"));
    }
    Ok(())
}

fn validate_teams(s: &Scenario) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, t) in s.teams.iter().enumerate() {
        let path = format!("teams[{i}]");
        if t.id.as_str().is_empty() {
            return Err(ScenarioError::invalid(format!("{path}.id"), "empty id"));
        }
        if !seen.insert(&t.id) {
            return Err(ScenarioError::invalid(
                format!("{path}.id"),
                format!("duplicate team id `{}`", t.id),
            ));
        }
        for kind in [
            ResourceKind::SoftPower,
            ResourceKind::HardPower,
            ResourceKind::CyberPower,
        ] {
            if t.resources.get(kind) > s.constants.power_cap {
                return Err(ScenarioError::invalid(
                    format!("{path}.resources"),
                    format!("{kind:?} exceeds power cap {}", s.constants.power_cap),
                ));
            }
        }
    }
    let states: Vec<&TeamSpec> = s.teams.iter().filter(|t| t.kind == TeamKind::State).collect();
    let corps = s.teams.len() - states.len();
    if states.len() != 2 {
        return Err(ScenarioError::invalid(
            "teams",
            format!("expected exactly 2 State teams, found {}", states.len()),
        ));
    }
    if corps < 2 {
        return Err(ScenarioError::invalid(
            "teams",
            format!("expected at least 2 Corporation teams, found {corps}"),
        ));
    }
    for (i, t) in s.teams.iter().enumerate() {
        let path = format!("teams[{i}]");
        match t.kind {
            TeamKind::Corporation => {
                let ally = t.allegiance.as_ref().ok_or_else(|| {
                    ScenarioError::invalid(format!("{path}.allegiance"), "corporation needs an allegiance")
                })?;
                if !states.iter().any(|st| &st.id == ally) {
                    return Err(ScenarioError::invalid(
                        format!("{path}.allegiance"),
                        format!("`{ally}` is not a State team"),
                    ));
                }
                if t.election_holder {
                    return Err(ScenarioError::invalid(
                        format!("{path}.election_holder"),
                        "only a State can hold elections",
                    ));
                }
            }
            TeamKind::State => {
                if t.allegiance.is_some() {
                    return Err(ScenarioError::invalid(
                        format!("{path}.allegiance"),
                        "a State has no allegiance",
                    ));
                }
            }
        }
        if t.party.is_some() != t.election_holder {
            return Err(ScenarioError::invalid(
                format!("{path}.party"),
                "party is present exactly on the election-holding State",
            ));
        }
    }
    let holders = s.teams.iter().filter(|t| t.election_holder).count();
    if holders != 1 {
        return Err(ScenarioError::invalid(
            "teams",
            format!("expected exactly one election-holding State, found {holders}"),
        ));
    }
    Ok(())
}

fn validate_tree(s: &Scenario) -> Result<(), ScenarioError> {
    let mut ids: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for (i, n) in s.tech_tree.iter().enumerate() {
        let path = format!("tech_tree[{i}]");
        if ids.insert(&n.id, i).is_some() {
            return Err(ScenarioError::invalid(
                format!("{path}.id"),
                format!("duplicate node id `{}`", n.id),
            ));
        }
        if !(1..=MAX_LEVEL).contains(&n.level) {
            return Err(ScenarioError::invalid(format!("{path}.level"), "level must be 1..=4"));
        }
        if n.cost == 0 {
            return Err(ScenarioError::invalid(format!("{path}.cost"), "cost must be positive"));
        }
        if let Some(c) = &n.concern {
            if n.kind != NodeKind::Application {
                return Err(ScenarioError::invalid(
                    format!("{path}.concern"),
                    "only Application nodes carry concerns",
                ));
            }
            if c.severity == 0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.concern.severity"),
                    "severity must be positive",
                ));
            }
        }
        match n.kind {
            NodeKind::Deployment => {
                if n.level != MAX_LEVEL {
                    return Err(ScenarioError::invalid(
                        format!("{path}.level"),
                        "Deployment nodes exist only at level 4",
                    ));
                }
                if n.project.is_none() {
                    return Err(ScenarioError::invalid(
                        format!("{path}.project"),
                        "Deployment node needs a project (AGI or CAIS)",
                    ));
                }
            }
            _ => {
                if n.project.is_some() {
                    return Err(ScenarioError::invalid(
                        format!("{path}.project"),
                        "only Deployment nodes name a project",
                    ));
                }
            }
        }
    }
    for project in [Project::Agi, Project::Cais] {
        let count = s
            .tech_tree
            .iter()
            .filter(|n| n.kind == NodeKind::Deployment && n.project == Some(project))
            .count();
        if count != 1 {
            return Err(ScenarioError::invalid(
                "tech_tree",
                format!("expected exactly one {project:?} Deployment node, found {count}"),
            ));
        }
    }
    for lane in Lane::ALL {
        for level in 1..=MAX_LEVEL {
            let count = s
                .tech_tree
                .iter()
                .filter(|n| n.kind == NodeKind::Basic && n.lane == lane && n.level == level)
                .count();
            if count != 1 {
                return Err(ScenarioError::invalid(
                    "tech_tree",
                    format!("expected one Basic node for {lane:?} level {level}, found {count}"),
                ));
            }
        }
    }
    for (i, n) in s.tech_tree.iter().enumerate() {
        for p in &n.prereqs {
            if !ids.contains_key(p) {
                return Err(ScenarioError::invalid(
                    format!("tech_tree[{i}].prereqs"),
                    format!("unknown prerequisite `{p}`"),
                ));
            }
        }
        if n.kind == NodeKind::Application {
            let own_basic = s.basic_node(n.lane, n.level).expect("checked above");
            if !n.prereqs.contains(&own_basic.id) {
                return Err(ScenarioError::invalid(
                    format!("tech_tree[{i}].prereqs"),
                    format!("must include the Basic node `{}` of its own lane and level", own_basic.id),
                ));
            }
        }
    }
    if let Some(cycle_at) = find_cycle(s) {
        return Err(ScenarioError::invalid(
            format!("tech_tree[{cycle_at}].prereqs"),
            "prerequisite cycle",
        ));
    }
    Ok(())
}

/// Index of a node that sits on a prerequisite cycle, if any.
fn find_cycle(s: &Scenario) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let index: BTreeMap<&NodeId, usize> =
        s.tech_tree.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
    let mut marks = vec![Mark::New; s.tech_tree.len()];

    fn visit(
        i: usize,
        s: &Scenario,
        index: &BTreeMap<&NodeId, usize>,
        marks: &mut [Mark],
    ) -> Option<usize> {
        match marks[i] {
            Mark::Done => return None,
            Mark::Active => return Some(i),
            Mark::New => {}
        }
        marks[i] = Mark::Active;
        for p in &s.tech_tree[i].prereqs {
            if let Some(&j) = index.get(p) {
                if let Some(hit) = visit(j, s, index, marks) {
                    return Some(hit);
                }
            }
        }
        marks[i] = Mark::Done;
        None
    }

    (0..s.tech_tree.len()).find_map(|i| visit(i, s, &index, &mut marks))
}

fn validate_catalog(s: &Scenario) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, a) in s.action_catalog.iter().enumerate() {
        if !seen.insert(a.action) {
            return Err(ScenarioError::invalid(
                format!("action_catalog[{i}].action"),
                format!("duplicate catalog entry {:?}", a.action),
            ));
        }
    }
    for action in ActionType::ALL {
        if !seen.contains(&action) {
            return Err(ScenarioError::invalid(
                "action_catalog",
                format!("missing catalog entry {action:?}"),
            ));
        }
    }
    Ok(())
}

fn validate_deck(s: &Scenario) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, shock) in s.shock_deck.iter().enumerate() {
        if !seen.insert(&shock.id) {
            return Err(ScenarioError::invalid(
                format!("shock_deck[{i}].id"),
                format!("duplicate shock id `{}`", shock.id),
            ));
        }
    }
    let mut chokepoints = BTreeSet::new();
    for (i, c) in s.supply_chokepoints.iter().enumerate() {
        if !chokepoints.insert(c) {
            return Err(ScenarioError::invalid(
                format!("supply_chokepoints[{i}]"),
                "duplicate chokepoint",
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_has_four_teams_and_two_lanes() {
        let s = Scenario::default_scenario();
        assert_eq!(s.teams.len(), 4);
        for lane in Lane::ALL {
            for level in 1..=4 {
                assert!(s.basic_node(lane, level).is_some());
            }
        }
        assert_eq!(s.constants.start_stability, 7);
        assert_eq!(s.safety_node_count(), 8);
    }

    #[test]
    fn basic_costs_double_per_level() {
        let s = Scenario::default_scenario();
        for lane in Lane::ALL {
            let costs: Vec<u32> = (1..=4).map(|l| s.basic_node(lane, l).unwrap().cost).collect();
            assert_eq!(costs, vec![10, 20, 40, 80]);
        }
    }

    fn default_value() -> serde_json::Value {
        serde_json::from_str(Scenario::default_json()).unwrap()
    }

    fn load_value(v: &serde_json::Value) -> Result<Scenario, ScenarioError> {
        load_scenario(&v.to_string())
    }

    #[test]
    fn prereq_cycle_is_rejected() {
        let mut v = default_value();
        let tree = v["tech_tree"].as_array_mut().unwrap();
        // lm-1 <- lm-2 already; close the loop lm-1 -> lm-2.
        let lm1 = tree.iter_mut().find(|n| n["id"] == "lm-1").unwrap();
        lm1["prereqs"] = serde_json::json!(["lm-2"]);
        let err = load_value(&v).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation { ref message, .. } if message.contains("cycle")), "{err}");
    }

    #[test]
    fn missing_basic_node_is_rejected() {
        let mut v = default_value();
        let tree = v["tech_tree"].as_array_mut().unwrap();
        tree.retain(|n| n["id"] != "rl-3");
        // Dangling references to rl-3 would also fail; either way the path points into the tree.
        let err = load_value(&v).unwrap_err();
        assert!(err.path().starts_with("tech_tree"), "{err}");
    }

    #[test]
    fn bad_stability_bounds_are_rejected() {
        let mut v = default_value();
        v["constants"]["start_stability"] = serde_json::json!(11);
        let err = load_value(&v).unwrap_err();
        assert_eq!(err.path(), "constants.start_stability");
    }

    #[test]
    fn mistyped_field_reports_schema_path() {
        let mut v = default_value();
        v["teams"][1]["income"] = serde_json::json!("lots");
        let err = load_value(&v).unwrap_err();
        match err {
            ScenarioError::Schema { path, .. } => assert_eq!(path, "teams[1].income"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn missing_field_reports_schema_error() {
        let mut v = default_value();
        v.as_object_mut().unwrap().remove("constants");
        assert!(matches!(load_value(&v), Err(ScenarioError::Schema { .. })));
    }

    #[test]
    fn corporation_without_allegiance_is_rejected() {
        let mut v = default_value();
        let teams = v["teams"].as_array_mut().unwrap();
        let corp = teams.iter_mut().find(|t| t["kind"] == "Corporation").unwrap();
        corp.as_object_mut().unwrap().remove("allegiance");
        let err = load_value(&v).unwrap_err();
        assert!(err.path().ends_with(".allegiance"), "{err}");
    }

    #[test]
    fn application_must_depend_on_its_basic() {
        let mut v = default_value();
        let tree = v["tech_tree"].as_array_mut().unwrap();
        let app = tree
            .iter_mut()
            .find(|n| n["kind"] == "Application" && n["level"] == 2)
            .unwrap();
        app["prereqs"] = serde_json::json!([]);
        let err = load_value(&v).unwrap_err();
        assert!(err.to_string().contains("Basic node"), "{err}");
    }

    #[test]
    fn safety_node_with_concern_is_rejected() {
        let mut v = default_value();
        let tree = v["tech_tree"].as_array_mut().unwrap();
        let safety = tree.iter_mut().find(|n| n["kind"] == "Safety").unwrap();
        safety["concern"] = serde_json::json!({"severity": 1});
        assert!(load_value(&v).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let s = Scenario::default_scenario();
        let again = load_scenario(&s.to_json_pretty()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.digest(), again.digest());
    }
}
