//! Scripted policies that play the recurring strategies seen in facilitated
//! games. Each policy maps a knowledge view, its own memory and a private
//! random stream to a set of orders that pass validation.

mod plan;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::AgentError;
use crate::ids::TreatyId;
use crate::orders::{ActionKind, CyberMode, TurnOrders};
use crate::rng::RngState;
use crate::scenario::{ActionType, Lane, NodeKind, Scenario};
use crate::state::{Term, TreatyProposal, TreatyStatus};
use crate::view::KnowledgeView;

use plan::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Racer,
    SafetyChampion,
    Spymaster,
    TreatySeeker,
    Hawk,
    Idle,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Racer,
        AgentKind::SafetyChampion,
        AgentKind::Spymaster,
        AgentKind::TreatySeeker,
        AgentKind::Hawk,
        AgentKind::Idle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Racer => "racer",
            AgentKind::SafetyChampion => "safety",
            AgentKind::Spymaster => "spymaster",
            AgentKind::TreatySeeker => "treaty",
            AgentKind::Hawk => "hawk",
            AgentKind::Idle => "idle",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "racer" => AgentKind::Racer,
            "safety" | "safetychampion" | "champion" => AgentKind::SafetyChampion,
            "spy" | "spymaster" => AgentKind::Spymaster,
            "treaty" | "treatyseeker" => AgentKind::TreatySeeker,
            "hawk" => AgentKind::Hawk,
            "idle" => AgentKind::Idle,
            _ => return Err(AgentError::UnknownAgent(s.to_owned())),
        })
    }
}

/// Trigger thresholds and targets shared by the policies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Levels an opposing team must lead by before a Hawk turns aggressive.
    pub hawk_deficit_levels: u8,
    /// Cyber power a Spymaster builds before operating.
    pub spymaster_cyber_target: u32,
    /// Verification rigor of the treaty a TreatySeeker proposes.
    pub treaty_rigor: u8,
    /// Safety nodes the proposed treaty requires before deployment work.
    pub treaty_safety_floor: u32,
    /// Bloc Safety nodes a SafetyChampion wants before deploying.
    pub champion_safety_target: u32,
    /// Lowest stability at which a Racer still starts Applications; it also
    /// stops while any concern is open.
    pub racer_app_stability: i32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hawk_deficit_levels: 1,
            spymaster_cyber_target: 10,
            treaty_rigor: 5,
            treaty_safety_floor: 4,
            champion_safety_target: 6,
            racer_app_stability: 5,
        }
    }
}

/// Per-agent state carried between turns.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMemory {
    pub turns_played: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane: Option<Lane>,
    #[serde(default)]
    pub proposed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggressive_since: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub id: String,
    pub kind: AgentKind,
    pub config: AgentConfig,
}

/// Looks up a built-in policy by name.
pub fn builtin_agent(name: &str) -> Result<AgentPolicy, AgentError> {
    let kind: AgentKind = name.parse()?;
    Ok(AgentPolicy::new(kind, AgentConfig::default()))
}

impl AgentPolicy {
    pub fn new(kind: AgentKind, config: AgentConfig) -> Self {
        Self {
            id: kind.name().to_owned(),
            kind,
            config,
        }
    }

    /// Orders for the view's current turn. Deterministic in `(view, memory, rng)`.
    pub fn decide(
        &self,
        scenario: &Scenario,
        view: &KnowledgeView,
        memory: &mut AgentMemory,
        rng: &mut RngState,
    ) -> TurnOrders {
        let Some(mut plan) = Plan::new(scenario, view) else {
            return TurnOrders::empty(crate::ids::TeamId::new(""), view.turn);
        };
        memory.turns_played += 1;
        match self.kind {
            AgentKind::Idle => {}
            AgentKind::Racer => racer(&mut plan, &self.config, memory, rng),
            AgentKind::SafetyChampion => safety_champion(&mut plan, &self.config, memory, rng),
            AgentKind::Spymaster => spymaster(&mut plan, &self.config, memory, rng),
            AgentKind::TreatySeeker => treaty_seeker(&mut plan, &self.config, memory, rng),
            AgentKind::Hawk => hawk(&mut plan, &self.config, memory, rng),
        }
        plan.finish()
    }
}

fn coin(rng: &mut RngState) -> Lane {
    if rng.next_u64() % 2 == 0 {
        Lane::LM
    } else {
        Lane::RL
    }
}

fn primary_lane(plan: &Plan<'_>, memory: &mut AgentMemory, rng: &mut RngState) -> Lane {
    let lane = plan.fastest_lane(|| memory.lane.unwrap_or_else(|| coin(rng)));
    memory.lane = Some(lane);
    lane
}

/// Deployment node, then the next Basic level of `lane`.
fn push_lane(plan: &mut Plan<'_>, lane: Lane) {
    if let Some(node) = plan.project_for(lane).and_then(|p| plan.deployment_node(p)) {
        plan.fill(node);
    }
    if let Some(node) = plan.next_basic(lane) {
        plan.fill(node);
    }
}

fn deploy_if_ready(plan: &mut Plan<'_>, lane: Lane) {
    let projects = [Some(lane), Lane::ALL.into_iter().find(|&l| l != lane)];
    let projects: Vec<_> = projects.into_iter().flatten().filter_map(|l| plan.project_for(l)).collect();
    for project in projects {
        if plan.deploy(project) {
            return;
        }
    }
}

fn racing_rnd(plan: &mut Plan<'_>, memory: &mut AgentMemory, rng: &mut RngState, applications: bool) -> Lane {
    let lane = primary_lane(plan, memory, rng);
    push_lane(plan, lane);
    if applications {
        for node in plan.nodes(lane, NodeKind::Application) {
            plan.fill(node);
        }
    }
    let other = if lane == Lane::LM { Lane::RL } else { Lane::LM };
    if let Some(node) = plan.next_basic(other) {
        plan.fill(node);
    }
    if applications {
        for node in plan.nodes(other, NodeKind::Application) {
            plan.fill(node);
        }
    }
    lane
}

fn racer(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) {
    plan.consent_to_partnership();
    plan.pool_rnd();
    let apps = plan.open_drain() == 0 && plan.view.stability >= cfg.racer_app_stability;
    let lane = racing_rnd(plan, memory, rng, apps);
    deploy_if_ready(plan, lane);
    while plan.actions_left() > 0 && plan.invest_in_bottleneck(true) {}
}

fn safety_champion(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) {
    if let Some(concern) = plan.worst_concern() {
        plan.act(ActionKind::Mitigate { concern }, false);
    }
    for node in plan.open_nodes(NodeKind::Safety) {
        plan.fill(node);
    }
    if let Some(node) = plan.open_nodes(NodeKind::Safety).into_iter().find(|n| plan.remaining(n) > 0) {
        let spec = plan.scenario.action(ActionType::FundSafety);
        let per_unit = spec.magnitude.max(1);
        let units = plan
            .affordable_units(ActionType::FundSafety, plan.remaining(node).div_ceil(per_unit));
        if units > 0 {
            plan.act(
                ActionKind::FundSafety {
                    node: node.id.clone(),
                    amount: units,
                },
                true,
            );
        }
    }
    let lane = primary_lane(plan, memory, rng);
    if plan.bloc_safety() >= cfg.champion_safety_target {
        push_lane(plan, lane);
        deploy_if_ready(plan, lane);
    } else if let Some(node) = plan.next_basic(lane) {
        plan.fill(node);
    }
    while plan.actions_left() > 0 && plan.invest_in_bottleneck(false) {}
}

fn spymaster(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) {
    let cyber = plan.own.team.resources.cyber_power;
    if cyber < cfg.spymaster_cyber_target {
        plan.act(ActionKind::BuildCyber, false);
    }
    if cyber > 0 {
        if let Some((leader, _)) = plan.rival_leader() {
            let me = plan.me().clone();
            let fresh = plan
                .view
                .intel
                .iter()
                .filter(|e| e.owner == me && &e.target == leader && e.turn + 1 >= plan.view.turn)
                .max_by_key(|e| e.turn);
            let steal = fresh.and_then(|e| {
                e.nodes
                    .iter()
                    .filter(|(n, &p)| p > plan.own.progress.get(*n).map_or(0, |o| o.points))
                    .max_by_key(|(n, &p)| (p.saturating_sub(plan.own.progress.get(*n).map_or(0, |o| o.points)), *n))
                    .map(|(n, _)| n.clone())
            });
            let (mode, node) = match steal {
                Some(n) => (CyberMode::Exfiltrate, Some(n)),
                None => (CyberMode::Monitor, None),
            };
            plan.act(
                ActionKind::CyberOp {
                    target: leader.clone(),
                    mode,
                    node,
                },
                true,
            );
        }
    }
    plan.consent_to_partnership();
    let lane = racing_rnd(plan, memory, rng, false);
    deploy_if_ready(plan, lane);
    while plan.actions_left() > 0 && plan.invest_in_bottleneck(true) {}
}

/// The treaty a TreatySeeker offers: every team, a safety floor, maximal rigor.
pub fn seeker_proposal(scenario: &Scenario, cfg: &AgentConfig) -> TreatyProposal {
    TreatyProposal {
        parties: scenario.team_ids().into_iter().collect(),
        terms: vec![Term::SafetyFloor {
            min_safety: cfg.treaty_safety_floor,
        }],
        verification_rigor: cfg.treaty_rigor,
    }
}

fn my_treaty(plan: &Plan<'_>) -> Option<(TreatyId, TreatyStatus)> {
    let me = plan.me();
    plan.view
        .treaties
        .iter()
        .filter(|t| t.parties.contains(me) && t.status != TreatyStatus::Dissolved)
        .map(|t| (t.id, t.status))
        .next()
}

fn diplomacy(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory) {
    match my_treaty(plan) {
        Some((id, TreatyStatus::Contested)) if plan.is_election_state() => {
            plan.act(ActionKind::RatifyTreaty { treaty: id }, false);
        }
        Some(_) => {}
        None => {
            let proposal = seeker_proposal(plan.scenario, cfg);
            if !proposal.parties.contains(plan.me()) {
                return;
            }
            if !memory.proposed {
                memory.proposed = true;
                plan.act(
                    ActionKind::ProposeTreaty {
                        proposal: proposal.clone(),
                    },
                    false,
                );
            }
            plan.act(ActionKind::SignTreaty { proposal }, false);
        }
    }
}

fn careful_rnd(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) -> Lane {
    let lane = primary_lane(plan, memory, rng);
    if plan.bloc_safety() < cfg.treaty_safety_floor {
        for node in plan.open_nodes(NodeKind::Safety) {
            plan.fill(node);
        }
    }
    push_lane(plan, lane);
    for node in plan.open_nodes(NodeKind::Safety) {
        plan.fill(node);
    }
    lane
}

fn treaty_seeker(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) {
    diplomacy(plan, cfg, memory);
    plan.consent_to_partnership();
    if my_treaty(plan).is_some() {
        plan.pool_rnd();
    }
    if let Some(concern) = plan.worst_concern() {
        plan.act(ActionKind::Mitigate { concern }, false);
    }
    let lane = careful_rnd(plan, cfg, memory, rng);
    if plan.bloc_safety() >= cfg.treaty_safety_floor {
        deploy_if_ready(plan, lane);
    }
    while plan.actions_left() > 0 && plan.invest_in_bottleneck(false) {}
}

fn hawk(plan: &mut Plan<'_>, cfg: &AgentConfig, memory: &mut AgentMemory, rng: &mut RngState) {
    if memory.aggressive_since.is_none() {
        let trailing = plan
            .rival_leader()
            .is_some_and(|(_, level)| level >= plan.bloc_level() + cfg.hawk_deficit_levels);
        if trailing {
            memory.aggressive_since = Some(plan.view.turn);
        }
    }
    if memory.aggressive_since.is_none() {
        treaty_seeker(plan, cfg, memory, rng);
        return;
    }
    if let Some((leader, _)) = plan.rival_leader() {
        let leader = leader.clone();
        let chokepoint = plan.scenario.supply_chokepoints.first().cloned();
        let blockaded = match chokepoint {
            Some(supply) if plan.is_state() => plan.act(ActionKind::Blockade { supply }, false),
            _ => false,
        };
        if !blockaded && plan.own.team.resources.cyber_power > 0 {
            let target_node = Lane::ALL
                .into_iter()
                .filter_map(|lane| {
                    let level = (1..=crate::scenario::MAX_LEVEL)
                        .take_while(|&l| {
                            plan.scenario.basic_node(lane, l).is_some_and(|n| {
                                plan.view.others[&leader].public_completions.contains(&n.id)
                            })
                        })
                        .last()
                        .unwrap_or(0);
                    plan.scenario.basic_node(lane, level + 1).map(|n| (level, n.id.clone()))
                })
                .max()
                .map(|(_, id)| id);
            if let Some(node) = target_node {
                plan.act(
                    ActionKind::CyberOp {
                        target: leader,
                        mode: CyberMode::Sabotage,
                        node: Some(node),
                    },
                    true,
                );
            }
        }
    }
    plan.consent_to_partnership();
    plan.pool_rnd();
    let lane = careful_rnd(plan, cfg, memory, rng);
    if plan.bloc_safety() >= cfg.treaty_safety_floor {
        deploy_if_ready(plan, lane);
    }
    while plan.actions_left() > 0 && plan.invest_in_bottleneck(true) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::validate_orders;
    use crate::state::new_game;
    use crate::view::{knowledge_view, Viewer};

    #[test]
    fn names_round_trip() {
        for kind in AgentKind::ALL {
            assert_eq!(kind.name().parse::<AgentKind>().unwrap(), kind);
        }
        assert_eq!("Safety-Champion".parse::<AgentKind>().unwrap(), AgentKind::SafetyChampion);
        assert_eq!(builtin_agent("gambler").unwrap_err(), AgentError::UnknownAgent("gambler".into()));
    }

    #[test]
    fn opening_orders_of_every_policy_validate() {
        let s = Scenario::default_scenario();
        let (g, _) = new_game(&s, 3);
        for kind in AgentKind::ALL {
            let policy = AgentPolicy::new(kind, AgentConfig::default());
            for team in s.team_ids() {
                let view = knowledge_view(&g, &[], &Viewer::Team(team.clone())).unwrap();
                let mut rng = RngState::from_seed(9);
                let orders = policy.decide(&s, &view, &mut AgentMemory::default(), &mut rng);
                assert_eq!(orders.team, team);
                validate_orders(&s, &g, &orders).unwrap_or_else(|v| panic!("{kind} {team}: {v:?}"));
            }
        }
    }

    #[test]
    fn idle_orders_are_empty() {
        let s = Scenario::default_scenario();
        let (g, _) = new_game(&s, 3);
        let team = s.team_ids()[0].clone();
        let view = knowledge_view(&g, &[], &Viewer::Team(team.clone())).unwrap();
        let orders = builtin_agent("idle").unwrap().decide(&s, &view, &mut AgentMemory::default(), &mut RngState::from_seed(1));
        assert_eq!(orders, TurnOrders::empty(team, 0));
    }
}
