use std::collections::BTreeSet;

use crate::ids::{NodeId, TeamId};
use crate::orders::{ActionKind, DeployOrder, PauseAnswer, PolicyAction, TurnOrders};
use crate::scenario::{Lane, NodeKind, Project, Scenario, TeamKind, TechNode, MAX_LEVEL};
use crate::state::{Term, TreatyStatus};
use crate::view::{KnowledgeView, OwnKnowledge};

const MAX_ACTIONS: usize = 2;

/// Order builder working from a team's knowledge view. Every helper keeps the
/// orders inside what `validate_orders` accepts for that view.
pub(crate) struct Plan<'a> {
    pub scenario: &'a Scenario,
    pub view: &'a KnowledgeView,
    pub own: &'a OwnKnowledge,
    pub orders: TurnOrders,
    budget: u32,
    soft: u32,
    hard: u32,
    points: u32,
}

impl<'a> Plan<'a> {
    pub fn new(scenario: &'a Scenario, view: &'a KnowledgeView) -> Option<Self> {
        let own = view.own.as_ref()?;
        let r = &own.team.resources;
        Some(Self {
            scenario,
            view,
            own,
            orders: TurnOrders::empty(own.team.id.clone(), view.turn),
            budget: r.budget,
            soft: r.soft_power,
            hard: r.hard_power,
            points: own.rnd_points,
        })
    }

    pub fn finish(self) -> TurnOrders {
        self.orders
    }

    pub fn me(&self) -> &'a TeamId {
        &self.own.team.id
    }

    pub fn is_state(&self) -> bool {
        self.own.team.kind == TeamKind::State
    }

    /// R&D of this team runs through another team's allocation.
    pub fn pooled_away(&self) -> bool {
        let t = &self.own.team;
        t.is_nationalised() || (t.kind == TeamKind::State && t.ppp_partner.is_some())
    }

    pub fn completed(&self, node: &NodeId) -> bool {
        self.own.progress.get(node).is_some_and(|p| p.completed)
    }

    fn progress_points(&self, node: &NodeId) -> u32 {
        self.own.progress.get(node).map_or(0, |p| p.points)
    }

    pub fn unlocked(&self, node: &TechNode) -> bool {
        node.prereqs.iter().all(|p| self.completed(p))
    }

    pub fn level(&self, lane: Lane) -> u8 {
        (1..=MAX_LEVEL)
            .take_while(|&l| self.scenario.basic_node(lane, l).is_some_and(|n| self.completed(&n.id)))
            .last()
            .unwrap_or(0)
    }

    pub fn top_level(&self) -> u8 {
        Lane::ALL.iter().map(|&l| self.level(l)).max().unwrap_or(0)
    }

    pub fn next_basic(&self, lane: Lane) -> Option<&'a TechNode> {
        self.scenario.basic_node(lane, self.level(lane) + 1)
    }

    /// Points still needed to finish `node` after this turn's allocation so far.
    pub fn remaining(&self, node: &TechNode) -> u32 {
        let have = self.progress_points(&node.id) + self.orders.rnd_allocation.get(&node.id).copied().unwrap_or(0);
        node.cost.saturating_sub(have)
    }

    fn allowed_by_treaties(&self, node: &TechNode) -> bool {
        self.binding_terms().all(|term| match term {
            Term::RndCap { lane, max_level } => {
                !(node.lane == *lane && node.level > *max_level && node.kind != NodeKind::Safety)
            }
            Term::SafetyFloor { min_safety } => {
                node.kind != NodeKind::Deployment || self.bloc_safety() >= *min_safety
            }
            _ => true,
        })
    }

    /// Allocates up to `max` points to `node` if it is open and permitted.
    pub fn allocate(&mut self, node: &TechNode, max: u32) -> u32 {
        if self.pooled_away() || self.completed(&node.id) || !self.unlocked(node) || !self.allowed_by_treaties(node) {
            return 0;
        }
        let amount = self.points.min(self.remaining(node)).min(max);
        if amount > 0 {
            *self.orders.rnd_allocation.entry(node.id.clone()).or_default() += amount;
            self.points -= amount;
        }
        amount
    }

    pub fn fill(&mut self, node: &TechNode) -> u32 {
        self.allocate(node, u32::MAX)
    }

    pub fn nodes(&self, lane: Lane, kind: NodeKind) -> Vec<&'a TechNode> {
        let mut nodes: Vec<&TechNode> = self
            .scenario
            .tech_tree
            .iter()
            .filter(|n| n.lane == lane && n.kind == kind)
            .collect();
        nodes.sort_by(|a, b| (a.level, &a.id).cmp(&(b.level, &b.id)));
        nodes
    }

    pub fn open_nodes(&self, kind: NodeKind) -> Vec<&'a TechNode> {
        let mut nodes: Vec<&TechNode> = self
            .scenario
            .tech_tree
            .iter()
            .filter(|n| n.kind == kind && !self.completed(&n.id) && self.unlocked(n))
            .collect();
        nodes.sort_by(|a, b| (a.level, &a.id).cmp(&(b.level, &b.id)));
        nodes
    }

    /// Lane with the highest Basic level, then the most progress towards the next level.
    pub fn fastest_lane(&self, tie_break: impl FnOnce() -> Lane) -> Lane {
        let key = |lane: Lane| {
            let next = self.next_basic(lane).map_or(u32::MAX, |n| self.progress_points(&n.id));
            (self.level(lane), next)
        };
        let (lm, rl) = (key(Lane::LM), key(Lane::RL));
        match lm.cmp(&rl) {
            std::cmp::Ordering::Greater => Lane::LM,
            std::cmp::Ordering::Less => Lane::RL,
            std::cmp::Ordering::Equal => tie_break(),
        }
    }

    pub fn project_for(&self, lane: Lane) -> Option<Project> {
        [Project::Agi, Project::Cais]
            .into_iter()
            .find(|&p| self.scenario.deployment_node(p).is_some_and(|n| n.lane == lane))
    }

    pub fn deployment_node(&self, project: Project) -> Option<&'a TechNode> {
        self.scenario.deployment_node(project)
    }

    fn done_by_turn_end(&self, node: &TechNode) -> bool {
        self.completed(&node.id) || (self.unlocked(node) && self.remaining(node) == 0)
    }

    /// Mirrors the engine's deployment prerequisites on the team's own progress.
    pub fn deploy_ready(&self, project: Project) -> bool {
        if self.pooled_away() {
            return false;
        }
        let top = Lane::ALL.iter().any(|&lane| {
            self.scenario
                .basic_node(lane, MAX_LEVEL)
                .is_some_and(|b| self.done_by_turn_end(b))
        });
        top && self.deployment_node(project).is_some_and(|n| self.done_by_turn_end(n))
    }

    pub fn deploy(&mut self, project: Project) -> bool {
        if !self.deploy_ready(project) || !self.binding_terms().all(|t| self.term_allows_deploy(t)) {
            return false;
        }
        self.orders.deploy = Some(DeployOrder {
            project,
            pause: Some(PauseAnswer::Decline),
        });
        true
    }

    fn term_allows_deploy(&self, term: &Term) -> bool {
        match term {
            Term::SafetyFloor { min_safety } => self.bloc_safety() >= *min_safety,
            _ => true,
        }
    }

    /// Terms of Active treaties this team complies with.
    fn binding_terms(&self) -> impl Iterator<Item = &'a Term> + '_ {
        let me = self.me();
        self.view
            .treaties
            .iter()
            .filter(move |t| t.status == TreatyStatus::Active && t.parties.contains(me))
            .filter(|t| self.orders.stance(t.id) == crate::orders::TreatyStance::Comply)
            .flat_map(|t| t.terms.iter())
    }

    pub fn same_bloc(&self, other: &TeamId) -> bool {
        self.scenario.same_bloc(self.me(), other)
    }

    /// Safety nodes known to be completed within the team's bloc.
    pub fn bloc_safety(&self) -> u32 {
        self.scenario
            .tech_tree
            .iter()
            .filter(|n| n.kind == NodeKind::Safety)
            .filter(|n| {
                self.completed(&n.id)
                    || self
                        .view
                        .others
                        .values()
                        .any(|o| self.same_bloc(&o.id) && o.public_completions.contains(&n.id))
            })
            .count() as u32
    }

    /// Highest publicly known Basic level of another team.
    pub fn public_level(&self, team: &TeamId) -> u8 {
        let Some(other) = self.view.others.get(team) else {
            return 0;
        };
        Lane::ALL
            .iter()
            .map(|&lane| {
                (1..=MAX_LEVEL)
                    .take_while(|&l| {
                        self.scenario
                            .basic_node(lane, l)
                            .is_some_and(|n| other.public_completions.contains(&n.id))
                    })
                    .last()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Highest Basic level in the team's own bloc as far as it knows.
    pub fn bloc_level(&self) -> u8 {
        self.view
            .others
            .keys()
            .filter(|o| self.same_bloc(o))
            .map(|o| self.public_level(o))
            .chain(std::iter::once(self.top_level()))
            .max()
            .unwrap_or(0)
    }

    /// The opposing team with the highest public level; lowest id on ties.
    pub fn rival_leader(&self) -> Option<(&'a TeamId, u8)> {
        let mut best: Option<(&TeamId, u8)> = None;
        for id in self.view.others.keys() {
            if self.same_bloc(id) {
                continue;
            }
            let level = self.public_level(id);
            if best.is_none_or(|(_, l)| level > l) {
                best = Some((id, level));
            }
        }
        best
    }

    /// Uncontrolled corporation of this State's bloc.
    pub fn own_corp(&self) -> Option<&'a TeamId> {
        if !self.is_state() || self.own.team.ppp_partner.is_some() {
            return None;
        }
        self.view
            .others
            .values()
            .find(|o| {
                o.kind == TeamKind::Corporation
                    && o.allegiance.as_ref() == Some(self.me())
                    && o.controlled_by.is_empty()
                    && o.ppp_partner.is_none()
            })
            .map(|o| &o.id)
    }

    pub fn is_election_state(&self) -> bool {
        self.scenario.election_state().is_some_and(|t| &t.id == self.me())
    }

    pub fn actions_left(&self) -> usize {
        MAX_ACTIONS - self.orders.actions.len()
    }

    pub fn can_afford(&self, kind: &ActionKind) -> bool {
        let spec = self.scenario.action(kind.action_type());
        if spec.state_only && !self.is_state() {
            return false;
        }
        spec.budget_cost * kind.units() <= self.budget && spec.soft_cost <= self.soft && spec.hard_cost <= self.hard
    }

    /// Adds the action if a slot is free and it is affordable; secret when allowed.
    pub fn act(&mut self, kind: ActionKind, secret: bool) -> bool {
        if self.actions_left() == 0 || !self.can_afford(&kind) {
            return false;
        }
        let spec = self.scenario.action(kind.action_type());
        self.budget -= spec.budget_cost * kind.units();
        self.soft -= spec.soft_cost;
        self.hard -= spec.hard_cost;
        let action = if secret && spec.secret_allowed {
            PolicyAction::secret(kind)
        } else {
            PolicyAction::public(kind)
        };
        self.orders.actions.push(action);
        true
    }

    /// Units of an `amount`-taking action the remaining budget pays for.
    pub fn affordable_units(&self, kind: crate::scenario::ActionType, cap: u32) -> u32 {
        let cost = self.scenario.action(kind).budget_cost;
        if cost == 0 {
            cap
        } else {
            (self.budget / cost).min(cap)
        }
    }

    /// Invests in whichever input currently limits R&D capacity.
    pub fn invest_in_bottleneck(&mut self, secret: bool) -> bool {
        use crate::scenario::ActionType;
        let r = &self.own.team.resources;
        let compute_bound = self.own.team.effective_compute() * 2 <= r.talent + r.data;
        let (kind, ty) = if compute_bound {
            (ActionKind::InvestCompute { amount: 0 }, ActionType::InvestCompute)
        } else if r.talent <= r.data {
            (ActionKind::InvestTalent { amount: 0 }, ActionType::InvestTalent)
        } else {
            (ActionKind::InvestData { amount: 0 }, ActionType::InvestData)
        };
        let units = self.affordable_units(ty, 6);
        if units == 0 {
            return false;
        }
        let kind = match kind {
            ActionKind::InvestCompute { .. } => ActionKind::InvestCompute { amount: units },
            ActionKind::InvestTalent { .. } => ActionKind::InvestTalent { amount: units },
            _ => ActionKind::InvestData { amount: units },
        };
        self.act(kind, secret)
    }

    /// Pools the bloc's R&D: nationalisation, or a partnership for the election State.
    pub fn pool_rnd(&mut self) -> bool {
        let Some(corp) = self.own_corp().cloned() else {
            return false;
        };
        let kind = if self.is_election_state() {
            ActionKind::FormPpp { corp }
        } else {
            ActionKind::Nationalise { corp }
        };
        self.act(kind, false)
    }

    /// A corporation agrees to a partnership with its own State.
    pub fn consent_to_partnership(&mut self) {
        if self.own.team.kind == TeamKind::Corporation {
            if let Some(state) = &self.own.team.allegiance {
                self.orders.ppp_consent = BTreeSet::from([state.clone()]);
            }
        }
    }

    /// Worst open concern, own concerns first.
    pub fn worst_concern(&self) -> Option<crate::ids::ConcernId> {
        self.view
            .concerns
            .iter()
            .filter(|c| !c.mitigated)
            .max_by(|a, b| {
                let key = |c: &crate::state::Concern| (self.same_bloc(&c.owner) || &c.owner == self.me(), c.severity);
                key(a).cmp(&key(b)).then(b.id.cmp(&a.id))
            })
            .map(|c| c.id)
    }

    /// Stability lost per turn to the concerns still open.
    pub fn open_drain(&self) -> i32 {
        self.view.concerns.iter().filter(|c| !c.mitigated).map(|c| c.severity as i32).sum()
    }
}
