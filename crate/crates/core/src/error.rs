use thiserror::Error;

use crate::dice::DiceOverride;
use crate::ids::{ShockId, TeamId};
use crate::orders::Violation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl ScenarioError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> &str {
        match self {
            Self::Schema { path, .. } | Self::Validation { path, .. } => path,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("game already ended")]
    GameOver,
    #[error("orders for turn {got} submitted while the game is at turn {expected}")]
    StaleOrders { expected: u32, got: u32 },
    #[error("missing orders from: {}", .0.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(", "))]
    MissingOrders(Vec<TeamId>),
    #[error("orders keyed under `{key}` belong to `{team}`")]
    MismatchedOrders { key: TeamId, team: TeamId },
    #[error("unknown team `{0}`")]
    UnknownTeam(TeamId),
    #[error("dice override {0:?} is out of range")]
    InvalidOverride(DiceOverride),
    #[error("unknown shock `{0}`")]
    UnknownShock(ShockId),
    #[error("orders from `{team}` failed validation: {violations:?}")]
    InvalidOrders {
        team: TeamId,
        violations: Vec<Violation>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ViewError {
    #[error("unknown viewer `{0}`")]
    UnknownViewer(TeamId),
}

/// Failure of a standalone adjudication operation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("`{0}` is not a State")]
    NotAState(TeamId),
    #[error("`{team}` has {have} hard power, needs {need}")]
    InsufficientHardPower { team: TeamId, have: u32, need: u32 },
    #[error("`{corp}` does not share the allegiance of `{actor}`")]
    WrongAllegiance { actor: TeamId, corp: TeamId },
    #[error("`{0}` is already controlled")]
    AlreadyControlled(TeamId),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("deployment prerequisites unmet for `{0}`")]
    PrerequisitesUnmet(TeamId),
    #[error("`{0}` has not answered the pause offer")]
    PauseNotAnswered(TeamId),
    #[error("game already ended")]
    GameOver,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("unknown agent `{0}` (expected racer, safety, spymaster, treaty, hawk or idle)")]
    UnknownAgent(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error("no agent assigned to team `{0}`")]
    MissingAgent(TeamId),
    #[error("agent of team `{team}` produced invalid orders on turn {turn}: {violations:?}")]
    InvalidAgentOrders {
        team: TeamId,
        turn: u32,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("event {got} appended where {expected} was expected")]
    SequenceGap { expected: u64, got: u64 },
    #[error("log was recorded against scenario {log}, not {scenario}")]
    DigestMismatch { log: String, scenario: String },
    #[error("event {0} is corrupt")]
    CorruptEvent(u64),
    #[error("malformed log header: {0}")]
    BadHeader(String),
    #[error("log does not start with a GameCreated event for seed {0}")]
    MissingGenesis(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
