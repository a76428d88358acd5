//! Deterministic engine for a four-team strategy wargame about racing to
//! transformative AI: scenario loading, turn resolution, fog-of-war views,
//! scripted agents, Monte-Carlo batches and append-only event logs.

pub mod agents;
pub mod canon;
pub mod dice;
pub mod engine;
pub mod error;
pub mod event;
pub mod ids;
pub mod mc;
pub mod orders;
pub mod replay;
pub mod rng;
pub mod scenario;
pub mod state;
pub mod view;

pub use dice::{opposed_check, CheckOutcome, DiceOverride, DiceSource, DieRoll, TwoDiceRoll};
pub use engine::{resolve_turn, resolve_turn_with, TurnInputs};
pub use agents::{builtin_agent, AgentConfig, AgentKind, AgentMemory, AgentPolicy};
pub use error::{ActionError, AgentError, EngineError, ReplayError, RunError, ScenarioError, ViewError};
pub use replay::{replay, replay_to_turn, state_hash, EventLog, LogHeader, LogWriter};
pub use mc::{monte_carlo, run_game, GameRecord, OutcomeStats};
pub use event::{apply_event, EventBody, GameEvent, Visibility};
pub use ids::{ConcernId, NodeId, ShockId, TeamId, TreatyId};
pub use orders::{ActionKind, PolicyAction, TurnOrders};
pub use rng::RngState;
pub use scenario::{load_scenario, validate_scenario, Scenario};
pub use state::{new_game, GameOutcome, GameState, OutcomeKind};
pub use view::{knowledge_view, KnowledgeView, Viewer};
