//! Everything needed to reproduce a hosted game offline: the seed plus the
//! orders and facilitator inputs of every resolved turn.

use std::collections::BTreeMap;

use irsim_core::{new_game, resolve_turn_with, EngineError, GameState, Scenario, TeamId, TurnInputs, TurnOrders};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub orders: BTreeMap<TeamId, TurnOrders>,
    #[serde(default)]
    pub inputs: TurnInputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub scenario_digest: String,
    pub seed: u64,
    pub turns: Vec<TranscriptTurn>,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript was recorded against scenario {0}")]
    DigestMismatch(String),
    #[error("turn {turn}: {source}")]
    Engine { turn: usize, source: EngineError },
}

impl Transcript {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        Self {
            scenario_digest: scenario.digest(),
            seed,
            turns: Vec::new(),
        }
    }

    /// Re-runs every recorded turn through the engine.
    pub fn replay(&self, scenario: &Scenario) -> Result<GameState, TranscriptError> {
        if scenario.digest() != self.scenario_digest {
            return Err(TranscriptError::DigestMismatch(self.scenario_digest.clone()));
        }
        let (mut state, _) = new_game(scenario, self.seed);
        for (i, turn) in self.turns.iter().enumerate() {
            let (next, _) = resolve_turn_with(scenario, &state, &turn.orders, &turn.inputs)
                .map_err(|source| TranscriptError::Engine { turn: i + 1, source })?;
            state = next;
        }
        Ok(state)
    }
}
