"""Deterministic four-team AI-race wargame engine.

Game data crosses the boundary as plain dicts and lists in the same JSON
shapes the HTTP server and event logs use.
"""

from ._irsim import (
    AGENT_KINDS,
    Game,
    IrsimError,
    Scenario,
    knowledge_view,
    monte_carlo,
    new_game,
    replay,
    resolve_turn,
    run_game,
    state_hash,
    validate_orders,
)

__all__ = [
    "AGENT_KINDS",
    "Game",
    "IrsimError",
    "Scenario",
    "knowledge_view",
    "monte_carlo",
    "new_game",
    "replay",
    "resolve_turn",
    "run_game",
    "state_hash",
    "validate_orders",
]
