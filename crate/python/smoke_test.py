"""Smoke test for the Python bindings.

Build and install the extension first:

    pip install maturin
    pip install --no-build-isolation -e crates/python

then run `python python/smoke_test.py` or `pytest python/smoke_test.py`.
"""

import json
import os
import tempfile

import irsim

DOCS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "docs")


def load_schema(name):
    with open(os.path.join(DOCS, name)) as f:
        return json.load(f)


def test_scenario_round_trip():
    scenario = irsim.Scenario.default()
    assert scenario.teams == ["alphabet", "prc", "tencent", "usa"]
    again = irsim.Scenario.from_json(scenario.to_json())
    assert again.digest == scenario.digest
    assert irsim.Scenario.from_json(scenario.to_dict()).digest == scenario.digest
    broken = scenario.to_dict()
    broken["teams"] = []
    try:
        irsim.Scenario.from_json(broken)
    except irsim.IrsimError:
        pass
    else:
        raise AssertionError("an empty roster must be rejected")


def test_scripted_game_is_reproducible_step_by_step():
    record = irsim.run_game("racer", seed=42)
    final = record["final_state"]
    assert final["outcome"] is not None

    game = irsim.Game(seed=42)
    for orders in record["orders"]:
        game.resolve(orders)
    assert game.is_over
    assert game.state_hash() == irsim.state_hash(final)
    assert game.events() == record["events"]

    state, created = irsim.new_game(seed=42)
    assert created["kind"] == "GameCreated"
    for orders in record["orders"]:
        state, _ = irsim.resolve_turn(state, orders)
    assert irsim.state_hash(state) == game.state_hash()


def test_logs_replay_to_the_same_state():
    game = irsim.Game(seed=7)
    for _ in range(3):
        game.resolve({t: game.agent_orders(t, "treaty") for t in game.scenario.teams})
    text = game.to_jsonl()
    assert irsim.state_hash(irsim.replay(text)) == game.state_hash()
    assert irsim.replay(text, to_turn=1)["turn"] == 1

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "game.irlog")
        game.write_log(path)
        resumed = irsim.Game.from_log(path)
        assert resumed.turn == 3
        assert resumed.state_hash() == game.state_hash()
        assert resumed.view("usa") == game.view("usa")


def test_secret_actions_stay_hidden():
    game = irsim.Game(seed=3)
    secret = {
        "actions": [{"kind": {"type": "InvestTalent", "amount": 1}, "visibility": "Secret"}],
        "rnd_allocation": {"lm-1": 2},
        "rnd_secret": True,
    }
    assert game.validate("usa", secret) == []
    events = game.resolve({"usa": secret})
    secret_events = [e for e in events if e.get("origin", {}).get("secret")]
    assert secret_events and all(e["visibility"] == {"TeamOnly": ["usa"]} for e in secret_events)

    mine = json.dumps(game.view("usa")["events"])
    theirs = json.dumps(game.view("prc")["events"])
    assert "InvestTalent" in mine
    assert "InvestTalent" not in theirs
    assert "lm-1" in mine
    assert "lm-1" not in theirs
    assert "RngCheckpoint" in json.dumps(game.view()["events"])
    assert "RngCheckpoint" not in mine


def test_invalid_orders_are_reported():
    game = irsim.Game(seed=1)
    violations = game.validate("usa", {"rnd_allocation": {"agi": 5}})
    assert violations and violations[0]["code"] == "LockedNode"
    try:
        game.resolve({"usa": {"rnd_allocation": {"agi": 5}}})
    except irsim.IrsimError:
        pass
    else:
        raise AssertionError("resolving illegal orders must fail")
    assert game.turn == 0


def test_overrides_replace_rolls():
    game = irsim.Game(seed=5)
    events = game.resolve(overrides=[{"dice": "D6", "value": 1, "purpose": "ShockGate"}])
    (check,) = [e for e in events if e["kind"] == "ShockCheck"]
    assert check["payload"]["roll"] == {"value": 1, "overridden": True}
    assert check["payload"]["drawn"]
    assert any(e["kind"] == "ShockDrawn" for e in events)
    try:
        game.resolve(overrides=[{"dice": "2D6", "value": 13, "purpose": "Safety"}])
    except irsim.IrsimError:
        pass
    else:
        raise AssertionError("out-of-range overrides must be rejected")


def test_monte_carlo_is_deterministic_across_threads():
    one = irsim.monte_carlo("racer,racer,treaty,treaty", runs=40, master_seed=9, parallelism=1)
    four = irsim.monte_carlo(["racer", "racer", "treaty", "treaty"], runs=40, master_seed=9, parallelism=4)
    assert one == four
    assert one["n_runs"] == 40
    assert sum(one["outcome_counts"].values()) == 40

    by_team = {"usa": "treaty", "prc": "treaty", "alphabet": "racer", "tencent": "racer"}
    report = irsim.monte_carlo(by_team, runs=5, per_run=True)
    assert len(report["runs"]) == 5
    try:
        irsim.monte_carlo({"usa": "racer"}, runs=1)
    except irsim.IrsimError:
        pass
    else:
        raise AssertionError("every team needs an agent")


def test_documents_follow_the_published_schemas():
    try:
        import jsonschema
    except ImportError:
        print("jsonschema not installed; skipping schema checks")
        return
    jsonschema.validate(irsim.Scenario.default().to_dict(), load_schema("scenario.schema.json"))
    stats_schema = load_schema("stats.schema.json")
    stats = irsim.monte_carlo("racer,hawk,safety,treaty", runs=10, master_seed=4)
    jsonschema.validate(stats, stats_schema["properties"]["stats"])


if __name__ == "__main__":
    tests = [(name, fn) for name, fn in sorted(globals().items()) if name.startswith("test_")]
    for name, fn in tests:
        fn()
        print(f"ok  {name}")
    print(f"{len(tests)} passed")
