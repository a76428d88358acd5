//! Python bindings. Structured values cross the boundary as the same JSON
//! documents the server and event logs use, decoded into dicts and lists.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use irsim_core::engine::TurnInputs;
use irsim_core::mc::{agent_seed, lineup, monte_carlo_report, parse_agents, Lineup};
use irsim_core::orders::validate_orders as check_orders;
use irsim_core::{
    self as core, AgentConfig, AgentKind, AgentMemory, AgentPolicy, EventLog, GameEvent, GameState, LogHeader,
    RngState, TeamId, TurnOrders, Viewer,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyString};
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(_irsim, IrsimError, PyValueError, "Raised for invalid scenarios, orders, logs or agents.");

fn fail(e: impl Display) -> PyErr {
    IrsimError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(fail)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text = if let Ok(s) = value.cast::<PyString>() {
        s.to_string()
    } else {
        value.py().import("json")?.call_method1("dumps", (value,))?.extract::<String>()?
    };
    serde_json::from_str(&text).map_err(fail)
}

/// A validated scenario: roster, tech tree, shocks and constants.
#[pyclass(frozen, skip_from_py_object, module = "irsim")]
#[derive(Clone)]
pub struct Scenario {
    inner: core::Scenario,
}

#[pymethods]
impl Scenario {
    /// The bundled default scenario.
    #[staticmethod]
    fn default() -> Self {
        Self {
            inner: core::Scenario::default_scenario(),
        }
    }

    /// Loads and validates a scenario from JSON text or an equivalent dict.
    #[staticmethod]
    fn from_json(source: &Bound<'_, PyAny>) -> PyResult<Self> {
        let text = match source.cast::<PyString>() {
            Ok(s) => s.to_string(),
            Err(_) => source.py().import("json")?.call_method1("dumps", (source,))?.extract()?,
        };
        core::load_scenario(&text).map(|inner| Self { inner }).map_err(fail)
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(fail)?;
        core::load_scenario(&text).map(|inner| Self { inner }).map_err(fail)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// SHA-256 of the canonical scenario JSON.
    #[getter]
    fn digest(&self) -> String {
        self.inner.digest()
    }

    #[getter]
    fn teams(&self) -> Vec<String> {
        self.inner.team_ids().iter().map(ToString::to_string).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, digest={}…)", self.inner.name, &self.inner.digest()[..12])
    }
}

fn scenario_or_default(scenario: Option<&Scenario>) -> core::Scenario {
    scenario.map_or_else(core::Scenario::default_scenario, |s| s.inner.clone())
}

fn parse_kind(value: &Bound<'_, PyAny>) -> PyResult<AgentKind> {
    value.extract::<String>()?.parse().map_err(fail)
}

/// Accepts `"racer"`, `"racer,treaty,..."`, a list of kinds in roster order,
/// or a dict from team id to kind.
fn parse_lineup(scenario: &core::Scenario, agents: &Bound<'_, PyAny>) -> PyResult<Lineup> {
    if let Ok(dict) = agents.cast::<PyDict>() {
        let mut out = Lineup::new();
        for (team, kind) in dict.iter() {
            let team = TeamId::new(team.extract::<String>()?);
            if scenario.team(&team).is_none() {
                return Err(fail(format!("unknown team `{team}`")));
            }
            out.insert(team, AgentPolicy::new(parse_kind(&kind)?, AgentConfig::default()));
        }
        return lineup_complete(scenario, out);
    }
    let kinds = if let Ok(s) = agents.cast::<PyString>() {
        parse_agents(&s.to_string()).map_err(fail)?
    } else {
        agents.try_iter()?.map(|k| parse_kind(&k?)).collect::<PyResult<Vec<_>>>()?
    };
    lineup(scenario, &kinds).map_err(fail)
}

fn lineup_complete(scenario: &core::Scenario, agents: Lineup) -> PyResult<Lineup> {
    match scenario.team_ids().into_iter().find(|t| !agents.contains_key(t)) {
        Some(t) => Err(fail(format!("no agent for team `{t}`"))),
        None => Ok(agents),
    }
}

fn parse_viewer(team: Option<String>) -> Viewer {
    team.map_or(Viewer::Facilitator, |t| Viewer::Team(TeamId::new(t)))
}

/// Reads orders keyed by team, filling in `team` and `turn` when absent.
fn parse_orders(orders: &Bound<'_, PyAny>, turn: u32) -> PyResult<BTreeMap<TeamId, TurnOrders>> {
    let dict = orders.cast::<PyDict>()?;
    let mut out = BTreeMap::new();
    for (team, body) in dict.iter() {
        let team = TeamId::new(team.extract::<String>()?);
        let mut value: serde_json::Value = from_py(&body)?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("team").or_insert_with(|| team.to_string().into());
            obj.entry("turn").or_insert_with(|| turn.into());
        }
        let parsed: TurnOrders = serde_json::from_value(value).map_err(fail)?;
        out.insert(team, parsed);
    }
    Ok(out)
}

fn read_log(source: &str) -> PyResult<EventLog> {
    if source.trim_start().starts_with('{') {
        EventLog::parse(source).map_err(fail)
    } else {
        EventLog::read(source).map_err(fail)
    }
}

/// A game in progress: the current state plus every event emitted so far.
#[pyclass(module = "irsim")]
pub struct Game {
    scenario: core::Scenario,
    state: GameState,
    events: Vec<GameEvent>,
    turn_start: usize,
    seed: u64,
}

#[pymethods]
impl Game {
    #[new]
    #[pyo3(signature = (scenario = None, seed = 0))]
    fn new(scenario: Option<&Scenario>, seed: u64) -> Self {
        let scenario = scenario_or_default(scenario);
        let (state, created) = core::new_game(&scenario, seed);
        Self {
            scenario,
            state,
            events: vec![created],
            turn_start: 0,
            seed,
        }
    }

    /// Rebuilds a game from an `.irlog` path or its JSON-lines text.
    #[staticmethod]
    #[pyo3(signature = (log, scenario = None))]
    fn from_log(log: &str, scenario: Option<&Scenario>) -> PyResult<Self> {
        let scenario = scenario_or_default(scenario);
        let log = read_log(log)?;
        let state = core::replay(&scenario, &log).map_err(fail)?;
        let turn_start = log
            .events
            .iter()
            .rposition(|e| e.turn < state.turn)
            .map_or(0, |i| i + 1);
        Ok(Self {
            scenario,
            seed: log.header.seed,
            events: log.events,
            turn_start,
            state,
        })
    }

    #[getter]
    fn turn(&self) -> u32 {
        self.state.turn
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.seed
    }

    #[getter]
    fn is_over(&self) -> bool {
        self.state.is_over()
    }

    #[getter]
    fn scenario(&self) -> Scenario {
        Scenario {
            inner: self.scenario.clone(),
        }
    }

    #[getter]
    fn outcome<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state.outcome)
    }

    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state)
    }

    fn state_hash(&self) -> String {
        core::state_hash(&self.state)
    }

    /// Every event so far, including facilitator-only ones.
    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.events)
    }

    /// What `team` knows now, or the facilitator's view when `team` is None.
    #[pyo3(signature = (team = None))]
    fn view<'py>(&self, py: Python<'py>, team: Option<String>) -> PyResult<Bound<'py, PyAny>> {
        let view = core::knowledge_view(&self.state, &self.events[self.turn_start..], &parse_viewer(team))
            .map_err(fail)?;
        to_py(py, &view)
    }

    /// Violations in one team's orders; an empty list when they are legal.
    fn validate<'py>(&self, py: Python<'py>, team: String, orders: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let dict = PyDict::new(py);
        dict.set_item(&team, orders)?;
        let parsed = parse_orders(dict.as_any(), self.state.turn)?;
        let orders = &parsed[&TeamId::new(team)];
        match check_orders(&self.scenario, &self.state, orders) {
            Ok(()) => Ok(PyList::empty(py).into_any()),
            Err(violations) => to_py(py, &violations),
        }
    }

    /// Orders a scripted agent of the given kind would submit for `team` now.
    fn agent_orders<'py>(&self, py: Python<'py>, team: String, kind: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let kind = parse_kind(kind)?;
        let team = TeamId::new(team);
        let index = self
            .scenario
            .team_ids()
            .iter()
            .position(|t| *t == team)
            .ok_or_else(|| fail(format!("unknown team `{team}`")))?;
        let view = core::knowledge_view(&self.state, &self.events[self.turn_start..], &Viewer::Team(team))
            .map_err(fail)?;
        let mut rng = RngState::from_seed(agent_seed(self.seed.wrapping_add(u64::from(self.state.turn)), index));
        let orders = AgentPolicy::new(kind, AgentConfig::default()).decide(
            &self.scenario,
            &view,
            &mut AgentMemory::default(),
            &mut rng,
        );
        to_py(py, &orders)
    }

    /// Resolves the current turn. Teams missing from `orders` pass. Returns
    /// the events of the turn.
    #[pyo3(signature = (orders = None, overrides = None, injected_shock = None))]
    fn resolve<'py>(
        &mut self,
        py: Python<'py>,
        orders: Option<&Bound<'py, PyAny>>,
        overrides: Option<&Bound<'py, PyAny>>,
        injected_shock: Option<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut all = match orders {
            Some(o) => parse_orders(o, self.state.turn)?,
            None => BTreeMap::new(),
        };
        for team in self.scenario.team_ids() {
            all.entry(team.clone())
                .or_insert_with(|| TurnOrders::empty(team, self.state.turn));
        }
        let inputs = TurnInputs {
            overrides: match overrides {
                Some(o) => from_py(o)?,
                None => Vec::new(),
            },
            injected_shock: injected_shock.as_deref().map(Into::into),
        };
        let (next, events) = core::resolve_turn_with(&self.scenario, &self.state, &all, &inputs).map_err(fail)?;
        self.state = next;
        self.turn_start = self.events.len();
        self.events.extend(events);
        to_py(py, &self.events[self.turn_start..])
    }

    /// The event log as JSON-lines text, header first.
    fn to_jsonl(&self) -> PyResult<String> {
        let log = EventLog::from_events(LogHeader::new(&self.scenario, self.seed), self.events.clone()).map_err(fail)?;
        Ok(log.to_jsonl())
    }

    fn write_log(&self, path: PathBuf) -> PyResult<()> {
        let log = EventLog::from_events(LogHeader::new(&self.scenario, self.seed), self.events.clone()).map_err(fail)?;
        log.write(path).map_err(fail)
    }

    fn __repr__(&self) -> String {
        format!("Game(seed={}, turn={}, over={})", self.seed, self.state.turn, self.state.is_over())
    }
}

/// Starts a game; returns `(state, GameCreated event)`.
#[pyfunction]
#[pyo3(signature = (scenario = None, seed = 0))]
fn new_game<'py>(py: Python<'py>, scenario: Option<&Scenario>, seed: u64) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let (state, created) = core::new_game(&scenario_or_default(scenario), seed);
    Ok((to_py(py, &state)?, to_py(py, &created)?))
}

/// Pure turn resolution on dict states; returns `(next_state, events)`.
#[pyfunction]
#[pyo3(signature = (state, orders, scenario = None, overrides = None))]
fn resolve_turn<'py>(
    py: Python<'py>,
    state: &Bound<'py, PyAny>,
    orders: &Bound<'py, PyAny>,
    scenario: Option<&Scenario>,
    overrides: Option<&Bound<'py, PyAny>>,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let scenario = scenario_or_default(scenario);
    let state: GameState = from_py(state)?;
    let orders = parse_orders(orders, state.turn)?;
    let inputs = TurnInputs {
        overrides: match overrides {
            Some(o) => from_py(o)?,
            None => Vec::new(),
        },
        injected_shock: None,
    };
    let (next, events) = core::resolve_turn_with(&scenario, &state, &orders, &inputs).map_err(fail)?;
    Ok((to_py(py, &next)?, to_py(py, &events)?))
}

/// Plays one complete game with scripted agents.
#[pyfunction]
#[pyo3(signature = (agents, seed, scenario = None))]
fn run_game<'py>(
    py: Python<'py>,
    agents: &Bound<'py, PyAny>,
    seed: u64,
    scenario: Option<&Scenario>,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario_or_default(scenario);
    let agents = parse_lineup(&scenario, agents)?;
    let record = py.detach(|| core::run_game(&scenario, &agents, seed)).map_err(fail)?;
    to_py(py, &record)
}

/// Outcome statistics over `runs` games. With `per_run=True` returns
/// `{"stats": ..., "runs": [...]}` instead.
#[pyfunction]
#[pyo3(signature = (agents, runs, master_seed = 0, scenario = None, parallelism = 1, per_run = false))]
fn monte_carlo<'py>(
    py: Python<'py>,
    agents: &Bound<'py, PyAny>,
    runs: u64,
    master_seed: u64,
    scenario: Option<&Scenario>,
    parallelism: usize,
    per_run: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario_or_default(scenario);
    let agents = parse_lineup(&scenario, agents)?;
    let report = py
        .detach(|| monte_carlo_report(&scenario, &agents, runs, master_seed, parallelism))
        .map_err(fail)?;
    if per_run {
        to_py(py, &report)
    } else {
        to_py(py, &report.stats)
    }
}

/// Folds an `.irlog` (path or text) back into a state dict.
#[pyfunction]
#[pyo3(signature = (log, to_turn = None, scenario = None))]
fn replay<'py>(py: Python<'py>, log: &str, to_turn: Option<u32>, scenario: Option<&Scenario>) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario_or_default(scenario);
    let log = read_log(log)?;
    let state = match to_turn {
        Some(t) => core::replay_to_turn(&scenario, &log, t),
        None => core::replay(&scenario, &log),
    }
    .map_err(fail)?;
    to_py(py, &state)
}

/// Canonical SHA-256 of a state dict.
#[pyfunction]
fn state_hash(state: &Bound<'_, PyAny>) -> PyResult<String> {
    let state: GameState = from_py(state)?;
    Ok(core::state_hash(&state))
}

/// Filters a state and the latest turn's events down to what `team` knows.
#[pyfunction]
#[pyo3(signature = (state, events, team = None))]
fn knowledge_view<'py>(
    py: Python<'py>,
    state: &Bound<'py, PyAny>,
    events: &Bound<'py, PyAny>,
    team: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let state: GameState = from_py(state)?;
    let events: Vec<GameEvent> = from_py(events)?;
    let view = core::knowledge_view(&state, &events, &parse_viewer(team)).map_err(fail)?;
    to_py(py, &view)
}

/// Violations in one team's orders against a state dict.
#[pyfunction]
#[pyo3(signature = (state, orders, scenario = None))]
fn validate_orders<'py>(
    py: Python<'py>,
    state: &Bound<'py, PyAny>,
    orders: &Bound<'py, PyAny>,
    scenario: Option<&Scenario>,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = scenario_or_default(scenario);
    let state: GameState = from_py(state)?;
    let orders: TurnOrders = from_py(orders)?;
    match check_orders(&scenario, &state, &orders) {
        Ok(()) => Ok(PyList::empty(py).into_any()),
        Err(violations) => to_py(py, &violations),
    }
}

#[pymodule]
fn _irsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IrsimError", m.py().get_type::<IrsimError>())?;
    m.add("AGENT_KINDS", AgentKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add_class::<Scenario>()?;
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(new_game, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_turn, m)?)?;
    m.add_function(wrap_pyfunction!(run_game, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(state_hash, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_view, m)?)?;
    m.add_function(wrap_pyfunction!(validate_orders, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::ffi::CString;

    use pyo3::types::PyModule;

    use super::*;

    fn with_module(body: &str) {
        Python::initialize();
        Python::attach(|py| {
            let module = PyModule::new(py, "_irsim").unwrap();
            _irsim(&module).unwrap();
            let globals = PyDict::new(py);
            globals.set_item("irsim", module).unwrap();
            let code = CString::new(body).unwrap();
            if let Err(e) = py.run(&code, Some(&globals), None) {
                e.print(py);
                panic!("python assertion failed");
            }
        });
    }

    #[test]
    fn game_steps_match_a_scripted_run() {
        with_module(
            r#"
record = irsim.run_game("spymaster", 11)
game = irsim.Game(seed=11)
for orders in record["orders"]:
    game.resolve(orders)
assert game.is_over
assert game.state_hash() == irsim.state_hash(record["final_state"])
assert irsim.state_hash(irsim.replay(game.to_jsonl())) == game.state_hash()
"#,
        );
    }

    #[test]
    fn errors_surface_as_irsim_error() {
        with_module(
            r#"
for bad in (lambda: irsim.monte_carlo("gambler", 1),
            lambda: irsim.Game().resolve({"usa": {"rnd_allocation": {"agi": 1}}}),
            lambda: irsim.Game().resolve(injected_shock="nope"),
            lambda: irsim.Scenario.from_json("{}")):
    try:
        bad()
    except irsim.IrsimError:
        continue
    raise AssertionError("expected IrsimError")
assert issubclass(irsim.IrsimError, ValueError)
"#,
        );
    }

    #[test]
    fn team_views_hide_secret_allocations() {
        with_module(
            r#"
game = irsim.Game(seed=2)
game.resolve({"prc": {"rnd_allocation": {"rl-1": 3}, "rnd_secret": True}})
assert "rl-1" in str(game.view("prc")["events"])
assert "rl-1" not in str(game.view("usa")["events"])
assert "rl-1" in str(game.view()["events"])
"#,
        );
    }
}
