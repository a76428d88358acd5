mod hotseat;

use std::collections::BTreeMap;
use std::io::{self, IsTerminal};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use irsim_core::mc::{lineup, monte_carlo_report, parse_agents, runs_to_csv};
use irsim_core::{
    load_scenario, replay_to_turn, state_hash, AgentKind, EventLog, LogHeader, LogWriter, OutcomeStats, Scenario,
    TeamId,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "irsim", version, about = "Four-team AI-race strategy wargame simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo batch of scripted-agent games and write aggregate statistics.
    Sim(SimArgs),
    /// Play a game at one terminal, passing the keyboard between teams.
    Play(PlayArgs),
    /// Host multiplayer sessions over HTTP with a WebSocket push channel.
    Serve(ServeArgs),
    /// Rebuild a game state from an `.irlog` event log.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Scenario JSON; the bundled default when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// One agent for every team, or one per team in roster order.
    #[arg(long, default_value = "racer")]
    agents: String,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Master seed; run i plays seed splitmix64(seed + i).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Statistics JSON destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-run CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlayArgs {
    /// Hot-seat mode: every human team shares this terminal.
    #[arg(long)]
    hotseat: bool,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Hand a team to a scripted agent, e.g. `--agent prc=racer`. Repeatable.
    #[arg(long = "agent", value_name = "TEAM=KIND")]
    agents: Vec<String>,
    /// Write the event log here as the game goes.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Directory for per-session scenario, event log and transcript files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    log: PathBuf,
    /// Stop after this many turns.
    #[arg(long)]
    to_turn: Option<u32>,
    /// Scenario the log was recorded with. Defaults to a `scenario.json` next
    /// to the log, then to the bundled scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Print the whole state as JSON instead of a summary.
    #[arg(long)]
    json: bool,
}

fn read_scenario(path: Option<&Path>) -> Result<Scenario> {
    match path {
        None => Ok(Scenario::default_scenario()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            load_scenario(&text).with_context(|| format!("loading scenario {}", p.display()))
        }
    }
}

#[derive(Serialize)]
struct StatsDocument<'a> {
    schema: &'static str,
    scenario: &'a str,
    scenario_digest: String,
    agents: BTreeMap<TeamId, AgentKind>,
    runs: u64,
    master_seed: u64,
    stats: &'a OutcomeStats,
}

fn sim(args: SimArgs) -> Result<()> {
    let scenario = read_scenario(args.scenario.as_deref())?;
    let kinds = parse_agents(&args.agents)?;
    let agents = lineup(&scenario, &kinds)?;
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let parallelism = args
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = monte_carlo_report(&scenario, &agents, args.runs, args.seed, parallelism)?;
    let doc = StatsDocument {
        schema: "irsim-stats/1",
        scenario: &scenario.name,
        scenario_digest: scenario.digest(),
        agents: agents.iter().map(|(t, a)| (t.clone(), a.kind)).collect(),
        runs: args.runs,
        master_seed: args.seed,
        stats: &report.stats,
    };
    let json = serde_json::to_string_pretty(&doc)?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, runs_to_csv(&report.runs)?).with_context(|| format!("writing {}", path.display()))?;
    }
    if args.out.is_some() {
        let s = &report.stats;
        eprintln!(
            "{} runs: {}",
            s.n_runs,
            s.outcome_counts
                .iter()
                .map(|(k, v)| format!("{k} {v}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(())
}

fn parse_bot(spec: &str) -> Result<(TeamId, AgentKind)> {
    let (team, kind) = spec
        .split_once('=')
        .with_context(|| format!("`{spec}` is not of the form TEAM=KIND"))?;
    Ok((TeamId::new(team.trim()), kind.trim().parse()?))
}

fn play(args: PlayArgs) -> Result<()> {
    if !args.hotseat {
        bail!("only hot-seat play runs in the terminal; pass --hotseat, or use `irsim serve` for networked play");
    }
    let scenario = read_scenario(args.scenario.as_deref())?;
    let bots = args.agents.iter().map(|s| parse_bot(s)).collect::<Result<BTreeMap<_, _>>>()?;
    for team in bots.keys() {
        if scenario.team(team).is_none() {
            bail!("unknown team `{team}`");
        }
    }
    let log = match &args.log {
        Some(path) => Some(LogWriter::create(path, &LogHeader::new(&scenario, args.seed))?),
        None => None,
    };
    let options = hotseat::Options {
        seed: args.seed,
        bots,
        clear_screen: io::stdout().is_terminal(),
    };
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    hotseat::play(&scenario, options, stdin, stdout, log)?;
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(irsim_server::serve(addr, args.data_dir))?;
    Ok(())
}

fn replay_scenario(args: &ReplayArgs) -> Result<Scenario> {
    if let Some(path) = &args.scenario {
        return read_scenario(Some(path));
    }
    let sibling = args.log.with_file_name("scenario.json");
    if sibling.is_file() {
        return read_scenario(Some(&sibling));
    }
    Ok(Scenario::default_scenario())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let log = EventLog::read(&args.log).with_context(|| format!("reading {}", args.log.display()))?;
    let scenario = replay_scenario(&args)?;
    let turn = args.to_turn.unwrap_or_else(|| log.turns());
    if turn > log.turns() {
        bail!("the log holds {} complete turns; cannot replay to turn {turn}", log.turns());
    }
    let state = replay_to_turn(&scenario, &log, turn)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&state)?);
        return Ok(());
    }
    println!("scenario  {} ({})", scenario.name, log.header.scenario_digest);
    println!("seed      {}", log.header.seed);
    println!("turn      {} of {} logged (year {})", state.turn, log.turns(), state.year);
    println!("stability {}", state.stability);
    match &state.outcome {
        Some(o) => println!("outcome   {} on turn {}", o.kind.label(), o.turn),
        None => println!("outcome   none yet"),
    }
    for d in &state.deployments {
        let o = &d.outcome;
        println!(
            "deployed  {} {:?} on turn {}: rolled {} vs {} ({})",
            o.team,
            d.project,
            d.turn,
            o.roll,
            o.threshold,
            if o.aligned { "aligned" } else { "misaligned" }
        );
    }
    println!("hash      {}", state_hash(&state));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sim(args) => sim(args),
        Command::Play(args) => play(args),
        Command::Serve(args) => serve(args),
        Command::Replay(args) => replay(args),
    }
}
