//! Append-only event logs and their replay.
//!
//! On disk a log is JSON Lines (`.irlog`): the header on the first line, then
//! one canonical event object per line carrying a `crc32` of its own payload.
//! A torn tail is tolerated and cut back to the last complete turn.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canon;
use crate::error::ReplayError;
use crate::event::{apply_event, EventBody, GameEvent};
use crate::scenario::Scenario;
use crate::state::{new_game, GameState};

pub const SCHEMA_VERSION: &str = "irlog/1";
const CRC_FIELD: &str = "crc32";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub created_at: String,
}

impl LogHeader {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        let created_at = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .unwrap_or_default();
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            scenario_digest: scenario.digest(),
            seed,
            created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub header: LogHeader,
    pub events: Vec<GameEvent>,
}

impl EventLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            events: Vec::new(),
        }
    }

    /// Builds a log from a complete event sequence, checking contiguity.
    pub fn from_events(header: LogHeader, events: impl IntoIterator<Item = GameEvent>) -> Result<Self, ReplayError> {
        let mut log = Self::new(header);
        for event in events {
            log.append_event(event)?;
        }
        Ok(log)
    }

    pub fn next_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq + 1)
    }

    pub fn append_event(&mut self, event: GameEvent) -> Result<(), ReplayError> {
        let expected = self.next_seq();
        if event.seq != expected {
            return Err(ReplayError::SequenceGap {
                expected,
                got: event.seq,
            });
        }
        self.events.push(event);
        Ok(())
    }

    /// Number of turns fully recorded in the log.
    pub fn turns(&self) -> u32 {
        self.events
            .iter()
            .filter(|e| matches!(e.body, EventBody::RngCheckpoint { .. }))
            .map(|e| e.turn)
            .max()
            .unwrap_or(0)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = canon::to_canonical_string(&self.header);
        out.push('\n');
        for event in &self.events {
            out.push_str(&event_line(event));
            out.push('\n');
        }
        out
    }

    /// Parses `.irlog` text. Checksums are verified; an unparseable final
    /// line and any events after the last complete turn are dropped.
    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
        let header_line = lines.next().ok_or_else(|| ReplayError::BadHeader("empty log".into()))?;
        let header: LogHeader =
            serde_json::from_str(header_line).map_err(|e| ReplayError::BadHeader(e.to_string()))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(ReplayError::BadHeader(format!(
                "unsupported schema version `{}`",
                header.schema_version
            )));
        }
        let mut log = Self::new(header);
        while let Some(line) = lines.next() {
            let seq = log.next_seq();
            match parse_event_line(line, seq) {
                Ok(event) => log.append_event(event)?,
                Err(_) if lines.peek().is_none() && serde_json::from_str::<Value>(line).is_err() => break,
                Err(e) => return Err(e),
            }
        }
        log.truncate_to_complete_turn();
        Ok(log)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ReplayError> {
        let mut file = File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        file.sync_all()?;
        Ok(())
    }

    /// Drops events recorded after the last turn boundary.
    pub fn truncate_to_complete_turn(&mut self) {
        let keep = complete_prefix(&self.events);
        self.events.truncate(keep);
    }
}

/// Length of the longest prefix that ends on a turn boundary: genesis, a
/// turn's RNG checkpoint, or the end-of-game event that follows it.
fn complete_prefix(events: &[GameEvent]) -> usize {
    let mut keep = usize::from(matches!(events.first().map(|e| &e.body), Some(EventBody::GameCreated { .. })));
    for (i, e) in events.iter().enumerate() {
        if matches!(e.body, EventBody::RngCheckpoint { .. } | EventBody::GameEnded { .. }) {
            keep = i + 1;
        }
    }
    keep
}

fn is_turn_boundary(event: &GameEvent) -> bool {
    matches!(
        event.body,
        EventBody::GameCreated { .. } | EventBody::RngCheckpoint { .. } | EventBody::GameEnded { .. }
    )
}

fn event_line(event: &GameEvent) -> String {
    let payload = canon::to_canonical_string(event);
    let mut value = serde_json::to_value(event).expect("events serialize");
    if let Value::Object(map) = &mut value {
        map.insert(CRC_FIELD.to_owned(), Value::from(canon::crc32(&payload)));
    }
    canon::to_canonical_string(&value)
}

fn parse_event_line(line: &str, seq: u64) -> Result<GameEvent, ReplayError> {
    let corrupt = || ReplayError::CorruptEvent(seq);
    let mut value: Value = serde_json::from_str(line).map_err(|_| corrupt())?;
    let crc = value
        .as_object_mut()
        .and_then(|m| m.remove(CRC_FIELD))
        .and_then(|v| v.as_u64())
        .ok_or_else(corrupt)?;
    if u64::from(canon::crc32(&canon::to_canonical_string(&value))) != crc {
        return Err(corrupt());
    }
    serde_json::from_value(value).map_err(|_| corrupt())
}

/// Streams events to an `.irlog` file, syncing to disk at turn boundaries.
pub struct LogWriter {
    out: BufWriter<File>,
    next_seq: u64,
}

impl LogWriter {
    pub fn create(path: impl AsRef<Path>, header: &LogHeader) -> Result<Self, ReplayError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", canon::to_canonical_string(header))?;
        Ok(Self { out, next_seq: 0 })
    }

    pub fn append(&mut self, event: &GameEvent) -> Result<(), ReplayError> {
        if event.seq != self.next_seq {
            return Err(ReplayError::SequenceGap {
                expected: self.next_seq,
                got: event.seq,
            });
        }
        writeln!(self.out, "{}", event_line(event))?;
        self.next_seq += 1;
        if is_turn_boundary(event) {
            self.sync()?;
        }
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), ReplayError> {
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        Ok(())
    }
}

/// Rebuilds the game state recorded in `log`.
pub fn replay(scenario: &Scenario, log: &EventLog) -> Result<GameState, ReplayError> {
    replay_to_turn(scenario, log, u32::MAX)
}

/// State at the end of `turn` (or the last recorded turn, if earlier).
pub fn replay_to_turn(scenario: &Scenario, log: &EventLog, turn: u32) -> Result<GameState, ReplayError> {
    let digest = scenario.digest();
    if log.header.scenario_digest != digest {
        return Err(ReplayError::DigestMismatch {
            log: log.header.scenario_digest.clone(),
            scenario: digest,
        });
    }
    let seed = log.header.seed;
    match log.events.first().map(|e| &e.body) {
        Some(EventBody::GameCreated {
            seed: s,
            scenario_digest,
        }) if *s == seed && *scenario_digest == digest => {}
        _ => return Err(ReplayError::MissingGenesis(seed)),
    }
    let (mut state, _) = new_game(scenario, seed);
    let upto = complete_prefix(&log.events);
    for (i, event) in log.events[..upto].iter().enumerate().skip(1) {
        if event.seq != i as u64 {
            return Err(ReplayError::SequenceGap {
                expected: i as u64,
                got: event.seq,
            });
        }
        if event.turn > turn {
            break;
        }
        apply_event(&mut state, event);
    }
    Ok(state)
}

/// SHA-256 of the canonical JSON of `state`, hex encoded.
pub fn state_hash(state: &GameState) -> String {
    canon::sha256_hex(&canon::to_canonical_string(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::TurnOrders;
    use crate::resolve_turn;

    fn idle_game(turns: u32) -> (Scenario, GameState, EventLog) {
        let s = Scenario::default_scenario();
        let (mut g, created) = new_game(&s, 9);
        let mut log = EventLog::new(LogHeader::new(&s, 9));
        log.append_event(created).unwrap();
        for _ in 0..turns {
            let orders: std::collections::BTreeMap<_, _> =
                s.teams.iter().map(|t| (t.id.clone(), TurnOrders::empty(t.id.clone(), g.turn))).collect();
            let (next, events) = resolve_turn(&s, &g, &orders).unwrap();
            for e in events {
                log.append_event(e).unwrap();
            }
            g = next;
        }
        (s, g, log)
    }

    #[test]
    fn replay_matches_live_state() {
        let (s, g, log) = idle_game(3);
        let replayed = replay(&s, &log).unwrap();
        assert_eq!(state_hash(&replayed), state_hash(&g));
        assert_eq!(log.turns(), 3);
    }

    #[test]
    fn jsonl_round_trip_is_lossless() {
        let (_, _, log) = idle_game(2);
        let parsed = EventLog::parse(&log.to_jsonl()).unwrap();
        assert_eq!(parsed, log);
    }

    #[test]
    fn gaps_are_rejected() {
        let (s, _, log) = idle_game(1);
        let mut other = EventLog::new(LogHeader::new(&s, 9));
        let err = other.append_event(log.events[1].clone()).unwrap_err();
        assert!(matches!(err, ReplayError::SequenceGap { expected: 0, got: 1 }));
    }

    #[test]
    fn flipped_byte_is_reported_with_its_sequence_number() {
        let (_, _, log) = idle_game(1);
        let text = log.to_jsonl();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[3] = lines[3].replace("\"turn\":1", "\"turn\":2");
        let err = EventLog::parse(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, ReplayError::CorruptEvent(2)));
    }

    #[test]
    fn torn_tail_falls_back_to_last_complete_turn() {
        let (s, _, full) = idle_game(2);
        let (_, one_turn, _) = idle_game(1);
        let text = full.to_jsonl();
        let cut = text.len() - 40;
        let log = EventLog::parse(&text[..cut]).unwrap();
        assert_eq!(log.turns(), 1);
        assert_eq!(state_hash(&replay(&s, &log).unwrap()), state_hash(&one_turn));
    }

    #[test]
    fn replay_to_turn_stops_early() {
        let (s, _, log) = idle_game(3);
        let (_, two, _) = idle_game(2);
        assert_eq!(state_hash(&replay_to_turn(&s, &log, 2).unwrap()), state_hash(&two));
    }

    #[test]
    fn foreign_scenario_is_refused() {
        let (s, _, log) = idle_game(1);
        let mut other = s.clone();
        other.constants.horizon_turns += 1;
        assert!(matches!(replay(&other, &log), Err(ReplayError::DigestMismatch { .. })));
    }
}
