use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn irsim(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_irsim"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn hash_line(text: &str) -> String {
    text.lines()
        .rev()
        .find_map(|l| l.strip_prefix("state hash ").or_else(|| l.strip_prefix("hash      ")))
        .expect("a hash line")
        .trim()
        .to_owned()
}

#[test]
fn sim_writes_stats_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let csv = dir.path().join("runs.csv");
    let out = irsim(
        &[
            "sim", "--agents", "treaty,racer,racer,treaty", "--runs", "20", "--seed", "5",
            "--out", stats.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ],
        "",
    );
    stdout(&out);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(doc["schema"], "irsim-stats/1");
    assert_eq!(doc["stats"]["n_runs"], 20);
    assert_eq!(doc["agents"]["alphabet"], "TreatySeeker");
    let total: u64 = doc["stats"]["outcome_counts"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(total, 20);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 21);

    let again = irsim(&["sim", "--agents", "treaty,racer,racer,treaty", "--runs", "20", "--seed", "5"], "");
    let printed: serde_json::Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(printed, doc);
}

#[test]
fn unknown_agents_are_rejected() {
    let out = irsim(&["sim", "--agents", "gambler", "--runs", "1"], "");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gambler"));
}

fn hotseat(log: &Path, input: &str) -> String {
    let out = irsim(
        &[
            "play", "--hotseat", "--seed", "8", "--agent", "prc=racer", "--agent", "tencent=racer",
            "--agent", "alphabet=treaty", "--log", log.to_str().unwrap(),
        ],
        input,
    );
    stdout(&out)
}

#[test]
fn hotseat_game_replays_from_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("game.irlog");
    let mut input = String::from("\n{\"rnd_allocation\": {\"lm-9\": 1}}\n{\"rnd_allocation\": {\"lm-1\": 8}}\n");
    for _ in 0..8 {
        input.push_str("\nagent racer\n");
    }
    let transcript = hotseat(&log, &input);
    assert!(transcript.contains("unknown node `lm-9`"), "{transcript}");
    assert!(transcript.contains("Game over on turn"));
    let live = hash_line(&transcript);

    let replayed = stdout(&irsim(&["replay", log.to_str().unwrap()], ""));
    assert_eq!(hash_line(&replayed), live);

    let early = stdout(&irsim(&["replay", log.to_str().unwrap(), "--to-turn", "1"], ""));
    assert!(early.contains("turn      1 of"), "{early}");
    let json = stdout(&irsim(&["replay", log.to_str().unwrap(), "--to-turn", "1", "--json"], ""));
    let state: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(state["turn"], 1);
    assert!(state["progress"]["usa"]["lm-1"]["points"].as_u64().unwrap() >= 8);

    let past_end = irsim(&["replay", log.to_str().unwrap(), "--to-turn", "99"], "");
    assert!(!past_end.status.success());
}

#[test]
fn hotseat_stops_cleanly_when_input_runs_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = irsim(&["play", "--hotseat", "--log", dir.path().join("g.irlog").to_str().unwrap()], "\npass\n");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("input ended"));
}

#[test]
fn play_requires_hotseat() {
    let out = irsim(&["play"], "");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--hotseat"));
}

fn assert_matches_schema(value: &serde_json::Value, schema: &serde_json::Value, path: &str) {
    let Some(props) = schema.get("properties").and_then(|p| p.as_object()) else {
        return;
    };
    let object = value.as_object().unwrap_or_else(|| panic!("{path} is not an object"));
    for key in schema["required"].as_array().into_iter().flatten() {
        let key = key.as_str().unwrap();
        assert!(object.contains_key(key), "{path}.{key} is missing");
    }
    if schema["additionalProperties"] == false {
        for key in object.keys() {
            assert!(props.contains_key(key), "{path}.{key} is not in the schema");
        }
    }
    for (key, sub) in props {
        if let Some(v) = object.get(key) {
            assert_matches_schema(v, sub, &format!("{path}.{key}"));
        }
    }
}

#[test]
fn stats_output_follows_the_published_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../../../docs/stats.schema.json")).unwrap();
    let out = stdout(&irsim(&["sim", "--agents", "racer,hawk,safety,spy", "--runs", "12"], ""));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_matches_schema(&doc, &schema, "$");
    assert_eq!(doc["schema"], schema["properties"]["schema"]["const"]);
    let point = &doc["stats"]["stability_trajectory"][0];
    assert_matches_schema(point, &schema["properties"]["stats"]["properties"]["stability_trajectory"]["items"], "$.point");
}
