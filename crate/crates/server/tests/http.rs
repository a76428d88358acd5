use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use irsim_core::Scenario;
use irsim_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
}

impl Client {
    fn new() -> Self {
        Self {
            app: router(AppState::new(None)),
        }
    }

    async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut request = Request::builder().method(method).uri(uri);
        if let Some(token) = token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        let body = match body {
            Some(v) => {
                request = request.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let response = self.app.clone().oneshot(request.body(body).unwrap()).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn ok(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> Value {
        let (status, value) = self.call(method, uri, token, body).await;
        assert_eq!(status, StatusCode::OK, "{method} {uri}: {value}");
        value
    }

    async fn create(&self, body: Value) -> (String, String) {
        let created = self.ok("POST", "/sessions", None, Some(body)).await;
        (
            created["session_id"].as_str().unwrap().to_owned(),
            created["facilitator_token"].as_str().unwrap().to_owned(),
        )
    }

    async fn join(&self, id: &str, team: &str) -> String {
        let joined = self.ok("POST", &format!("/sessions/{id}/join"), None, Some(json!({ "team": team }))).await;
        joined["token"].as_str().unwrap().to_owned()
    }

    async fn advance(&self, id: &str, token: &str) -> Value {
        self.ok("POST", &format!("/sessions/{id}/advance"), Some(token), Some(json!({}))).await
    }

    async fn view(&self, id: &str, token: &str) -> Value {
        self.ok("GET", &format!("/sessions/{id}/view"), Some(token), None).await
    }
}

fn empty_orders(team: &str, turn: u32) -> Value {
    json!({ "team": team, "turn": turn })
}

fn events_of_kind<'a>(events: &'a Value, kind: &str) -> Vec<&'a Value> {
    events
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["kind"] == kind)
        .collect()
}

#[tokio::test]
async fn create_join_and_view() {
    let client = Client::new();
    let (id, fac) = client.create(json!({ "seed": 3 })).await;
    let usa = client.join(&id, "usa").await;

    let seat = client.view(&id, &usa).await;
    assert_eq!(seat["phase"], "Lobby");
    assert_eq!(seat["view"]["viewer"], json!({ "Team": "usa" }));
    assert!(seat["view"].get("full_state").is_none());

    let facilitator = client.view(&id, &fac).await;
    assert!(facilitator["view"]["full_state"].is_object());

    let (status, _) = client.call("GET", &format!("/sessions/{id}/view"), Some("nope"), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, body) = client.call("GET", "/sessions/missing/view", Some(&fac), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownSession");
    let (status, _) = client
        .call("POST", &format!("/sessions/{id}/join"), None, Some(json!({ "team": "atlantis" })))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sealed_orders_stay_private_until_reveal() {
    let client = Client::new();
    let (id, fac) = client.create(json!({ "seed": 11 })).await;
    let usa = client.join(&id, "usa").await;
    let prc = client.join(&id, "prc").await;
    client.advance(&id, &fac).await;
    client.advance(&id, &fac).await;

    let orders = json!({
        "team": "usa",
        "turn": 0,
        "actions": [{ "kind": { "type": "InvestTalent", "amount": 1 }, "visibility": "Secret" }],
    });
    let accepted = client.ok("POST", &format!("/sessions/{id}/orders"), Some(&usa), Some(orders)).await;
    assert_eq!(accepted["ready"]["usa"], true);
    assert_eq!(accepted["ready"]["prc"], false);

    let own = client.view(&id, &usa).await;
    assert_eq!(own["sealed"]["actions"][0]["visibility"], "Secret");
    let rival = client.view(&id, &prc).await;
    assert!(rival.get("sealed").is_none());
    assert_eq!(rival["ready"]["usa"], true);

    let (status, body) = client
        .call("POST", &format!("/sessions/{id}/orders"), Some(&prc), Some(empty_orders("usa", 0)))
        .await;
    assert_eq!(status, StatusCode::FORBIDDEN, "{body}");

    client
        .ok("POST", &format!("/sessions/{id}/orders"), Some(&prc), Some(empty_orders("prc", 0)))
        .await;
    let resolved = client.advance(&id, &fac).await;
    assert_eq!(resolved["turn"], 1);

    let secret_for = |view: &Value| {
        events_of_kind(&view["view"]["events"], "ActionResolved")
            .into_iter()
            .any(|e| e["payload"]["team"] == "usa")
    };
    assert!(secret_for(&client.view(&id, &usa).await));
    assert!(secret_for(&client.view(&id, &fac).await));
    assert!(!secret_for(&client.view(&id, &prc).await));
}

#[tokio::test]
async fn invalid_orders_report_violations() {
    let client = Client::new();
    let (id, fac) = client.create(json!({ "seed": 2 })).await;
    let usa = client.join(&id, "usa").await;
    client.advance(&id, &fac).await;
    client.advance(&id, &fac).await;
    let orders = json!({ "team": "usa", "turn": 0, "rnd_allocation": { "lm-4": 1 } });
    let (status, body) = client.call("POST", &format!("/sessions/{id}/orders"), Some(&usa), Some(orders)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["violations"][0]["code"], "LockedNode");
}

#[tokio::test]
async fn early_advance_is_a_phase_violation_unless_forced() {
    let client = Client::new();
    let (id, fac) = client.create(json!({ "seed": 4 })).await;
    let usa = client.join(&id, "usa").await;
    client.advance(&id, &fac).await;
    client.advance(&id, &fac).await;

    let (status, body) = client
        .call("POST", &format!("/sessions/{id}/advance"), Some(&fac), Some(json!({})))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "PhaseViolation");

    let (status, _) = client
        .call("POST", &format!("/sessions/{id}/advance"), Some(&usa), Some(json!({ "force": true })))
        .await;
    assert_eq!(status, StatusCode::FORBIDDEN);

    let forced = client
        .ok("POST", &format!("/sessions/{id}/advance"), Some(&fac), Some(json!({ "force": true })))
        .await;
    assert_eq!(forced["turn"], 1);
    assert_eq!(forced["phase"], "Negotiation");
    assert!(!forced["events"].as_array().unwrap().is_empty());

    let (status, _) = client
        .call("POST", &format!("/sessions/{id}/orders"), Some(&usa), Some(empty_orders("usa", 1)))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn agent_controlled_seats_cannot_be_joined() {
    let client = Client::new();
    let (id, fac) = client
        .create(json!({ "seed": 9, "agents": { "prc": "Racer", "tencent": "Racer" } }))
        .await;
    let (status, _) = client
        .call("POST", &format!("/sessions/{id}/join"), None, Some(json!({ "team": "prc" })))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    client.advance(&id, &fac).await;
    client.advance(&id, &fac).await;
    let resolved = client.advance(&id, &fac).await;
    let prc_acted = events_of_kind(&resolved["events"], "ProgressChanged")
        .into_iter()
        .any(|e| e["payload"]["team"] == "tencent" || e["payload"]["team"] == "prc");
    assert!(prc_acted);
}

/// Basics and the deployment node cost one point; applications are out of reach.
fn sprint_scenario() -> Value {
    let mut doc: Value = serde_json::from_str(Scenario::default_json()).unwrap();
    for node in doc["tech_tree"].as_array_mut().unwrap() {
        match node["kind"].as_str().unwrap() {
            "Basic" | "Deployment" => node["cost"] = json!(1),
            "Application" => node["cost"] = json!(500),
            _ => {}
        }
    }
    doc
}

#[tokio::test]
async fn safety_roll_override_is_applied() {
    let client = Client::new();
    let (id, fac) = client.create(json!({ "seed": 21, "scenario": sprint_scenario() })).await;
    let alphabet = client.join(&id, "alphabet").await;

    let plan = [
        json!({ "rl-1": 1 }),
        json!({ "rl-2": 1 }),
        json!({ "rl-3": 1 }),
        json!({ "rl-4": 1, "agi": 1 }),
    ];
    let mut last = Value::Null;
    client.advance(&id, &fac).await;
    for (turn, allocation) in plan.iter().enumerate() {
        client.advance(&id, &fac).await;
        let mut orders = json!({ "team": "alphabet", "turn": turn, "rnd_allocation": allocation });
        if turn == 3 {
            orders["deploy"] = json!({ "project": "AGI", "pause": "Decline" });
            let over = json!({ "dice": { "dice": "2D6", "value": 12, "purpose": "Safety" } });
            let (status, _) = client
                .call("POST", &format!("/sessions/{id}/override"), Some(&alphabet), Some(over.clone()))
                .await;
            assert_eq!(status, StatusCode::FORBIDDEN);
            let bad = json!({ "dice": { "dice": "2D6", "value": 13 } });
            let (status, _) = client
                .call("POST", &format!("/sessions/{id}/override"), Some(&fac), Some(bad))
                .await;
            assert_eq!(status, StatusCode::BAD_REQUEST);
            client.ok("POST", &format!("/sessions/{id}/override"), Some(&fac), Some(over)).await;
        }
        client
            .ok("POST", &format!("/sessions/{id}/orders"), Some(&alphabet), Some(orders))
            .await;
        last = client.advance(&id, &fac).await;
    }

    let rolled = events_of_kind(&last["events"], "SafetyRolled");
    assert_eq!(rolled.len(), 1, "{}", last["events"]);
    let outcome = &rolled[0]["payload"]["record"]["outcome"];
    assert_eq!(outcome["roll"], 12);
    assert_eq!(outcome["aligned"], true);
    assert_eq!(outcome["dice"]["overridden"], true);
    assert_eq!(last["phase"], "Ended");
}
