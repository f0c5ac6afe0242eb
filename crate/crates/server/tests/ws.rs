use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

use iscore_core::dsl::parse_text;
use iscore_core::edition::compile;
use iscore_core::engine::{run, to_jsonl, TraceEvent};
use iscore_server::session::{Session, SessionConfig};
use iscore_server::ws::serve;

type Client = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

fn fixture(name: &str) -> iscore_core::model::Score {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    compile(&parse_text(&std::fs::read_to_string(path).unwrap()).unwrap()).unwrap().0
}

fn wire_schema() -> jsonschema::JSONSchema {
    let path = format!("{}/../../docs/wire-schema.json", env!("CARGO_MANIFEST_DIR"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&schema).unwrap()
}

async fn connect(addr: SocketAddr) -> Client {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn send(c: &mut Client, v: Value) {
    c.send(Message::Text(v.to_string())).await.unwrap();
}

async fn next(c: &mut Client) -> Value {
    loop {
        let m = tokio::time::timeout(Duration::from_secs(10), c.next()).await.expect("frame in time").unwrap().unwrap();
        if let Message::Text(t) = m {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Frames until `ended`, inclusive.
async fn until_ended(c: &mut Client) -> Vec<Value> {
    let mut out = Vec::new();
    loop {
        let v = next(c).await;
        let done = v["type"] == "ended";
        out.push(v);
        if done {
            return out;
        }
    }
}

fn trace_of(frames: &[Value]) -> Vec<TraceEvent> {
    frames
        .iter()
        .filter(|f| f["type"] == "trace")
        .map(|f| serde_json::from_value(f["event"].clone()).unwrap())
        .collect()
}

#[tokio::test]
async fn loop_session_ends_at_sixteen_and_replays() {
    let score = fixture("loop.isc");
    let session = Session::new(&score, &SessionConfig::default()).unwrap();
    let served = serve("127.0.0.1:0".parse().unwrap(), session, 30).await.unwrap();
    let mut a = connect(served.addr).await;
    let mut b = connect(served.addr).await;
    send(&mut a, json!({"type": "start"})).await;

    let mut frames_a = Vec::new();
    loop {
        let v = next(&mut a).await;
        if v["type"] == "tick" && v["t"] == 9 {
            send(&mut b, json!({"type": "set_var", "to": "A", "name": "finish", "value": true})).await;
        }
        let done = v["type"] == "ended";
        frames_a.push(v);
        if done {
            break;
        }
    }
    let frames_b = until_ended(&mut b).await;
    let session = served.session.await.unwrap();

    assert_eq!(frames_a, frames_b, "both clients see the same stream");
    assert_eq!(frames_a.last().unwrap(), &json!({"type": "ended", "reason": "quiescent"}));
    let trace = trace_of(&frames_a);
    assert_eq!(to_jsonl(&trace), to_jsonl(session.trace()));

    // wall-clock timing may move the input; the batches still replay exactly
    let replay = run(&score, session.script(), 1000, 0, "auto").unwrap();
    assert_eq!(to_jsonl(&replay.trace), to_jsonl(&trace));
    if session.script()[0].tick == 10 {
        assert_eq!(trace.last().unwrap().tick, 16);
    }

    let schema = wire_schema();
    for f in &frames_a {
        assert!(schema.is_valid(f), "{f}");
    }
}

#[tokio::test]
async fn errors_leave_the_session_usable() {
    let session = Session::new(&fixture("loop.isc"), &SessionConfig::default()).unwrap();
    let served = serve("127.0.0.1:0".parse().unwrap(), session, 5).await.unwrap();
    let mut c = connect(served.addr).await;
    let schema = wire_schema();

    for (frame, code) in [
        (json!({"type": "dance"}), "UNKNOWN_TYPE"),
        (json!({"kind": "start"}), "BAD_MESSAGE"),
        (json!({"type": "choose", "point": "C.end", "relation": "r5"}), "NOT_AWAITING"),
        (json!({"type": "set_var", "to": "Nobody", "name": "x", "value": 1}), "UNKNOWN_TO"),
    ] {
        send(&mut c, frame).await;
        let reply = next(&mut c).await;
        assert_eq!(reply["type"], "error");
        assert_eq!(reply["code"], code);
        assert!(schema.is_valid(&reply), "{reply}");
    }
    c.send(Message::Text("not json".into())).await.unwrap();
    assert_eq!(next(&mut c).await["code"], "BAD_MESSAGE");

    send(&mut c, json!({"type": "snapshot_request"})).await;
    let snap = next(&mut c).await;
    assert_eq!(snap["type"], "snapshot");
    assert_eq!(snap["state"]["started"], false);
    assert!(schema.is_valid(&snap), "{snap}");

    send(&mut c, json!({"type": "start"})).await;
    let first = next(&mut c).await;
    assert_eq!(first, json!({"type": "tick", "t": 0}));
    send(&mut c, json!({"type": "pause"})).await;
    send(&mut c, json!({"type": "snapshot_request"})).await;
    let snap = loop {
        let v = next(&mut c).await;
        if v["type"] == "snapshot" {
            break v;
        }
    };
    assert_eq!(snap["state"]["paused"], true);
    assert!(schema.is_valid(&snap), "{snap}");
    let frozen = snap["state"]["tick"].clone();
    tokio::time::sleep(Duration::from_millis(60)).await;
    send(&mut c, json!({"type": "snapshot_request"})).await;
    let again = loop {
        let v = next(&mut c).await;
        if v["type"] == "snapshot" {
            break v;
        }
    };
    assert_eq!(again["state"]["tick"], frozen, "no ticks while paused");
}

#[tokio::test]
async fn choice_prompt_and_choose() {
    let src = r#"
        to R {
          point start wf ch;
          to X { dur 1; relation start -> end when true dur 1 wait; }
          to Y { dur 2; relation start -> end when true dur 2 wait; }
          relation toX: start -> X.start when true dur 0 wait;
          relation toY: start -> Y.start when true dur 0 wait;
          relation X.end -> end when true dur flexible wait;
          relation Y.end -> end when true dur flexible wait;
        }"#;
    let score = compile(&parse_text(src).unwrap()).unwrap().0;
    let cfg = SessionConfig { choice_policy: "interactive".into(), ..SessionConfig::default() };
    let session = Session::new(&score, &cfg).unwrap();
    let served = serve("127.0.0.1:0".parse().unwrap(), session, 5).await.unwrap();
    let mut c = connect(served.addr).await;
    send(&mut c, json!({"type": "start"})).await;
    let prompt = loop {
        let v = next(&mut c).await;
        if v["type"] == "awaiting_choice" {
            break v;
        }
    };
    assert_eq!(prompt, json!({"type": "awaiting_choice", "point": "R.start", "options": ["toX", "toY"]}));
    send(&mut c, json!({"type": "choose", "point": "R.start", "relation": "nope"})).await;
    send(&mut c, json!({"type": "choose", "point": "R.start", "relation": "toY"})).await;
    let frames = until_ended(&mut c).await;
    assert!(frames.iter().any(|f| f["code"] == "NOT_AN_OPTION"));
    let trace = trace_of(&frames);
    assert!(trace.iter().any(|e| matches!(&e.kind, iscore_core::engine::TraceKind::InstanceStarted { to, .. } if to.as_str() == "Y")));
    assert!(!trace.iter().any(|e| matches!(&e.kind, iscore_core::engine::TraceKind::InstanceStarted { to, .. } if to.as_str() == "X")));
    let session = served.session.await.unwrap();
    assert_eq!(run(&score, session.script(), 100, 0, "interactive").unwrap().trace, session.trace());
}
