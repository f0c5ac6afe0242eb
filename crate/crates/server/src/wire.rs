//! Messages exchanged with session clients, one JSON object per text frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use iscore_core::engine::{EngineState, InstanceId, InstanceStatus, JumpState, TraceEvent};
use iscore_core::model::{PointId, TcrId, Tick, ToId, VarValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Start,
    Pause,
    Resume,
    SetVar { to: ToId, name: String, value: VarValue },
    Choose { point: PointId, relation: TcrId },
    SnapshotRequest,
}

const CLIENT_TYPES: [&str; 6] = ["start", "pause", "resume", "set_var", "choose", "snapshot_request"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    /// Not JSON, not an object, no `type`, or fields of the wrong shape.
    BadMessage,
    UnknownType,
    NotAwaiting,
    NotAnOption,
    UnknownTo,
    AlreadyStarted,
    NotStarted,
    Ended,
    Engine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Tick { t: Tick },
    Trace { event: TraceEvent },
    AwaitingChoice { point: PointId, options: Vec<TcrId> },
    Snapshot { state: Snapshot },
    Ended { reason: String },
    Error { code: ErrorCode, message: String },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error { code, message: message.into() }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Reads one client frame.
pub fn parse_client(text: &str) -> Result<ClientMessage, ServerMessage> {
    let bad = |m: String| ServerMessage::error(ErrorCode::BadMessage, m);
    let value: Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
    let Some(kind) = value.get("type") else {
        return Err(bad("missing `type`".into()));
    };
    let Some(kind) = kind.as_str().map(str::to_owned) else {
        return Err(bad("`type` must be a string".into()));
    };
    if !CLIENT_TYPES.contains(&kind.as_str()) {
        return Err(ServerMessage::error(ErrorCode::UnknownType, format!("unknown message type `{kind}`")));
    }
    serde_json::from_value(value).map_err(|e| bad(format!("{kind}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceView {
    pub id: InstanceId,
    pub to: ToId,
    pub parent: Option<InstanceId>,
    pub start_tick: Tick,
    pub status: InstanceStatus,
    pub vars: BTreeMap<String, VarValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpView {
    pub relation: TcrId,
    pub source: InstanceId,
    pub activation: Tick,
    pub deadline: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceView {
    pub point: PointId,
    pub instance: InstanceId,
    pub since: Tick,
    pub options: Vec<TcrId>,
}

/// What a client sees of the engine state: no score, no generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Next tick to execute.
    pub tick: Tick,
    pub started: bool,
    pub paused: bool,
    pub ended: Option<String>,
    pub seed: u64,
    pub choice_policy: String,
    pub instances: Vec<InstanceView>,
    pub jumps: Vec<JumpView>,
    pub awaiting: Vec<ChoiceView>,
}

impl Snapshot {
    pub fn of(st: &EngineState, started: bool, paused: bool, ended: Option<String>) -> Self {
        Snapshot {
            tick: st.tick,
            started,
            paused,
            ended,
            seed: st.seed,
            choice_policy: st.choice_policy.clone(),
            instances: st
                .instances
                .values()
                .map(|i| InstanceView {
                    id: i.id,
                    to: i.to.clone(),
                    parent: i.parent,
                    start_tick: i.start_tick,
                    status: i.status,
                    vars: i.vars.clone(),
                })
                .collect(),
            jumps: st
                .jumps
                .values()
                .filter(|j| j.state == JumpState::Armed)
                .map(|j| JumpView {
                    relation: j.tcr.clone(),
                    source: j.source,
                    activation: j.activation,
                    deadline: j.deadline,
                })
                .collect(),
            awaiting: st
                .awaiting
                .iter()
                .map(|a| ChoiceView {
                    point: a.point.clone(),
                    instance: a.instance,
                    since: a.since,
                    options: a.options.clone(),
                })
                .collect(),
        }
    }
}
