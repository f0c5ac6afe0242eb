use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::state::InstanceId;
use crate::model::{PointId, TcrId, Tick, ToId, VarValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: Tick,
    /// Position within the tick.
    pub seq: u32,
    #[serde(flatten)]
    pub kind: TraceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceKind {
    InstanceStarted { instance: InstanceId, to: ToId, parent: Option<InstanceId> },
    InstanceEnded { instance: InstanceId, to: ToId, duration: Tick },
    InstanceCancelled { instance: InstanceId, to: ToId },
    PointExecuted { point: PointId, instance: InstanceId },
    JumpFired { relation: TcrId, from: PointId, to: PointId, activation: Tick, duration: Tick },
    JumpDiscarded { relation: TcrId, reason: DiscardReason },
    AwaitingChoice { point: PointId, instance: InstanceId, options: Vec<TcrId> },
    ChoiceResolved { point: PointId, relation: TcrId },
    ConstraintViolated { instance: InstanceId, to: ToId, detail: String },
    VarSet { to: ToId, instance: InstanceId, name: String, value: VarValue },
    PolicyApplied { to: ToId, policy: String },
    /// Control that can no longer reach its target.
    DeadPath { point: PointId, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Condition did not allow the jump at evaluation time.
    Condition,
    /// Another option of a choice point was taken.
    NotChosen,
    /// The source instance ended or was cancelled.
    Cancelled,
}

impl TraceKind {
    /// The instance an event belongs to, when there is one.
    pub fn instance(&self) -> Option<InstanceId> {
        match self {
            TraceKind::InstanceStarted { instance, .. }
            | TraceKind::InstanceEnded { instance, .. }
            | TraceKind::InstanceCancelled { instance, .. }
            | TraceKind::PointExecuted { instance, .. }
            | TraceKind::AwaitingChoice { instance, .. }
            | TraceKind::ConstraintViolated { instance, .. }
            | TraceKind::VarSet { instance, .. } => Some(*instance),
            _ => None,
        }
    }
}

pub fn to_jsonl(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(w: &mut impl Write, events: &[TraceEvent]) -> io::Result<()> {
    w.write_all(to_jsonl(events).as_bytes())
}

pub fn parse_jsonl(src: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    src.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
