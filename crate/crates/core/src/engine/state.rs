use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Environment, PointId, Score, TcrId, Tick, ToId, VarValue};

pub type InstanceId = u64;
pub type JumpId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    Running,
    Ended,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: InstanceId,
    pub to: ToId,
    pub parent: Option<InstanceId>,
    pub start_tick: Tick,
    pub status: InstanceStatus,
    /// Local variables; lookups fall back to the parent instance.
    pub vars: BTreeMap<String, VarValue>,
    pub sampled_durations: BTreeMap<TcrId, Tick>,
    /// Whether the object's constraint was false at the last check.
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpState {
    Armed,
    Fired,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingJump {
    pub id: JumpId,
    pub tcr: TcrId,
    /// Instance owning the source point when the jump was armed.
    pub source: InstanceId,
    pub activation: Tick,
    pub deadline: Tick,
    pub state: JumpState,
}

/// Join state of a wait-all point in one instance context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitSet {
    pub point: PointId,
    /// Ending instance for an end point, parent instance for a start point.
    pub context: Option<InstanceId>,
    pub expected: BTreeSet<TcrId>,
    pub arrived: BTreeSet<TcrId>,
}

impl WaitSet {
    pub fn is_complete(&self) -> bool {
        !self.arrived.is_empty() && self.expected.is_subset(&self.arrived)
    }

    pub fn is_dead(&self) -> bool {
        self.arrived.is_empty() && self.expected.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwaitingChoice {
    pub point: PointId,
    pub instance: InstanceId,
    pub since: Tick,
    pub options: Vec<TcrId>,
}

/// Start of an object postponed until its running instance ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayedActivation {
    pub to: ToId,
    pub parent: Option<InstanceId>,
    pub requested: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    /// The next tick to execute.
    pub tick: Tick,
    pub seed: u64,
    pub choice_policy: String,
    #[serde(with = "score_doc")]
    pub score: Score,
    pub started: bool,
    pub instances: BTreeMap<InstanceId, Instance>,
    pub next_instance: InstanceId,
    pub jumps: BTreeMap<JumpId, PendingJump>,
    pub next_jump: JumpId,
    pub wait_sets: Vec<WaitSet>,
    pub awaiting: Vec<AwaitingChoice>,
    pub delayed: Vec<DelayedActivation>,
    pub choice_rng: ChaCha8Rng,
    pub duration_rng: ChaCha8Rng,
}

impl EngineState {
    pub fn running(&self) -> impl Iterator<Item = &Instance> {
        self.instances.values().filter(|i| i.status == InstanceStatus::Running)
    }

    pub fn running_of<'a>(&'a self, to: &'a ToId) -> impl Iterator<Item = &'a Instance> + 'a {
        self.running().filter(move |i| &i.to == to)
    }

    pub fn is_running(&self, id: InstanceId) -> bool {
        self.instances.get(&id).is_some_and(|i| i.status == InstanceStatus::Running)
    }

    /// `id` followed by its ancestors.
    pub fn lineage(&self, id: InstanceId) -> Vec<InstanceId> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            out.push(c);
            cur = self.instances.get(&c).and_then(|i| i.parent);
        }
        out
    }

    /// Running descendants of `id`, parents before children.
    pub fn descendants(&self, id: InstanceId) -> Vec<InstanceId> {
        let mut out = Vec::new();
        let mut frontier = vec![id];
        while let Some(p) = frontier.pop() {
            for i in self.running().filter(|i| i.parent == Some(p)) {
                out.push(i.id);
                frontier.push(i.id);
            }
        }
        out
    }

    pub fn env(&self, instance: InstanceId) -> InstanceEnv<'_> {
        InstanceEnv { state: self, instance }
    }

    /// No live instance, armed jump, pending choice or postponed start.
    pub fn is_quiescent(&self) -> bool {
        self.started
            && self.running().next().is_none()
            && self.jumps.is_empty()
            && self.awaiting.is_empty()
            && self.delayed.is_empty()
    }
}

/// Variable scope of an instance and its ancestors.
pub struct InstanceEnv<'a> {
    state: &'a EngineState,
    instance: InstanceId,
}

impl Environment for InstanceEnv<'_> {
    fn lookup(&self, name: &str) -> VarValue {
        for id in self.state.lineage(self.instance) {
            if let Some(v) = self.state.instances.get(&id).and_then(|i| i.vars.get(name)) {
                return v.clone();
            }
        }
        VarValue::Unknown
    }
}

/// Scores travel in their JSON document form.
mod score_doc {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use crate::dsl::{from_json, to_json};
    use crate::model::Score;

    pub fn serialize<S: Serializer>(s: &Score, ser: S) -> Result<S::Ok, S::Error> {
        to_json(s).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Score, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        from_json(&v).map_err(|errs| {
            D::Error::custom(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
        })
    }
}
