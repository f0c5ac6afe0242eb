//! Domain types of an interactive score: points, temporal objects, timed
//! conditional relations, and the score that ties them together.

mod condition;
mod dateset;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use condition::{eval_condition, CmpOp, Condition, EmptyEnv, Environment, Truth, VarEnv, VarValue};
pub use dateset::{DateSet, EXACT_LIMIT};
pub use validate::{validate_score, validate_with, Diagnostic, Severity};

/// Logical time. One tick is one second in every shipped score.
pub type Tick = u64;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Temporal object id.
    ToId
);
id_type!(
    /// Point id.
    PointId
);
id_type!(
    /// Timed conditional relation id.
    TcrId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum WaitBehavior {
    /// Wait for all predecessors.
    #[serde(rename = "wa")]
    WaitAll,
    /// Wait for the first predecessor.
    #[default]
    #[serde(rename = "wf")]
    WaitFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SendBehavior {
    /// Transfer control to every enabled successor.
    #[default]
    #[serde(rename = "nch")]
    NoChoice,
    /// Transfer control to one enabled successor.
    #[serde(rename = "ch")]
    Choice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    When,
    Unless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Now,
    Wait,
}

/// Behavior when a running temporal object is activated again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstancePolicy {
    #[default]
    Allow,
    Delay,
    Cancel,
    Split,
}

impl InstancePolicy {
    pub const ALL: [InstancePolicy; 4] = [
        InstancePolicy::Allow,
        InstancePolicy::Delay,
        InstancePolicy::Cancel,
        InstancePolicy::Split,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstancePolicy::Allow => "allow",
            InstancePolicy::Delay => "delay",
            InstancePolicy::Cancel => "cancel",
            InstancePolicy::Split => "split",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DurationClass {
    Flexible,
    SemiRigid { min: Tick },
    Rigid { min: Tick, max: Tick },
    /// Uniformly sampled in `min..=max` each time the relation is armed.
    Random { min: Tick, max: Tick },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Duration {
    pub class: DurationClass,
    /// Filled in by the edition phase.
    pub nominal: Option<Tick>,
}

impl Duration {
    pub fn flexible() -> Self {
        Duration { class: DurationClass::Flexible, nominal: None }
    }

    pub fn semi_rigid(min: Tick) -> Self {
        Duration { class: DurationClass::SemiRigid { min }, nominal: None }
    }

    pub fn rigid(min: Tick, max: Tick) -> Self {
        Duration { class: DurationClass::Rigid { min, max }, nominal: None }
    }

    pub fn exactly(ticks: Tick) -> Self {
        Self::rigid(ticks, ticks)
    }

    pub fn random(min: Tick, max: Tick) -> Self {
        Duration { class: DurationClass::Random { min, max }, nominal: None }
    }

    pub fn is_flexible(&self) -> bool {
        matches!(self.class, DurationClass::Flexible)
    }

    /// Lower bound of the class.
    pub fn min(&self) -> Tick {
        match self.class {
            DurationClass::Flexible => 0,
            DurationClass::SemiRigid { min }
            | DurationClass::Rigid { min, .. }
            | DurationClass::Random { min, .. } => min,
        }
    }

    /// Upper bound of the class, `None` when unbounded.
    pub fn max(&self) -> Option<Tick> {
        match self.class {
            DurationClass::Flexible | DurationClass::SemiRigid { .. } => None,
            DurationClass::Rigid { max, .. } | DurationClass::Random { max, .. } => Some(max),
        }
    }

    pub fn without_nominal(self) -> Self {
        Duration { nominal: None, ..self }
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.class {
            DurationClass::Flexible => f.write_str("flexible"),
            DurationClass::SemiRigid { min } => write!(f, "semirigid {min}"),
            DurationClass::Rigid { min, max } if min == max => write!(f, "{min}"),
            DurationClass::Rigid { min, max } => write!(f, "rigid {min} {max}"),
            DurationClass::Random { min, max } => write!(f, "random {min} {max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSpec {
    pub id: PointId,
    /// `Any` until the edition phase has run.
    pub dates: DateSet,
    pub wait: WaitBehavior,
    pub send: SendBehavior,
    pub owner: ToId,
    pub role: PointRole,
}

/// A conditional, durated "before" edge between two points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tcr {
    pub id: TcrId,
    pub from: PointId,
    pub to: PointId,
    pub condition: Condition,
    pub duration: Duration,
    pub interpretation: Interpretation,
    pub evaluation: Evaluation,
}

impl Tcr {
    /// A `true`/`when`/`wait` relation.
    pub fn plain(id: impl Into<TcrId>, from: impl Into<PointId>, to: impl Into<PointId>, duration: Duration) -> Self {
        Tcr {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            condition: Condition::truth(),
            duration,
            interpretation: Interpretation::When,
            evaluation: Evaluation::Wait,
        }
    }

    /// Effective length once nominals are assigned.
    pub fn nominal(&self) -> Tick {
        self.duration.nominal.unwrap_or_else(|| self.duration.min())
    }
}

/// Whether control jumps along `r`, given the value of its condition.
pub fn jump_enabled(r: &Tcr, env: &dyn Environment) -> bool {
    interpretation_enables(r.interpretation, eval_condition(&r.condition, env))
}

pub fn interpretation_enables(interpretation: Interpretation, truth: Truth) -> bool {
    match interpretation {
        Interpretation::When => truth == Truth::True,
        Interpretation::Unless => truth != Truth::True,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, Literal>,
}

impl ProcessRef {
    pub fn silence() -> Self {
        ProcessRef::named("silence")
    }

    pub fn named(name: impl Into<String>) -> Self {
        ProcessRef { name: name.into(), params: BTreeMap::new() }
    }
}

impl Default for ProcessRef {
    fn default() -> Self {
        Self::silence()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalObject {
    pub id: ToId,
    pub name: String,
    pub start: PointId,
    pub end: PointId,
    pub constraint: Condition,
    pub duration: Duration,
    pub process: ProcessRef,
    pub children: BTreeSet<ToId>,
    /// Declared local variables; `Unknown` when uninitialized.
    pub vars: BTreeMap<String, VarValue>,
    pub policy: InstancePolicy,
}

/// A whole scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub root: ToId,
    pub objects: BTreeMap<ToId, TemporalObject>,
    pub points: BTreeMap<PointId, PointSpec>,
    pub relations: BTreeMap<TcrId, Tcr>,
}

impl Score {
    pub fn root_object(&self) -> Option<&TemporalObject> {
        self.objects.get(&self.root)
    }

    pub fn object(&self, id: &str) -> Option<&TemporalObject> {
        self.objects.get(id)
    }

    pub fn point(&self, id: &str) -> Option<&PointSpec> {
        self.points.get(id)
    }

    pub fn relation(&self, id: &str) -> Option<&Tcr> {
        self.relations.get(id)
    }

    /// Relations leaving `p`, in id order.
    pub fn outgoing<'a>(&'a self, p: &'a PointId) -> impl Iterator<Item = &'a Tcr> + 'a {
        self.relations.values().filter(move |r| &r.from == p)
    }

    /// Relations entering `p`, in id order.
    pub fn incoming<'a>(&'a self, p: &'a PointId) -> impl Iterator<Item = &'a Tcr> + 'a {
        self.relations.values().filter(move |r| &r.to == p)
    }

    /// Parent of every non-root object.
    pub fn parents(&self) -> BTreeMap<ToId, ToId> {
        let mut out = BTreeMap::new();
        for to in self.objects.values() {
            for child in &to.children {
                out.entry(child.clone()).or_insert_with(|| to.id.clone());
            }
        }
        out
    }

    /// `id` followed by its ancestors up to the root.
    pub fn ancestry(&self, id: &ToId) -> Vec<ToId> {
        let parents = self.parents();
        let mut chain = vec![id.clone()];
        let mut cur = id.clone();
        while let Some(p) = parents.get(&cur) {
            if chain.contains(p) {
                break;
            }
            chain.push(p.clone());
            cur = p.clone();
        }
        chain
    }

    /// True once every duration carries a nominal value.
    pub fn is_compiled(&self) -> bool {
        self.relations.values().all(|r| r.duration.nominal.is_some())
            && self.objects.values().all(|t| t.duration.nominal.is_some())
    }

    /// Drops edition results: nominals and date sets.
    pub fn strip_edition(&self) -> Score {
        let mut s = self.clone();
        for r in s.relations.values_mut() {
            r.duration = r.duration.without_nominal();
        }
        for t in s.objects.values_mut() {
            t.duration = t.duration.without_nominal();
        }
        for p in s.points.values_mut() {
            p.dates = DateSet::Any;
        }
        s
    }
}

/// Incremental construction of scores in code.
#[derive(Debug, Clone)]
pub struct ScoreBuilder {
    score: Score,
}

impl ScoreBuilder {
    pub fn new(root: impl Into<ToId>) -> Self {
        let root = root.into();
        let mut b = ScoreBuilder {
            score: Score {
                root: root.clone(),
                objects: BTreeMap::new(),
                points: BTreeMap::new(),
                relations: BTreeMap::new(),
            },
        };
        b.insert_object(root, None, Duration::flexible());
        b
    }

    fn insert_object(&mut self, id: ToId, parent: Option<&ToId>, duration: Duration) {
        let start = PointId(format!("{id}.start"));
        let end = PointId(format!("{id}.end"));
        for (pid, role) in [(&start, PointRole::Start), (&end, PointRole::End)] {
            self.score.points.insert(
                pid.clone(),
                PointSpec {
                    id: pid.clone(),
                    dates: DateSet::Any,
                    wait: WaitBehavior::WaitFirst,
                    send: SendBehavior::NoChoice,
                    owner: id.clone(),
                    role,
                },
            );
        }
        self.score.objects.insert(
            id.clone(),
            TemporalObject {
                id: id.clone(),
                name: id.0.clone(),
                start,
                end,
                constraint: Condition::truth(),
                duration,
                process: ProcessRef::silence(),
                children: BTreeSet::new(),
                vars: BTreeMap::new(),
                policy: InstancePolicy::Allow,
            },
        );
        if let Some(p) = parent {
            if let Some(parent) = self.score.objects.get_mut(p) {
                parent.children.insert(id);
            }
        }
    }

    /// Adds a child object with points `<id>.start` and `<id>.end`.
    pub fn object(mut self, id: impl Into<ToId>, parent: impl Into<ToId>, duration: Duration) -> Self {
        let parent = parent.into();
        self.insert_object(id.into(), Some(&parent), duration);
        self
    }

    pub fn edit_object(mut self, id: &str, f: impl FnOnce(&mut TemporalObject)) -> Self {
        if let Some(t) = self.score.objects.get_mut(id) {
            f(t);
        }
        self
    }

    pub fn edit_point(mut self, id: &str, f: impl FnOnce(&mut PointSpec)) -> Self {
        if let Some(p) = self.score.points.get_mut(id) {
            f(p);
        }
        self
    }

    pub fn relation(mut self, r: Tcr) -> Self {
        self.score.relations.insert(r.id.clone(), r);
        self
    }

    pub fn build(self) -> Score {
        self.score
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(interpretation: Interpretation) -> Tcr {
        Tcr {
            interpretation,
            condition: Condition::var("finish"),
            ..Tcr::plain("r", "a", "b", Duration::exactly(0))
        }
    }

    #[test]
    fn when_with_false_does_not_jump() {
        let env = VarEnv::new("A").bind("finish", VarValue::Bool(false));
        assert!(!jump_enabled(&rel(Interpretation::When), &env));
    }

    #[test]
    fn unless_jumps_on_unknown() {
        assert!(jump_enabled(&rel(Interpretation::Unless), &VarEnv::new("A")));
    }

    #[test]
    fn unless_with_true_does_not_jump() {
        let env = VarEnv::new("A").bind("finish", VarValue::Bool(true));
        assert!(!jump_enabled(&rel(Interpretation::Unless), &env));
    }

    #[test]
    fn builder_wires_points() {
        let s = ScoreBuilder::new("A").object("B", "A", Duration::exactly(3)).build();
        assert_eq!(s.point("B.start").unwrap().owner, ToId::from("B"));
        assert!(s.object("A").unwrap().children.contains("B"));
        assert_eq!(s.ancestry(&ToId::from("B")), vec![ToId::from("B"), ToId::from("A")]);
    }
}
