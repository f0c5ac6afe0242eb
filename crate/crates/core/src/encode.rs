//! Qualitative scores (hierarchical objects plus Allen relations) and their
//! encoding into conditional-relation scores.
//!
//! Every encoded point waits for all its predecessors and sends control to
//! all its successors; every relation is `true`/`when`/`wait`. A strict
//! endpoint inequality becomes a semi-rigid relation of at least one tick,
//! a shared endpoint a zero-duration relation from the first operand to the
//! second.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::parse_condition;
use crate::engine::{TraceEvent, TraceKind};
use crate::model::{
    Condition, Duration, DurationClass, PointId, ProcessRef, Score, ScoreBuilder, SendBehavior, Tcr, Tick, ToId,
    WaitBehavior,
};

pub const QSCORE_FORMAT: &str = "iscore-q/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 7] = [
        AllenRelation::Before,
        AllenRelation::Meets,
        AllenRelation::Overlaps,
        AllenRelation::Starts,
        AllenRelation::During,
        AllenRelation::Finishes,
        AllenRelation::Equals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllenRelation::Before => "before",
            AllenRelation::Meets => "meets",
            AllenRelation::Overlaps => "overlaps",
            AllenRelation::Starts => "starts",
            AllenRelation::During => "during",
            AllenRelation::Finishes => "finishes",
            AllenRelation::Equals => "equals",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTemporalObject {
    pub id: ToId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_date_hint: Option<Tick>,
    #[serde(with = "duration_class")]
    pub duration: Duration,
    #[serde(default)]
    pub process: ProcessRef,
    #[serde(default = "Condition::truth", with = "condition_text")]
    pub constraint: Condition,
    #[serde(default)]
    pub children: Vec<QTemporalObject>,
}

impl QTemporalObject {
    pub fn new(id: impl Into<ToId>, duration: Duration) -> Self {
        QTemporalObject {
            id: id.into(),
            name: None,
            start_date_hint: None,
            duration,
            process: ProcessRef::silence(),
            constraint: Condition::truth(),
            children: Vec::new(),
        }
    }

    pub fn with_child(mut self, child: QTemporalObject) -> Self {
        self.children.push(child);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QRelation {
    pub relation: AllenRelation,
    pub t1: ToId,
    pub t2: ToId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QScore {
    #[serde(default = "qformat")]
    pub format: String,
    pub root: QTemporalObject,
    #[serde(default)]
    pub relations: Vec<QRelation>,
}

fn qformat() -> String {
    QSCORE_FORMAT.into()
}

impl QScore {
    pub fn new(root: QTemporalObject) -> Self {
        QScore { format: qformat(), root, relations: Vec::new() }
    }

    pub fn relate(mut self, relation: AllenRelation, t1: &str, t2: &str) -> Self {
        self.relations.push(QRelation { relation, t1: t1.into(), t2: t2.into() });
        self
    }

    /// Every object, parents before children, with its parent.
    pub fn objects(&self) -> Vec<(Option<&QTemporalObject>, &QTemporalObject)> {
        let mut out = vec![(None, &self.root)];
        let mut i = 0;
        while i < out.len() {
            let t = out[i].1;
            out.extend(t.children.iter().map(|c| (Some(t), c)));
            i += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("q-score format must be `{QSCORE_FORMAT}`, found `{0}`")]
    Format(String),
    #[error("object `{0}` is declared twice")]
    DuplicateObject(ToId),
    #[error("relation {index} refers to unknown object `{id}`")]
    UnknownObject { index: usize, id: ToId },
    #[error("relation {index} relates `{id}` to itself")]
    SelfRelation { index: usize, id: ToId },
    #[error("two encoded relations share the id `{0}`")]
    RelationIdClash(String),
}

pub fn validate_qscore(q: &QScore) -> Vec<EncodeError> {
    let mut errors = Vec::new();
    if q.format != QSCORE_FORMAT {
        errors.push(EncodeError::Format(q.format.clone()));
    }
    let mut seen = BTreeSet::new();
    for (_, t) in q.objects() {
        if !seen.insert(&t.id) {
            errors.push(EncodeError::DuplicateObject(t.id.clone()));
        }
    }
    for (index, r) in q.relations.iter().enumerate() {
        for id in [&r.t1, &r.t2] {
            if !seen.contains(id) {
                errors.push(EncodeError::UnknownObject { index, id: id.clone() });
            }
        }
        if r.t1 == r.t2 {
            errors.push(EncodeError::SelfRelation { index, id: r.t1.clone() });
        }
    }
    errors
}

fn start(t: &ToId) -> PointId {
    PointId(format!("{t}.start"))
}

fn end(t: &ToId) -> PointId {
    PointId(format!("{t}.end"))
}

/// The relations standing for `a(A, B)`.
pub fn encode_allen(a: AllenRelation, ta: &QTemporalObject, tb: &QTemporalObject) -> Vec<Tcr> {
    let (x, y) = (&ta.id, &tb.id);
    let strict = || Duration::semi_rigid(1);
    let same = || Duration::exactly(0);
    let rel = |tag: &str, from: PointId, to: PointId, d: Duration| {
        Tcr::plain(format!("{a}_{x}_{y}_{tag}"), from, to, d)
    };
    match a {
        AllenRelation::Before => vec![rel("ab", end(x), start(y), strict())],
        AllenRelation::Meets => vec![rel("ab", end(x), start(y), same())],
        AllenRelation::Equals => {
            // the shorter end waits for the longer one; a rigid zero edge both
            // ways would contradict any two different lengths
            let (long, short) = if tb.duration.min() > ta.duration.min() { (y, x) } else { (x, y) };
            vec![rel("ss", start(x), start(y), same()), rel("ee", end(long), end(short), Duration::flexible())]
        }
        AllenRelation::Starts => vec![rel("ss", start(x), start(y), same()), rel("ee", end(x), end(y), strict())],
        AllenRelation::Finishes => vec![rel("ee", end(x), end(y), same()), rel("ss", start(y), start(x), strict())],
        AllenRelation::During => vec![rel("ss", start(y), start(x), strict()), rel("ee", end(x), end(y), strict())],
        AllenRelation::Overlaps => vec![
            rel("ss", start(x), start(y), strict()),
            rel("se", start(y), end(x), strict()),
            rel("ee", end(x), end(y), strict()),
        ],
    }
}

/// Translates a q-score. Object ids are kept; relation ids are derived
/// from the ids they connect, so encoding is compositional.
pub fn encode_score(q: &QScore) -> Result<Score, Vec<EncodeError>> {
    let errors = validate_qscore(q);
    if !errors.is_empty() {
        return Err(errors);
    }
    let objects = q.objects();
    let by_id: BTreeMap<&ToId, &QTemporalObject> = objects.iter().map(|(_, t)| (&t.id, *t)).collect();

    let mut relations: Vec<Tcr> = Vec::new();
    for r in &q.relations {
        relations.extend(encode_allen(r.relation, by_id[&r.t1], by_id[&r.t2]));
    }
    let anchored: BTreeSet<PointId> = relations.iter().map(|r| r.to.clone()).collect();

    let mut b = ScoreBuilder::new(q.root.id.clone());
    for (parent, t) in &objects {
        if let Some(p) = parent {
            b = b.object(t.id.clone(), p.id.clone(), t.duration);
            // a child placed by an allen relation is only kept inside its parent
            let anchor = if anchored.contains(&start(&t.id)) { Duration::flexible() } else { Duration::exactly(0) };
            relations.push(Tcr::plain(format!("anchor_{}", t.id), start(&p.id), start(&t.id), anchor));
            relations.push(Tcr::plain(format!("up_{}", t.id), end(&t.id), end(&p.id), Duration::flexible()));
        }
        relations.push(Tcr::plain(format!("dur_{}", t.id), start(&t.id), end(&t.id), t.duration));
        b = b.edit_object(t.id.as_str(), |o| {
            o.duration = t.duration;
            o.process = t.process.clone();
            o.constraint = t.constraint.clone();
            if let Some(name) = &t.name {
                o.name = name.clone();
            }
        });
        for p in [start(&t.id), end(&t.id)] {
            b = b.edit_point(p.as_str(), |pt| {
                pt.wait = WaitBehavior::WaitAll;
                pt.send = SendBehavior::NoChoice;
            });
        }
    }

    let mut ids = BTreeSet::new();
    let mut clashes = Vec::new();
    for r in relations {
        if !ids.insert(r.id.clone()) {
            clashes.push(EncodeError::RelationIdClash(r.id.0.clone()));
        }
        b = b.relation(r);
    }
    if !clashes.is_empty() {
        return Err(clashes);
    }
    Ok(b.build())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("no completed instance of `{0}` in the trace")]
    MissingInstance(ToId),
    #[error("more than one instance of `{0}` in the trace")]
    AmbiguousInstance(ToId),
}

/// Start and end tick of the single completed instance of `to`.
pub fn observed_interval(trace: &[TraceEvent], to: &str) -> Result<(Tick, Tick), CheckError> {
    let mut starts = trace.iter().filter_map(|e| match &e.kind {
        TraceKind::InstanceStarted { instance, to: t, .. } if t.as_str() == to => Some((*instance, e.tick)),
        _ => None,
    });
    let missing = || CheckError::MissingInstance(to.into());
    let (instance, s) = starts.next().ok_or_else(missing)?;
    if starts.next().is_some() {
        return Err(CheckError::AmbiguousInstance(to.into()));
    }
    let e = trace
        .iter()
        .find_map(|e| match &e.kind {
            TraceKind::InstanceEnded { instance: i, .. } if *i == instance => Some(e.tick),
            _ => None,
        })
        .ok_or_else(missing)?;
    Ok((s, e))
}

/// Whether `start(a) = start(b) + duration(b)` holds in the trace, the
/// constraint posted for "b meets a".
pub fn meets_constraint_check(trace: &[TraceEvent], a: &str, b: &str) -> Result<bool, CheckError> {
    let (sa, _) = observed_interval(trace, a)?;
    let (sb, eb) = observed_interval(trace, b)?;
    Ok(sa == sb + (eb - sb))
}

mod duration_class {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        d.class.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration { class: DurationClass::deserialize(d)?, nominal: None })
    }
}

mod condition_text {
    use super::*;
    use serde::de::Error;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Condition, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&c.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Condition, D::Error> {
        let text = String::deserialize(d)?;
        parse_condition(&text).map_err(|e| D::Error::custom(format!("bad condition `{text}`: {e}")))
    }
}
