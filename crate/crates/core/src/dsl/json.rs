//! Canonical JSON form of a score (`.isc.json`).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::parser::parse_condition;
use crate::model::{
    DateSet, Duration, DurationClass, Evaluation, InstancePolicy, Interpretation, PointId, PointRole,
    PointSpec, ProcessRef, Score, SendBehavior, Tcr, TcrId, TemporalObject, Tick, ToId, VarValue,
    WaitBehavior,
};

pub const SCORE_FORMAT: &str = "iscore/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    /// JSON path of the offending value, e.g. `$.relations[0].from`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreDoc {
    format: String,
    root: String,
    objects: Vec<ObjectDoc>,
    points: Vec<PointDoc>,
    relations: Vec<RelationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edition: Option<EditionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    name: String,
    start: String,
    end: String,
    duration: DurationClass,
    #[serde(default = "true_expr")]
    constraint: String,
    #[serde(default)]
    process: ProcessRef,
    #[serde(default)]
    children: Vec<String>,
    #[serde(default)]
    vars: BTreeMap<String, VarValue>,
    #[serde(default)]
    policy: InstancePolicy,
}

fn true_expr() -> String {
    "true".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    id: String,
    owner: String,
    role: PointRole,
    #[serde(default)]
    wait: WaitBehavior,
    #[serde(default)]
    send: SendBehavior,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDoc {
    id: String,
    from: String,
    to: String,
    #[serde(default = "true_expr")]
    condition: String,
    duration: DurationClass,
    interpretation: Interpretation,
    evaluation: Evaluation,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EditionDoc {
    #[serde(default)]
    relations: BTreeMap<String, Tick>,
    #[serde(default)]
    objects: BTreeMap<String, Tick>,
    #[serde(default)]
    dates: BTreeMap<String, DateSet>,
}

/// Canonical JSON document. Keys are sorted and arrays are in id order.
pub fn to_json(s: &Score) -> Value {
    let mut edition = EditionDoc::default();
    for r in s.relations.values() {
        if let Some(n) = r.duration.nominal {
            edition.relations.insert(r.id.0.clone(), n);
        }
    }
    for t in s.objects.values() {
        if let Some(n) = t.duration.nominal {
            edition.objects.insert(t.id.0.clone(), n);
        }
    }
    for p in s.points.values() {
        if p.dates != DateSet::Any {
            edition.dates.insert(p.id.0.clone(), p.dates.clone());
        }
    }
    let has_edition = !(edition.relations.is_empty() && edition.objects.is_empty() && edition.dates.is_empty());
    let doc = ScoreDoc {
        format: SCORE_FORMAT.into(),
        root: s.root.0.clone(),
        objects: s
            .objects
            .values()
            .map(|t| ObjectDoc {
                id: t.id.0.clone(),
                name: t.name.clone(),
                start: t.start.0.clone(),
                end: t.end.0.clone(),
                duration: t.duration.class,
                constraint: t.constraint.to_string(),
                process: t.process.clone(),
                children: t.children.iter().map(|c| c.0.clone()).collect(),
                vars: t.vars.clone(),
                policy: t.policy,
            })
            .collect(),
        points: s
            .points
            .values()
            .map(|p| PointDoc {
                id: p.id.0.clone(),
                owner: p.owner.0.clone(),
                role: p.role,
                wait: p.wait,
                send: p.send,
            })
            .collect(),
        relations: s
            .relations
            .values()
            .map(|r| RelationDoc {
                id: r.id.0.clone(),
                from: r.from.0.clone(),
                to: r.to.0.clone(),
                condition: r.condition.to_string(),
                duration: r.duration.class,
                interpretation: r.interpretation,
                evaluation: r.evaluation,
            })
            .collect(),
        edition: has_edition.then_some(edition),
    };
    serde_json::to_value(doc).expect("score document serializes")
}

pub fn to_json_string(s: &Score) -> String {
    let mut out = serde_json::to_string_pretty(&to_json(s)).expect("score document serializes");
    out.push('\n');
    out
}

pub fn from_json_str(text: &str) -> Result<Score, Vec<SchemaError>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![SchemaError { path: "$".into(), message: format!("invalid JSON: {e}") }]
    })?;
    from_json(&value)
}

/// Reads a score document, reporting every schema violation with its path.
pub fn from_json(doc: &Value) -> Result<Score, Vec<SchemaError>> {
    let doc: ScoreDoc = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        vec![SchemaError {
            path: if path == "." { "$".into() } else { format!("$.{path}") },
            message: e.into_inner().to_string(),
        }]
    })?;
    let mut errors = Vec::new();
    let err = |errors: &mut Vec<SchemaError>, path: String, message: String| {
        errors.push(SchemaError { path, message })
    };
    if doc.format != SCORE_FORMAT {
        err(&mut errors, "$.format".into(), format!("expected `{SCORE_FORMAT}`"));
    }
    let edition = doc.edition.unwrap_or_default();

    let mut points = BTreeMap::new();
    for (i, p) in doc.points.iter().enumerate() {
        let id = PointId(p.id.clone());
        if points.contains_key(&id) {
            err(&mut errors, format!("$.points[{i}].id"), format!("duplicate point `{}`", p.id));
        }
        let dates = edition.dates.get(&p.id).cloned().unwrap_or(DateSet::Any);
        points.insert(
            id.clone(),
            PointSpec { id, dates, wait: p.wait, send: p.send, owner: ToId(p.owner.clone()), role: p.role },
        );
    }

    let mut objects = BTreeMap::new();
    for (i, o) in doc.objects.iter().enumerate() {
        let id = ToId(o.id.clone());
        if objects.contains_key(&id) {
            err(&mut errors, format!("$.objects[{i}].id"), format!("duplicate object `{}`", o.id));
        }
        for (field, pid) in [("start", &o.start), ("end", &o.end)] {
            if !points.contains_key(pid.as_str()) {
                err(&mut errors, format!("$.objects[{i}].{field}"), format!("unknown point `{pid}`"));
            }
        }
        let constraint = match parse_condition(&o.constraint) {
            Ok(c) => c,
            Err(e) => {
                err(&mut errors, format!("$.objects[{i}].constraint"), e.to_string());
                continue;
            }
        };
        objects.insert(
            id.clone(),
            TemporalObject {
                id,
                name: o.name.clone(),
                start: PointId(o.start.clone()),
                end: PointId(o.end.clone()),
                constraint,
                duration: Duration { class: o.duration, nominal: edition.objects.get(&o.id).copied() },
                process: o.process.clone(),
                children: o.children.iter().map(|c| ToId(c.clone())).collect(),
                vars: o.vars.clone(),
                policy: o.policy,
            },
        );
    }
    for (i, o) in doc.objects.iter().enumerate() {
        for (j, c) in o.children.iter().enumerate() {
            if !objects.contains_key(c.as_str()) {
                err(&mut errors, format!("$.objects[{i}].children[{j}]"), format!("unknown object `{c}`"));
            }
        }
    }
    for (i, p) in doc.points.iter().enumerate() {
        if !objects.contains_key(p.owner.as_str()) {
            err(&mut errors, format!("$.points[{i}].owner"), format!("unknown object `{}`", p.owner));
        }
    }
    if !objects.contains_key(doc.root.as_str()) {
        err(&mut errors, "$.root".into(), format!("unknown object `{}`", doc.root));
    }

    let mut relations = BTreeMap::new();
    for (i, r) in doc.relations.iter().enumerate() {
        let id = TcrId(r.id.clone());
        if relations.contains_key(&id) {
            err(&mut errors, format!("$.relations[{i}].id"), format!("duplicate relation `{}`", r.id));
        }
        for (field, pid) in [("from", &r.from), ("to", &r.to)] {
            if !points.contains_key(pid.as_str()) {
                err(&mut errors, format!("$.relations[{i}].{field}"), format!("unknown point `{pid}`"));
            }
        }
        let condition = match parse_condition(&r.condition) {
            Ok(c) => c,
            Err(e) => {
                err(&mut errors, format!("$.relations[{i}].condition"), e.to_string());
                continue;
            }
        };
        relations.insert(
            id.clone(),
            Tcr {
                id,
                from: PointId(r.from.clone()),
                to: PointId(r.to.clone()),
                condition,
                duration: Duration { class: r.duration, nominal: edition.relations.get(&r.id).copied() },
                interpretation: r.interpretation,
                evaluation: r.evaluation,
            },
        );
    }

    if errors.is_empty() {
        Ok(Score { root: ToId(doc.root), objects, points, relations })
    } else {
        Err(errors)
    }
}
