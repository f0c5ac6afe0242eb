use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DurationClass, Evaluation, PointId, PointRole, Score, ToId};
use crate::process::ProcessRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn error(code: &str, subject: impl fmt::Display, message: String) -> Self {
        Diagnostic { severity: Severity::Error, code: code.into(), subject: subject.to_string(), message }
    }

    fn warning(code: &str, subject: impl fmt::Display, message: String) -> Self {
        Diagnostic { severity: Severity::Warning, code: code.into(), subject: subject.to_string(), message }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.subject, self.message)
    }
}

/// Checks a score against the default process registry.
pub fn validate_score(s: &Score) -> Vec<Diagnostic> {
    validate_with(s, &ProcessRegistry::default())
}

/// All structural and semantic violations, sorted.
pub fn validate_with(s: &Score, processes: &ProcessRegistry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_containment(s, &mut out);
    check_points(s, &mut out);
    check_relations(s, &mut out);
    check_objects(s, processes, &mut out);
    out.sort();
    out.dedup();
    out
}

fn check_containment(s: &Score, out: &mut Vec<Diagnostic>) {
    if !s.objects.contains_key(&s.root) {
        out.push(Diagnostic::error("missing-root", &s.root, "root object is not defined".into()));
        return;
    }
    let mut parents: BTreeMap<&ToId, Vec<&ToId>> = BTreeMap::new();
    for to in s.objects.values() {
        for child in &to.children {
            if !s.objects.contains_key(child) {
                out.push(Diagnostic::error(
                    "unknown-child",
                    &to.id,
                    format!("child `{child}` is not defined"),
                ));
            }
            parents.entry(child).or_default().push(&to.id);
        }
    }
    for (child, ps) in &parents {
        if ps.len() > 1 {
            out.push(Diagnostic::error(
                "multiple-parents",
                child,
                format!("contained by {} objects", ps.len()),
            ));
        }
    }
    if parents.contains_key(&s.root) {
        out.push(Diagnostic::error("root-contained", &s.root, "the root has a parent".into()));
    }
    // every object must hang below the root
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([&s.root]);
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(to) = s.objects.get(id) {
            queue.extend(to.children.iter());
        }
    }
    for id in s.objects.keys() {
        if !seen.contains(id) {
            let code = if parents.contains_key(id) { "containment-cycle" } else { "multiple-roots" };
            out.push(Diagnostic::error(code, id, "not contained in the root object".into()));
        }
    }
}

fn check_points(s: &Score, out: &mut Vec<Diagnostic>) {
    let mut claimed: BTreeMap<&PointId, Vec<&ToId>> = BTreeMap::new();
    for to in s.objects.values() {
        for (pid, role) in [(&to.start, PointRole::Start), (&to.end, PointRole::End)] {
            claimed.entry(pid).or_default().push(&to.id);
            match s.points.get(pid) {
                None => out.push(Diagnostic::error(
                    "dangling-point",
                    &to.id,
                    format!("point `{pid}` is not defined"),
                )),
                Some(p) => {
                    if p.owner != to.id {
                        out.push(Diagnostic::error(
                            "duplicate-point-owner",
                            pid,
                            format!("used by `{}` but owned by `{}`", to.id, p.owner),
                        ));
                    }
                    if p.role != role {
                        out.push(Diagnostic::error(
                            "point-role-mismatch",
                            pid,
                            format!("has role {:?} but is the {:?} point of `{}`", p.role, role, to.id),
                        ));
                    }
                }
            }
        }
    }
    for (pid, owners) in &claimed {
        if owners.len() > 1 {
            let names: Vec<String> = owners.iter().map(|o| o.to_string()).collect();
            out.push(Diagnostic::error(
                "duplicate-point-owner",
                pid,
                format!("belongs to several objects: {}", names.join(", ")),
            ));
        }
    }
    for p in s.points.values() {
        if !claimed.contains_key(&p.id) {
            out.push(Diagnostic::error("orphan-point", &p.id, "no object uses this point".into()));
        }
    }
}

fn check_duration(subject: &str, class: DurationClass, out: &mut Vec<Diagnostic>) {
    if let DurationClass::Rigid { min, max } | DurationClass::Random { min, max } = class {
        if min > max {
            out.push(Diagnostic::error(
                "invalid-duration",
                subject,
                format!("lower bound {min} exceeds upper bound {max}"),
            ));
        }
    }
}

fn check_relations(s: &Score, out: &mut Vec<Diagnostic>) {
    let parents = s.parents();
    for r in s.relations.values() {
        for end in [&r.from, &r.to] {
            if !s.points.contains_key(end) {
                out.push(Diagnostic::error(
                    "dangling-endpoint",
                    &r.id,
                    format!("point `{end}` is not defined"),
                ));
            }
        }
        if r.evaluation == Evaluation::Now && !r.duration.is_flexible() {
            out.push(Diagnostic::error(
                "now-requires-flexible",
                &r.id,
                "only flexible relations may be evaluated `now`".into(),
            ));
        }
        check_duration(r.id.as_str(), r.duration.class, out);
        if let Some(src) = s.points.get(&r.from) {
            let scope = scope_vars(s, &parents, &src.owner);
            for v in r.condition.variables() {
                if !scope.contains(v) {
                    out.push(Diagnostic::warning(
                        "unknown-variable",
                        &r.id,
                        format!("`{v}` is not declared by `{}` or its ancestors", src.owner),
                    ));
                }
            }
        }
    }
}

fn scope_vars<'a>(s: &'a Score, parents: &BTreeMap<ToId, ToId>, owner: &ToId) -> BTreeSet<&'a str> {
    let mut vars = BTreeSet::new();
    let mut cur = Some(owner.clone());
    let mut guard = 0;
    while let Some(id) = cur {
        if let Some(to) = s.objects.get(&id) {
            vars.extend(to.vars.keys().map(String::as_str));
        }
        cur = parents.get(&id).cloned();
        guard += 1;
        if guard > s.objects.len() {
            break;
        }
    }
    vars
}

fn reachable(s: &Score, from: &PointId, to: &PointId) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if !seen.insert(p) {
            continue;
        }
        for r in s.outgoing(p) {
            if &r.to == to {
                return true;
            }
            queue.push_back(&r.to);
        }
    }
    false
}

fn check_objects(s: &Score, processes: &ProcessRegistry, out: &mut Vec<Diagnostic>) {
    let parents = s.parents();
    for to in s.objects.values() {
        check_duration(to.id.as_str(), to.duration.class, out);
        if !processes.contains(&to.process.name) {
            out.push(Diagnostic::warning(
                "unregistered-process",
                &to.id,
                format!("process `{}` is not registered", to.process.name),
            ));
        }
        let scope = scope_vars(s, &parents, &to.id);
        for v in to.constraint.variables() {
            if !scope.contains(v) {
                out.push(Diagnostic::warning(
                    "unknown-variable",
                    &to.id,
                    format!("constraint uses undeclared `{v}`"),
                ));
            }
        }
        let direct = s.outgoing(&to.start).any(|r| r.to == to.end);
        if !direct {
            if reachable(s, &to.start, &to.end) {
                out.push(Diagnostic::warning(
                    "missing-start-end",
                    &to.id,
                    "no direct start -> end relation; the end is reachable through other relations".into(),
                ));
            } else {
                out.push(Diagnostic::error(
                    "end-unreachable",
                    &to.id,
                    "no relation path leads from the start point to the end point".into(),
                ));
            }
        }
        if !to.children.is_empty() {
            let anchored = s.outgoing(&to.start).any(|r| {
                s.points
                    .get(&r.to)
                    .is_some_and(|p| p.role == PointRole::Start && to.children.contains(&p.owner))
            });
            if !anchored {
                out.push(Diagnostic::error(
                    "missing-child-anchor",
                    &to.id,
                    "no relation from the start point to the start of a child".into(),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Duration, Evaluation, ScoreBuilder, Tcr};

    fn minimal() -> Score {
        ScoreBuilder::new("A")
            .edit_object("A", |t| t.duration = Duration::exactly(0))
            .relation(Tcr::plain("r", "A.start", "A.end", Duration::exactly(0)))
            .build()
    }

    #[test]
    fn minimal_score_is_clean() {
        assert!(validate_score(&minimal()).is_empty());
    }

    #[test]
    fn shared_point_is_an_error() {
        let s = ScoreBuilder::new("A")
            .object("B", "A", Duration::flexible())
            .object("C", "A", Duration::flexible())
            .edit_object("C", |t| t.start = "B.start".into())
            .relation(Tcr::plain("r0", "A.start", "B.start", Duration::exactly(0)))
            .build();
        let d = validate_score(&s);
        assert!(d.iter().any(|d| d.code == "duplicate-point-owner" && d.is_error()), "{d:?}");
    }

    #[test]
    fn dangling_and_now_errors() {
        let mut r = Tcr::plain("bad", "A.start", "p99", Duration::exactly(2));
        r.evaluation = Evaluation::Now;
        let s = ScoreBuilder::new("A")
            .relation(Tcr::plain("r", "A.start", "A.end", Duration::exactly(0)))
            .relation(r)
            .build();
        let codes: Vec<_> = validate_score(&s).into_iter().map(|d| d.code).collect();
        assert!(codes.contains(&"dangling-endpoint".to_string()));
        assert!(codes.contains(&"now-requires-flexible".to_string()));
    }

    #[test]
    fn missing_anchor_and_unknown_variable() {
        let mut r = Tcr::plain("r", "A.start", "A.end", Duration::exactly(0));
        r.condition = crate::model::Condition::var("ghost");
        let s = ScoreBuilder::new("A")
            .object("B", "A", Duration::exactly(1))
            .relation(r)
            .relation(Tcr::plain("b", "B.start", "B.end", Duration::exactly(1)))
            .edit_object("B", |t| t.process = crate::model::ProcessRef::named("nope"))
            .build();
        let d = validate_score(&s);
        let codes: Vec<_> = d.iter().map(|d| d.code.as_str()).collect();
        assert!(codes.contains(&"missing-child-anchor"));
        assert!(codes.contains(&"unknown-variable"));
        assert!(codes.contains(&"unregistered-process"));
    }

    #[test]
    fn order_independent() {
        let a = validate_score(&minimal());
        let b = validate_score(&minimal().clone());
        assert_eq!(a, b);
    }
}
