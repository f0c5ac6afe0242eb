//! Edition phase: nominal durations, date sets, and rigidity analysis.
//!
//! Nominal durations come from a simple temporal network built on the
//! forward (acyclic) part of the relation graph. Every relation and every
//! object duration becomes an interval constraint on the difference of two
//! point dates; rigid constraints must be mutually consistent, and each
//! flexible duration takes the smallest value the network allows.
//!
//! Date sets are then propagated over the strongly connected components of
//! the graph: acyclic parts yield exact sets, a component with a single
//! simple cycle yields arithmetic progressions whose period is the cycle
//! length.

mod dates;
mod graph;
mod rigidity;
mod stn;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dates::dates_of;
pub use graph::{Edge, PointGraph};
pub use rigidity::{analyze_rigidity, RigidityReason, RigidityWarning};

use crate::model::{DateSet, DurationClass, PointId, Score, SendBehavior, TcrId, Tick, ToId};
use stn::Stn;

/// What a nominal duration belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum DurationOwner {
    Relation(TcrId),
    Object(ToId),
}

impl fmt::Display for DurationOwner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DurationOwner::Relation(id) => write!(f, "relation {id}"),
            DurationOwner::Object(id) => write!(f, "object {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditionResult {
    pub dates: BTreeMap<PointId, DateSet>,
    /// Serialized as a list of `{kind, id, ticks}` entries.
    #[serde(with = "owner_list")]
    pub nominal_durations: BTreeMap<DurationOwner, Tick>,
    pub warnings: Vec<RigidityWarning>,
}

mod owner_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        #[serde(flatten)]
        owner: DurationOwner,
        ticks: Tick,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<DurationOwner, Tick>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|(owner, &ticks)| Entry { owner: owner.clone(), ticks }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<DurationOwner, Tick>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?.into_iter().map(|e| (e.owner, e.ticks)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditionError {
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// Constraint on `date(to) - date(from)`.
#[derive(Debug, Clone, Copy)]
struct Arc {
    from: usize,
    to: usize,
    lo: i64,
    hi: Option<i64>,
    /// Part of the hard, bounded subset that must be consistent on its own.
    rigid: bool,
    /// Dropped when the full network is inconsistent.
    soft_lower: bool,
}

fn network_arcs(s: &Score, g: &PointGraph) -> Vec<Arc> {
    let back = g.back_edges();
    let mut arcs = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        if back.contains(&i) {
            continue;
        }
        let r = &s.relations[&e.tcr];
        let from_choice = s.points[&r.from].send == SendBehavior::Choice;
        let min = r.duration.min() as i64;
        let arc = match (r.duration.class, from_choice) {
            (DurationClass::Flexible, _) => Arc { from: e.from, to: e.to, lo: 0, hi: None, rigid: false, soft_lower: false },
            // a choice may delay its successors arbitrarily
            (_, true) => Arc { from: e.from, to: e.to, lo: min, hi: None, rigid: false, soft_lower: true },
            (DurationClass::SemiRigid { .. }, _) => {
                Arc { from: e.from, to: e.to, lo: min, hi: None, rigid: false, soft_lower: true }
            }
            (DurationClass::Rigid { max, .. } | DurationClass::Random { max, .. }, _) => {
                Arc { from: e.from, to: e.to, lo: min, hi: Some(max as i64), rigid: true, soft_lower: false }
            }
        };
        arcs.push(arc);
    }
    for t in s.objects.values() {
        let (Some(&from), Some(&to)) = (g.index.get(&t.start), g.index.get(&t.end)) else {
            continue;
        };
        let min = t.duration.min() as i64;
        arcs.push(match t.duration.class {
            DurationClass::Flexible => Arc { from, to, lo: 0, hi: None, rigid: false, soft_lower: false },
            DurationClass::SemiRigid { .. } => Arc { from, to, lo: min, hi: None, rigid: false, soft_lower: true },
            DurationClass::Rigid { max, .. } | DurationClass::Random { max, .. } => {
                Arc { from, to, lo: min, hi: Some(max as i64), rigid: true, soft_lower: false }
            }
        });
    }
    arcs
}

fn solve(g: &PointGraph, arcs: &[Arc], use_arc: impl Fn(&Arc) -> Option<(i64, Option<i64>)>) -> Result<Stn, usize> {
    let mut stn = Stn::new(g.nodes.len());
    for a in arcs {
        if let Some((lo, hi)) = use_arc(a) {
            stn.constrain(a.from, a.to, lo, hi);
        }
    }
    stn.close()?;
    Ok(stn)
}

/// Assigns a nominal value to every duration.
///
/// Rigid and random durations take their lower bound. Flexible and
/// semi-rigid durations take the smallest value consistent with the network,
/// never below the semi-rigid minimum.
pub fn assign_nominal_durations(s: &Score) -> Result<Score, EditionError> {
    let g = PointGraph::from_score(s);
    let arcs = network_arcs(s, &g);
    let name = |i: usize| g.nodes[i].to_string();

    let rigid = solve(&g, &arcs, |a| a.rigid.then_some((a.lo, a.hi))).map_err(|i| {
        EditionError::Infeasible(format!("rigid durations conflict around point `{}`", name(i)))
    })?;
    let stn = solve(&g, &arcs, |a| Some((a.lo, a.hi)))
        .or_else(|_| solve(&g, &arcs, |a| Some((if a.soft_lower { 0 } else { a.lo }, a.hi))))
        .unwrap_or_else(|i| {
            // waiting points will stretch some rigid duration at run time
            log::warn!("durations cannot all be kept around point `{}`", name(i));
            rigid
        });

    let flexible_min = |from: &PointId, to: &PointId| -> Tick {
        match (g.index.get(from), g.index.get(to)) {
            (Some(&u), Some(&v)) => stn.min_difference(u, v).max(0) as Tick,
            _ => 0,
        }
    };

    let mut out = s.clone();
    for r in out.relations.values_mut() {
        r.duration.nominal = Some(match r.duration.class {
            DurationClass::Flexible => flexible_min(&r.from, &r.to),
            DurationClass::SemiRigid { min } => flexible_min(&r.from, &r.to).max(min),
            _ => r.duration.min(),
        });
    }
    for t in out.objects.values_mut() {
        t.duration.nominal = Some(match t.duration.class {
            DurationClass::Flexible => flexible_min(&t.start, &t.end),
            DurationClass::SemiRigid { min } => flexible_min(&t.start, &t.end).max(min),
            _ => t.duration.min(),
        });
    }
    Ok(out)
}

/// Date set of every point, relative to the root start at tick 0.
pub fn compute_nominal_dates(s: &Score) -> Result<EditionResult, EditionError> {
    let compiled;
    let s = if s.is_compiled() {
        s
    } else {
        compiled = assign_nominal_durations(s)?;
        &compiled
    };
    let mut nominal_durations = BTreeMap::new();
    for r in s.relations.values() {
        nominal_durations.insert(DurationOwner::Relation(r.id.clone()), r.nominal());
    }
    for t in s.objects.values() {
        nominal_durations.insert(DurationOwner::Object(t.id.clone()), t.duration.nominal.unwrap_or(0));
    }
    Ok(EditionResult { dates: dates_of(s), nominal_durations, warnings: analyze_rigidity(s) })
}

/// Runs the whole edition phase and stores the results in the score.
pub fn compile(s: &Score) -> Result<(Score, EditionResult), EditionError> {
    let mut out = assign_nominal_durations(s)?;
    let result = compute_nominal_dates(&out)?;
    for (p, ds) in &result.dates {
        if let Some(spec) = out.points.get_mut(p) {
            spec.dates = ds.clone();
        }
    }
    Ok((out, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_text;

    #[test]
    fn parallel_rigid_paths_are_infeasible() {
        let s = parse_text(
            "to A { relation a: start -> end when true dur 3 wait; relation b: start -> end when true dur 5 wait; }",
        )
        .unwrap();
        assert!(matches!(assign_nominal_durations(&s), Err(EditionError::Infeasible(_))));
    }

    #[test]
    fn assignment_is_idempotent() {
        let s = parse_text(
            "to X { dur 5; to Y { relation y: start -> end when true dur flexible wait; } \
             relation start -> Y.start when true dur 0 wait; relation Y.end -> end when true dur 0 wait; }",
        )
        .unwrap();
        let once = assign_nominal_durations(&s).unwrap();
        assert_eq!(assign_nominal_durations(&once).unwrap(), once);
    }

    #[test]
    fn result_json_round_trips() {
        let s = parse_text("to A { to B { dur 2; relation start -> end when true dur 2 wait; } relation start -> B.start when true dur 1 wait; }").unwrap();
        let (_, r) = compile(&s).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#"{"kind":"object","id":"B","ticks":2}"#), "{text}");
        assert_eq!(serde_json::from_str::<EditionResult>(&text).unwrap(), r);
    }

    #[test]
    fn empty_root_dates() {
        let s = parse_text("to A { dur 0; relation start -> end when true dur 0 wait; }").unwrap();
        let r = compute_nominal_dates(&s).unwrap();
        assert_eq!(r.dates[&PointId::from("A.start")], DateSet::exact([0]));
        assert_eq!(r.dates[&PointId::from("A.end")], DateSet::exact([0]));
    }
}
