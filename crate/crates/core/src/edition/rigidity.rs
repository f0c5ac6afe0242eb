use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::graph::PointGraph;
use crate::model::{DurationClass, PointId, Score, SendBehavior, Tick, ToId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigidityReason {
    /// The choice precedes the object's start, and its branches give the
    /// object different lengths.
    ChoiceUpstream,
    /// The choice happens while the object runs, and its branches reach the
    /// object's end at different times.
    ChoiceDownstream,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RigidityWarning {
    pub to: ToId,
    pub reason: RigidityReason,
    /// The choice point involved.
    pub witness: PointId,
}

/// Earliest arrival from `choice`, leaving it only through `first_edge`.
fn branch_arrivals(g: &PointGraph, choice: usize, first_edge: usize) -> BTreeMap<usize, Tick> {
    let mut dist = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let first = &g.edges[first_edge];
    if first.to != choice {
        heap.push(Reverse((first.lo, first.to)));
    }
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist.contains_key(&u) {
            continue;
        }
        dist.insert(u, d);
        for &e in g.outgoing(u) {
            let edge = &g.edges[e];
            if edge.to != choice && !dist.contains_key(&edge.to) {
                heap.push(Reverse((d + edge.lo, edge.to)));
            }
        }
    }
    dist
}

/// Rigid and semi-rigid objects whose timing depends on a choice.
///
/// For each choice point and each of its outgoing relations, the earliest
/// arrival times are computed assuming that relation is the one taken. An
/// object is flagged when two branches disagree on when its end is reached
/// (its start having been reached independently of the choice), or on its
/// length (both endpoints reached within the branch).
pub fn analyze_rigidity(s: &Score) -> Vec<RigidityWarning> {
    let g = PointGraph::from_score(s);
    let mut out = BTreeSet::new();
    for (c, pid) in g.nodes.iter().enumerate() {
        if s.points[pid].send != SendBehavior::Choice {
            continue;
        }
        let branches: Vec<BTreeMap<usize, Tick>> =
            g.outgoing(c).iter().map(|&e| branch_arrivals(&g, c, e)).collect();
        if branches.len() < 2 {
            continue;
        }
        for t in s.objects.values() {
            if !matches!(t.duration.class, DurationClass::Rigid { .. } | DurationClass::SemiRigid { .. }) {
                continue;
            }
            let (Some(&start), Some(&end)) = (g.index.get(&t.start), g.index.get(&t.end)) else {
                continue;
            };
            let mut end_only = BTreeSet::new();
            let mut lengths = BTreeSet::new();
            for b in &branches {
                match (b.get(&start), b.get(&end)) {
                    (None, Some(&e)) => {
                        end_only.insert(e);
                    }
                    (Some(&st), Some(&e)) => {
                        lengths.insert(e.saturating_sub(st));
                    }
                    _ => {}
                }
            }
            if end_only.len() > 1 {
                out.insert(RigidityWarning {
                    to: t.id.clone(),
                    reason: RigidityReason::ChoiceDownstream,
                    witness: pid.clone(),
                });
            }
            if lengths.len() > 1 {
                out.insert(RigidityWarning {
                    to: t.id.clone(),
                    reason: RigidityReason::ChoiceUpstream,
                    witness: pid.clone(),
                });
            }
        }
    }
    out.into_iter().collect()
}
