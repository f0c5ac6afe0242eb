use std::collections::{BTreeMap, BTreeSet};

use super::graph::PointGraph;
use crate::model::{DateSet, Evaluation, Interpretation, PointId, Score, SendBehavior, Tick, WaitBehavior};

const CYCLE_LIMIT: usize = 64;

/// `may_drop`: some incoming relation can be discarded, so a wait-all point
/// may execute without it.
fn combine(wait: WaitBehavior, may_drop: bool, values: &[DateSet]) -> DateSet {
    if values.is_empty() {
        return DateSet::empty();
    }
    match wait {
        WaitBehavior::WaitAll if !may_drop => {
            if values.iter().any(DateSet::is_empty) {
                return DateSet::empty();
            }
            let singles: Option<Vec<Tick>> = values
                .iter()
                .map(|v| match v {
                    DateSet::Exact { ticks } if ticks.len() == 1 => ticks.first().copied(),
                    _ => None,
                })
                .collect();
            match singles {
                Some(ts) => DateSet::exact([ts.into_iter().max().unwrap()]),
                None => {
                    let joined = values.iter().fold(DateSet::empty(), |acc, v| acc.join(v));
                    let floor = values.iter().filter_map(DateSet::min).max();
                    match (joined, floor) {
                        (DateSet::Exact { ticks }, Some(f)) => DateSet::exact(ticks.into_iter().filter(|t| *t >= f)),
                        (other, _) => other,
                    }
                }
            }
        }
        _ => values.iter().fold(DateSet::empty(), |acc, v| acc.join(v)),
    }
}

/// Shortest in-component distances from `src` along non-random, wait edges.
fn distances(g: &PointGraph, members: &BTreeSet<usize>, src: usize) -> BTreeMap<usize, Tick> {
    let mut dist = BTreeMap::from([(src, 0)]);
    let mut frontier = vec![src];
    // components are small; a relaxation sweep is enough
    while let Some(u) = frontier.pop() {
        let du = dist[&u];
        for &e in g.outgoing(u) {
            let edge = &g.edges[e];
            if !members.contains(&edge.to) {
                continue;
            }
            let nd = du + edge.lo;
            if dist.get(&edge.to).map_or(true, |&d| nd < d) {
                dist.insert(edge.to, nd);
                frontier.push(edge.to);
            }
        }
    }
    dist
}

/// Date set of every point of a score whose nominals are assigned.
pub fn dates_of(s: &Score) -> BTreeMap<PointId, DateSet> {
    let g = PointGraph::from_score(s);
    let n = g.nodes.len();
    let wait: Vec<WaitBehavior> = g.nodes.iter().map(|p| s.points[p].wait).collect();
    let may_drop: Vec<bool> = g
        .nodes
        .iter()
        .map(|p| {
            s.incoming(p).any(|r| {
                !r.condition.is_constant_true()
                    || r.interpretation == Interpretation::Unless
                    || s.points[&r.from].send == SendBehavior::Choice
            })
        })
        .collect();
    let mut value: Vec<Option<DateSet>> = vec![None; n];

    let incoming_value = |value: &Vec<Option<DateSet>>, e: usize| -> Option<DateSet> {
        let edge = &g.edges[e];
        value[edge.from].as_ref().map(|v| v.shift_range(edge.lo, edge.hi))
    };

    for comp in g.sccs() {
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        let external = |value: &Vec<Option<DateSet>>, v: usize| -> Vec<DateSet> {
            let mut vals: Vec<DateSet> = g
                .incoming(v)
                .iter()
                .filter(|&&e| !members.contains(&g.edges[e].from))
                .filter_map(|&e| incoming_value(value, e))
                .collect();
            if Some(v) == g.entry {
                vals.push(DateSet::exact([0]));
            }
            vals
        };
        let self_loop = comp.len() == 1 && g.outgoing(comp[0]).iter().any(|&e| g.edges[e].to == comp[0]);
        if comp.len() == 1 && !self_loop {
            let v = comp[0];
            let vals = external(&value, v);
            value[v] = Some(if Some(v) == g.entry && vals.len() == 1 { vals[0].clone() } else { combine(wait[v], may_drop[v], &vals) });
            continue;
        }

        let cycles = g.simple_cycles(&comp, CYCLE_LIMIT);
        let periods: BTreeSet<Tick> = cycles.iter().map(|c| c.iter().map(|&e| g.edges[e].lo).sum()).collect();
        let periodic = cycles.len() == 1
            && cycles[0].iter().all(|&e| g.edges[e].lo == g.edges[e].hi);
        let entries: Vec<(usize, DateSet)> = comp
            .iter()
            .map(|&v| (v, external(&value, v).iter().fold(DateSet::empty(), |a, b| a.join(b))))
            .filter(|(_, ds)| !ds.is_empty())
            .collect();
        for &p in &comp {
            let mut acc = DateSet::empty();
            for (entry, ds) in &entries {
                let dist = distances(&g, &members, *entry);
                let Some(&d) = dist.get(&p) else { continue };
                let reached = ds.shift(d);
                let contribution = if periods.len() > 1 {
                    DateSet::Unknown
                } else if periodic {
                    reached.periodize(*periods.first().unwrap())
                } else {
                    reached.min().map_or(DateSet::Unknown, |m| DateSet::AtLeast { min: m })
                };
                acc = acc.join(&contribution);
            }
            value[p] = Some(acc);
        }
    }

    let mut dates: Vec<DateSet> = value.into_iter().map(|v| v.unwrap_or_else(DateSet::empty)).collect();

    // points joined by an unconditional, instantaneous relation share their set
    let mut class: Vec<usize> = (0..n).collect();
    fn find(class: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while class[r] != r {
            r = class[r];
        }
        class[i] = r;
        r
    }
    for e in &g.edges {
        let r = &s.relations[&e.tcr];
        let instant = e.lo == 0
            && e.hi == 0
            && r.condition.is_constant_true()
            && r.interpretation == Interpretation::When
            && r.evaluation == Evaluation::Wait
            && s.points[&r.from].send == SendBehavior::NoChoice
            && s.points[&r.to].wait == WaitBehavior::WaitFirst;
        if instant {
            let (a, b) = (find(&mut class, e.from), find(&mut class, e.to));
            class[a] = b;
        }
    }
    let mut shared: BTreeMap<usize, DateSet> = BTreeMap::new();
    for (i, ds) in dates.iter().enumerate() {
        let root = find(&mut class, i);
        let cur = shared.remove(&root).unwrap_or_else(DateSet::empty);
        shared.insert(root, cur.join(ds));
    }
    for (i, ds) in dates.iter_mut().enumerate() {
        let root = find(&mut class, i);
        *ds = shared[&root].clone();
    }

    g.nodes.into_iter().zip(dates).collect()
}
