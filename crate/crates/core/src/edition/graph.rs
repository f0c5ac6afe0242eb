use std::collections::{BTreeMap, BTreeSet};

use crate::model::{DurationClass, Evaluation, PointId, Score, TcrId, Tick};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tcr: TcrId,
    pub from: usize,
    pub to: usize,
    /// Shortest and longest time the jump can take once armed.
    pub lo: Tick,
    pub hi: Tick,
}

/// Relation structure of a score with points as dense indices.
#[derive(Debug, Clone)]
pub struct PointGraph {
    pub nodes: Vec<PointId>,
    pub index: BTreeMap<PointId, usize>,
    pub edges: Vec<Edge>,
    /// Root start point.
    pub entry: Option<usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl PointGraph {
    pub fn from_score(s: &Score) -> Self {
        let nodes: Vec<PointId> = s.points.keys().cloned().collect();
        let index: BTreeMap<PointId, usize> = nodes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut edges = Vec::new();
        for r in s.relations.values() {
            let (Some(&from), Some(&to)) = (index.get(&r.from), index.get(&r.to)) else {
                continue;
            };
            let nominal = r.nominal();
            let (lo, hi) = match (r.duration.class, r.evaluation) {
                (_, Evaluation::Now) => (0, nominal),
                (DurationClass::Random { min, max }, _) => (min, max),
                _ => (nominal, nominal),
            };
            edges.push(Edge { tcr: r.id.clone(), from, to, lo, hi });
        }
        let mut out = vec![Vec::new(); nodes.len()];
        let mut inc = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            inc[e.to].push(i);
        }
        let entry = s.root_object().and_then(|t| index.get(&t.start).copied());
        PointGraph { nodes, index, edges, entry, out, inc }
    }

    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn incoming(&self, node: usize) -> &[usize] {
        &self.inc[node]
    }

    /// Edges closing a cycle in a depth-first walk from the entry, then from
    /// every remaining node in id order.
    pub fn back_edges(&self) -> BTreeSet<usize> {
        let n = self.nodes.len();
        let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
        let mut back = BTreeSet::new();
        let roots = self.entry.into_iter().chain(0..n);
        for root in roots {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&e) = self.out[node].get(*next) {
                    *next += 1;
                    let to = self.edges[e].to;
                    match state[to] {
                        0 => {
                            state[to] = 1;
                            stack.push((to, 0));
                        }
                        1 => {
                            back.insert(e);
                        }
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        back
    }

    /// Strongly connected components in topological order of the condensation.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        // iterative Tarjan
        let n = self.nodes.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut counter = 0;
        for start in 0..n {
            if index[start] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(start, 0)];
            index[start] = counter;
            low[start] = counter;
            counter += 1;
            stack.push(start);
            on_stack[start] = true;
            while let Some(&(v, i)) = call.last() {
                if let Some(&e) = self.out[v].get(i) {
                    call.last_mut().unwrap().1 += 1;
                    let w = self.edges[e].to;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        while let Some(w) = stack.pop() {
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
        // Tarjan emits components in reverse topological order
        out.reverse();
        out
    }

    /// Simple cycles inside `component` as edge lists, up to `limit` cycles.
    pub fn simple_cycles(&self, component: &[usize], limit: usize) -> Vec<Vec<usize>> {
        let members: BTreeSet<usize> = component.iter().copied().collect();
        let mut cycles = Vec::new();
        // each cycle is found once, from its smallest node
        for &start in component {
            let mut path_nodes = vec![start];
            let mut path_edges: Vec<usize> = Vec::new();
            let mut iters: Vec<usize> = vec![0];
            while let Some(&node) = path_nodes.last() {
                let depth = path_nodes.len() - 1;
                let outs = &self.out[node];
                if iters[depth] >= outs.len() {
                    path_nodes.pop();
                    iters.pop();
                    path_edges.pop();
                    continue;
                }
                let e = outs[iters[depth]];
                iters[depth] += 1;
                let to = self.edges[e].to;
                if !members.contains(&to) || to < start {
                    continue;
                }
                if to == start {
                    let mut c = path_edges.clone();
                    c.push(e);
                    cycles.push(c);
                    if cycles.len() >= limit {
                        return cycles;
                    }
                } else if !path_nodes.contains(&to) {
                    path_nodes.push(to);
                    path_edges.push(e);
                    iters.push(0);
                }
            }
        }
        cycles
    }
}
