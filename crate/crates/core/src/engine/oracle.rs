use std::collections::BTreeSet;

use super::{by_tick, to_jsonl, Engine, EngineError, EngineState, InputEvent, ScriptEntry, TraceEvent, TraceKind, INTERACTIVE};
use crate::model::{Score, Tick};

pub const DEFAULT_STATE_BOUND: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("more than {0} partial traces")]
    StateBoundExceeded(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Every trace of at most `depth` ticks, over every resolution of every
/// choice. Choices are resolved on the tick they arise; variable inputs come
/// from `script` and random durations from `seed`.
pub fn oracle_enumerate(
    s: &Score,
    script: &[ScriptEntry],
    depth: Tick,
    seed: u64,
    bound: usize,
) -> Result<Vec<Vec<TraceEvent>>, OracleError> {
    let engine = Engine::default();
    let inputs = by_tick(script);
    let mut frontier: Vec<(EngineState, Vec<TraceEvent>)> = vec![(engine.init(s, seed, INTERACTIVE)?, Vec::new())];
    let mut done: Vec<Vec<TraceEvent>> = Vec::new();
    for tick in 0..depth {
        let base: Vec<InputEvent> = inputs.get(&tick).cloned().unwrap_or_default();
        let mut next = Vec::new();
        for (st, trace) in frontier {
            let mut decisions: Vec<Vec<InputEvent>> = vec![Vec::new()];
            while let Some(d) = decisions.pop() {
                if d.len() > bound {
                    return Err(OracleError::StateBoundExceeded(bound));
                }
                let mut st2 = st.clone();
                let batch: Vec<InputEvent> = base.iter().cloned().chain(d.iter().cloned()).collect();
                let events = engine.step(&mut st2, &batch)?;
                // a choice may be awaited and cancelled within the tick, so
                // look at the events rather than the final state
                let awaited = events.iter().find_map(|e| match &e.kind {
                    TraceKind::AwaitingChoice { point, options, .. } => Some((point.clone(), options.clone())),
                    _ => None,
                });
                match awaited {
                    Some((point, options)) => {
                        // pushed in reverse so the first option is explored first
                        for o in options.iter().rev() {
                            let mut d2 = d.clone();
                            d2.push(InputEvent::Choose { point: point.clone(), relation: o.clone() });
                            decisions.push(d2);
                        }
                    }
                    None => {
                        let mut t = trace.clone();
                        t.extend(events);
                        if st2.is_quiescent() {
                            done.push(t);
                        } else {
                            next.push((st2, t));
                        }
                    }
                }
                if next.len() + done.len() + decisions.len() > bound {
                    return Err(OracleError::StateBoundExceeded(bound));
                }
            }
        }
        frontier = next;
    }
    done.extend(frontier.into_iter().map(|(_, t)| t));
    let mut seen = BTreeSet::new();
    done.retain(|t| seen.insert(to_jsonl(t)));
    Ok(done)
}
