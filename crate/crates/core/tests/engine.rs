use iscore_core::dsl::parse_text;
use iscore_core::edition::compile;
use iscore_core::engine::{
    init, run, sample_random_duration, to_jsonl, EngineError, InputEvent, ScriptEntry, Termination, TraceEvent,
    TraceKind, AUTO, INTERACTIVE,
};
use iscore_core::model::{Score, Tick, VarValue};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> Score {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    compile(&parse_text(&std::fs::read_to_string(path).unwrap()).unwrap()).unwrap().0
}

fn compiled(src: &str) -> Score {
    compile(&parse_text(src).unwrap()).unwrap().0
}

fn executions(trace: &[TraceEvent], point: &str) -> Vec<Tick> {
    trace
        .iter()
        .filter(|e| matches!(&e.kind, TraceKind::PointExecuted { point: p, .. } if p.as_str() == point))
        .map(|e| e.tick)
        .collect()
}

fn set_finish(tick: Tick) -> Vec<ScriptEntry> {
    vec![ScriptEntry {
        tick,
        event: InputEvent::SetVar { to: "A".into(), name: "finish".into(), value: VarValue::Bool(true) },
    }]
}

#[test]
fn loop_without_input_repeats() {
    let s = fixture("loop.isc");
    let out = run(&s, &[], 24, 1, AUTO).unwrap();
    assert_eq!(out.reason, Termination::MaxTicks);
    assert_eq!(executions(&out.trace, "B.start"), vec![0, 8, 16]);
    assert_eq!(executions(&out.trace, "C.start"), vec![4, 12, 20]);
    for e in &out.trace {
        if let TraceKind::PointExecuted { point, .. } = &e.kind {
            assert!(s.points[point].dates.contains(e.tick), "{point} at {}", e.tick);
        }
    }
}

#[test]
fn loop_finishes_after_input() {
    let s = fixture("loop.isc");
    let out = run(&s, &set_finish(10), 100, 1, AUTO).unwrap();
    assert_eq!(out.reason, Termination::Quiescent);
    assert_eq!(out.last_tick, 16);
    assert_eq!(executions(&out.trace, "A.end"), vec![16]);
    assert_eq!(executions(&out.trace, "C.end"), vec![8, 16]);
    // one branch out of e_C per execution
    let fired_from_c: Vec<Tick> = out
        .trace
        .iter()
        .filter(|e| matches!(&e.kind, TraceKind::JumpFired { from, .. } if from.as_str() == "C.end"))
        .map(|e| e.tick)
        .collect();
    assert_eq!(fired_from_c, vec![8, 16]);
}

#[test]
fn root_and_first_child_start_at_zero() {
    let s = fixture("loop.isc");
    let mut st = init(&s, 1, AUTO).unwrap();
    let trace = iscore_core::engine::Engine::default().step(&mut st, &[]).unwrap();
    let started: Vec<&str> = trace
        .iter()
        .filter_map(|e| match &e.kind {
            TraceKind::InstanceStarted { to, .. } => Some(to.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(started, vec!["A", "B"]);
}

#[test]
fn uncompiled_score_is_rejected() {
    let s = parse_text("to A { dur 0; relation start -> end when true dur 0 wait; }").unwrap();
    assert_eq!(init(&s, 0, AUTO).unwrap_err(), EngineError::UncompiledScore);
}

#[test]
fn empty_root_starts_and_ends() {
    let s = compiled("to A { dur 0; relation start -> end when true dur 0 wait; }");
    let out = run(&s, &[], 10, 0, AUTO).unwrap();
    assert_eq!(out.reason, Termination::Quiescent);
    assert_eq!(out.last_tick, 0);
    assert!(matches!(out.trace[0].kind, TraceKind::InstanceStarted { .. }));
}

#[test]
fn rigid_object_ends_on_time() {
    let s = compiled("to A { dur 5; relation start -> end when true dur 5 wait; }");
    let out = run(&s, &[], 10, 0, AUTO).unwrap();
    let ended: Vec<Tick> =
        out.trace.iter().filter(|e| matches!(e.kind, TraceKind::InstanceEnded { .. })).map(|e| e.tick).collect();
    assert_eq!(ended, vec![5]);
}

#[test]
fn runs_are_byte_identical() {
    let s = fixture("loop.isc");
    let a = to_jsonl(&run(&s, &set_finish(10), 100, 7, AUTO).unwrap().trace);
    for _ in 0..2 {
        assert_eq!(to_jsonl(&run(&s, &set_finish(10), 100, 7, AUTO).unwrap().trace), a);
    }
}

#[test]
fn choice_without_enabled_option_transfers_nothing() {
    let s = compiled(
        "to R { var go = false; to C { dur 1; point end wf ch; } to X { dur 1; } to Y { dur 1; } \
         relation start -> C.start when true dur 0 wait; relation C.start -> C.end when true dur 1 wait; \
         relation cx: C.end -> X.start when go dur 0 wait; relation cy: C.end -> Y.start when go dur 0 wait; \
         relation X.start -> X.end when true dur 1 wait; relation Y.start -> Y.end when true dur 1 wait; \
         relation C.end -> end when true dur 3 wait; }",
    );
    let out = run(&s, &[], 10, 0, INTERACTIVE).unwrap();
    let discarded: Vec<String> = out
        .trace
        .iter()
        .filter_map(|e| match &e.kind {
            TraceKind::JumpDiscarded { relation, .. } => Some(relation.to_string()),
            _ => None,
        })
        .collect();
    assert_eq!(discarded, vec!["cx", "cy"]);
    assert!(executions(&out.trace, "X.start").is_empty());
}

#[test]
fn interactive_choice_waits_for_performer() {
    let s = compiled(
        "to R { to C { dur 1; point end wf ch; } to X { dur 1; } to Y { dur 1; } \
         relation start -> C.start when true dur 0 wait; relation C.start -> C.end when true dur 1 wait; \
         relation cx: C.end -> X.start when true dur 0 wait; relation cy: C.end -> Y.start when true dur 0 wait; \
         relation X.start -> X.end when true dur 1 wait; relation Y.start -> Y.end when true dur 1 wait; \
         relation X.end -> end when true dur 0 wait; relation Y.end -> end when true dur 0 wait; }",
    );
    let script = vec![ScriptEntry { tick: 4, event: InputEvent::Choose { point: "C.end".into(), relation: "cy".into() } }];
    let out = run(&s, &script, 20, 0, INTERACTIVE).unwrap();
    let awaiting =
        out.trace.iter().filter(|e| matches!(e.kind, TraceKind::AwaitingChoice { .. })).count();
    assert_eq!(awaiting, 1);
    assert_eq!(executions(&out.trace, "Y.start"), vec![4]);
    assert_eq!(executions(&out.trace, "R.end"), vec![5]);
    assert_eq!(out.reason, Termination::Quiescent);
}

#[test]
fn random_durations_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    assert_eq!(sample_random_duration(&mut rng, 3, 3), 3);
    let draws: Vec<Tick> = (0..200).map(|_| sample_random_duration(&mut rng, 1, 5)).collect();
    assert!(draws.iter().all(|d| (1..=5).contains(d)));
    let mut again = ChaCha8Rng::seed_from_u64(42);
    sample_random_duration(&mut again, 3, 3);
    let replay: Vec<Tick> = (0..200).map(|_| sample_random_duration(&mut again, 1, 5)).collect();
    assert_eq!(draws, replay);
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn running_at(trace: &[TraceEvent], to: &str, tick: Tick) -> usize {
    let mut live = std::collections::BTreeMap::new();
    for e in trace.iter().filter(|e| e.tick <= tick) {
        match &e.kind {
            TraceKind::InstanceStarted { instance, to: t, .. } if t.as_str() == to => {
                live.insert(*instance, ());
            }
            TraceKind::InstanceEnded { instance, .. } | TraceKind::InstanceCancelled { instance, .. } => {
                live.remove(instance);
            }
            _ => {}
        }
    }
    live.len()
}

fn starts_of(trace: &[TraceEvent], to: &str) -> Vec<Tick> {
    trace
        .iter()
        .filter(|e| matches!(&e.kind, TraceKind::InstanceStarted { to: t, .. } if t.as_str() == to))
        .map(|e| e.tick)
        .collect()
}

#[test]
fn policy_goldens() {
    for p in ["allow", "delay", "cancel", "split"] {
        let s = fixture(&format!("policy_{p}.isc"));
        let out = run(&s, &[], 20, 0, AUTO).unwrap();
        assert_eq!(to_jsonl(&out.trace), golden(&format!("policy_{p}.jsonl")), "policy {p}");
    }
}

#[test]
fn allow_overlaps() {
    let out = run(&fixture("policy_allow.isc"), &[], 20, 0, AUTO).unwrap();
    assert_eq!(starts_of(&out.trace, "T"), vec![0, 2]);
    for t in 2..=4 {
        assert_eq!(running_at(&out.trace, "T", t), 2, "tick {t}");
    }
    assert_eq!(running_at(&out.trace, "T", 5), 1);
}

#[test]
fn delay_waits_for_the_end() {
    let out = run(&fixture("policy_delay.isc"), &[], 20, 0, AUTO).unwrap();
    assert_eq!(starts_of(&out.trace, "T"), vec![0, 5]);
    assert!((0..20).all(|t| running_at(&out.trace, "T", t) <= 1));
}

#[test]
fn cancel_restarts() {
    let out = run(&fixture("policy_cancel.isc"), &[], 20, 0, AUTO).unwrap();
    let cancelled: Vec<Tick> = out
        .trace
        .iter()
        .filter(|e| matches!(&e.kind, TraceKind::InstanceCancelled { to, .. } if to.as_str() == "T"))
        .map(|e| e.tick)
        .collect();
    assert_eq!(cancelled, vec![2]);
    assert_eq!(starts_of(&out.trace, "T"), vec![0, 2]);
    assert_eq!(executions(&out.trace, "T.end"), vec![7]);
}

#[test]
fn split_merges() {
    let out = run(&fixture("policy_split.isc"), &[], 20, 0, AUTO).unwrap();
    assert_eq!(starts_of(&out.trace, "T"), vec![0]);
    assert!(out.trace.iter().any(|e| e.tick == 2
        && matches!(&e.kind, TraceKind::PolicyApplied { policy, .. } if policy == "split")));
}

mod oracle {
    use super::*;
    use iscore_core::engine::{oracle_enumerate, DEFAULT_STATE_BOUND};

    #[test]
    fn loop_with_input_has_one_trace() {
        let traces = oracle_enumerate(&fixture("loop.isc"), &set_finish(10), 20, 0, DEFAULT_STATE_BOUND).unwrap();
        assert_eq!(traces.len(), 1);
        assert_eq!(executions(&traces[0], "A.end"), vec![16]);
    }

    #[test]
    fn free_choice_has_two_traces() {
        let s = compiled(
            "to R { point start wf ch; to X { dur 1; } to Y { dur 2; } \
             relation R.start -> X.start when true dur 0 wait; relation R.start -> Y.start when true dur 0 wait; \
             relation X.start -> X.end when true dur 1 wait; relation Y.start -> Y.end when true dur 2 wait; \
             relation X.end -> R.end when true dur flexible wait; relation Y.end -> R.end when true dur flexible wait; }",
        );
        assert_eq!(oracle_enumerate(&s, &[], 10, 0, DEFAULT_STATE_BOUND).unwrap().len(), 2);
    }

    #[test]
    fn fig3_branches_end_t1_at_different_ticks() {
        let traces = oracle_enumerate(&fixture("fig3.isc"), &[], 30, 0, DEFAULT_STATE_BOUND).unwrap();
        assert!(traces.len() >= 2);
        let ends: std::collections::BTreeSet<Vec<Tick>> = traces.iter().map(|t| executions(t, "T1.end")).collect();
        assert_eq!(ends, [vec![4], vec![5]].into_iter().collect());
    }

    #[test]
    fn bound_is_enforced() {
        let err = oracle_enumerate(&fixture("mariona.isc"), &[], 30, 0, 2).unwrap_err();
        assert!(matches!(err, iscore_core::engine::OracleError::StateBoundExceeded(2)));
    }
}
