use std::collections::BTreeMap;

use iscore_core::dsl::parse_text;
use iscore_core::edition::{analyze_rigidity, compile, compute_nominal_dates, DurationOwner, RigidityReason};
use iscore_core::model::{DateSet, DurationClass, PointId, Score, TcrId, Tick, ToId};
use proptest::prelude::*;

fn fixture(name: &str) -> Score {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_text(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Smallest flexible duration over every date assignment in `0..=horizon`
/// satisfying all relation and object bounds. Acyclic scores only.
fn brute_force_flexible(s: &Score, horizon: Tick, target: (&str, &str)) -> Option<Tick> {
    let points: Vec<PointId> = s.points.keys().cloned().collect();
    let idx: BTreeMap<&PointId, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut bounds: Vec<(usize, usize, Tick, Option<Tick>)> = Vec::new();
    let mut push = |from: &PointId, to: &PointId, class: DurationClass| {
        let (lo, hi) = match class {
            DurationClass::Flexible => (0, None),
            DurationClass::SemiRigid { min } => (min, None),
            DurationClass::Rigid { min, max } | DurationClass::Random { min, max } => (min, Some(max)),
        };
        bounds.push((idx[from], idx[to], lo, hi));
    };
    for r in s.relations.values() {
        push(&r.from, &r.to, r.duration.class);
    }
    for t in s.objects.values() {
        push(&t.start, &t.end, t.duration.class);
    }
    let root = idx[&s.root_object().unwrap().start];
    let (a, b) = (idx[&PointId::from(target.0)], idx[&PointId::from(target.1)]);
    // assign in breadth-first order from the root so bounds prune early
    let mut order = vec![root];
    let mut k = 0;
    while k < order.len() {
        for &(f, t, _, _) in &bounds {
            if f == order[k] && !order.contains(&t) {
                order.push(t);
            }
        }
        k += 1;
    }
    let rest: Vec<usize> = (0..points.len()).filter(|i| !order.contains(i)).collect();
    order.extend(rest);
    let mut dates: Vec<Option<Tick>> = vec![None; points.len()];
    let mut best = None;
    search(&order, 0, &bounds, horizon, &mut dates, &mut |d| {
        if d[b] >= d[a] {
            let v = d[b] - d[a];
            best = Some(best.map_or(v, |x: Tick| x.min(v)));
        }
    });
    best
}

fn search(
    order: &[usize],
    depth: usize,
    bounds: &[(usize, usize, Tick, Option<Tick>)],
    horizon: Tick,
    dates: &mut Vec<Option<Tick>>,
    found: &mut dyn FnMut(&[Tick]),
) {
    if depth == order.len() {
        let d: Vec<Tick> = dates.iter().map(|x| x.unwrap()).collect();
        found(&d);
        return;
    }
    let p = order[depth];
    let range = if depth == 0 { 0..=0 } else { 0..=horizon };
    for v in range {
        dates[p] = Some(v);
        let ok = bounds.iter().all(|&(f, t, lo, hi)| match (dates[f], dates[t]) {
            (Some(df), Some(dt)) => dt >= df + lo && hi.map_or(true, |h| dt <= df + h),
            _ => true,
        });
        if ok {
            search(order, depth + 1, bounds, horizon, dates, found);
        }
    }
    dates[p] = None;
}

const NESTED: &str = "to X { dur 5; to Y { dur flexible; relation y: start -> end when true dur flexible wait; } \
     relation start -> Y.start when true dur 0 wait; relation Y.end -> end when true dur 0 wait; }";

#[test]
fn flexible_child_fills_rigid_parent() {
    let s = parse_text(NESTED).unwrap();
    let oracle = brute_force_flexible(&s, 10, ("Y.start", "Y.end")).unwrap();
    assert_eq!(oracle, 5);
    let r = compute_nominal_dates(&s).unwrap();
    assert_eq!(r.nominal_durations[&DurationOwner::Object(ToId::from("Y"))], oracle);
    assert_eq!(r.nominal_durations[&DurationOwner::Relation(TcrId::from("y"))], oracle);
}

#[test]
fn linear_chain_dates_are_exact() {
    let s = parse_text(
        "to R { to A { dur 2; } to B { dur 3; } \
         relation start -> A.start when true dur 0 wait; relation A.start -> A.end when true dur 2 wait; \
         relation A.end -> B.start when true dur 0 wait; relation B.start -> B.end when true dur 3 wait; \
         relation B.end -> end when true dur 0 wait; }",
    )
    .unwrap();
    let r = compute_nominal_dates(&s).unwrap();
    assert_eq!(r.dates[&PointId::from("A.end")], DateSet::exact([2]));
    assert_eq!(r.dates[&PointId::from("B.end")], DateSet::exact([5]));
    assert_eq!(r.dates[&PointId::from("R.end")], DateSet::exact([5]));
    assert!(r.warnings.is_empty());
}

#[test]
fn loop_fixture_dates() {
    let s = fixture("loop.isc");
    let r = compute_nominal_dates(&s).unwrap();
    let d = |p: &str| r.dates[&PointId::from(p)].clone();
    assert_eq!(d("A.start"), DateSet::progression(0, 8));
    assert_eq!(d("B.start"), DateSet::progression(0, 8));
    assert_eq!(d("B.end"), DateSet::progression(3, 8));
    assert_eq!(d("C.start"), DateSet::progression(4, 8));
    assert_eq!(d("C.end"), DateSet::progression(8, 8));
    assert_eq!(d("A.end"), DateSet::progression(8, 8));
    assert_eq!(r.nominal_durations[&DurationOwner::Object(ToId::from("A"))], 8);
    assert!(r.warnings.is_empty());
}

#[test]
fn compile_stores_dates_in_points() {
    let (s, r) = compile(&fixture("loop.isc")).unwrap();
    assert!(s.is_compiled());
    for (p, ds) in &r.dates {
        assert_eq!(&s.points[p].dates, ds);
    }
}

#[test]
fn choice_inside_rigid_object_is_flagged() {
    let s = fixture("fig3.isc");
    let r = compute_nominal_dates(&s).unwrap();
    assert_eq!(r.warnings.len(), 1, "{:?}", r.warnings);
    assert_eq!(r.warnings[0].to, ToId::from("T1"));
    assert_eq!(r.warnings[0].reason, RigidityReason::ChoiceDownstream);
    assert_eq!(r.warnings[0].witness, PointId::from("C.end"));
}

#[test]
fn equal_branches_are_not_flagged() {
    let s = parse_text(
        "to R { to T { dur 4; to C { dur 1; point end wf ch; } to P { dur 3; } to Q { dur 3; } \
         relation start -> C.start when true dur 0 wait; relation C.start -> C.end when true dur 1 wait; \
         relation C.end -> P.start when true dur 0 wait; relation C.end -> Q.start when true dur 0 wait; \
         relation P.start -> P.end when true dur 3 wait; relation Q.start -> Q.end when true dur 3 wait; \
         relation P.end -> end when true dur 0 wait; relation Q.end -> end when true dur 0 wait; } \
         relation start -> T.start when true dur 0 wait; relation T.end -> end when true dur 0 wait; }",
    )
    .unwrap();
    assert!(analyze_rigidity(&s).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Rigid chain under a flexible object inside a rigid parent: the flexible
    /// gap equals what the brute-force search finds.
    #[test]
    fn flexible_gap_matches_oracle(a in 0u64..4, b in 0u64..4, extra in 0u64..3) {
        let total = a + b + extra;
        let src = format!(
            "to R {{ dur {total}; \
             to A {{ dur {a}; relation start -> end when true dur {a} wait; }} \
             to G {{ dur flexible; relation start -> end when true dur flexible wait; }} \
             to B {{ dur {b}; relation start -> end when true dur {b} wait; }} \
             relation start -> A.start when true dur 0 wait; \
             relation A.end -> G.start when true dur 0 wait; \
             relation G.end -> B.start when true dur 0 wait; \
             relation B.end -> end when true dur 0 wait; }}"
        );
        let s = parse_text(&src).unwrap();
        let oracle = brute_force_flexible(&s, total, ("G.start", "G.end")).unwrap();
        prop_assert_eq!(oracle, extra);
        let r = compute_nominal_dates(&s).unwrap();
        prop_assert_eq!(r.nominal_durations[&DurationOwner::Object(ToId::from("G"))], oracle);
        prop_assert_eq!(r.dates[&PointId::from("R.end")].clone(), DateSet::exact([total]));
    }
}
