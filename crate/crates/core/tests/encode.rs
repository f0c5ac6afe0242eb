use iscore_core::edition::compile;
use iscore_core::encode::{
    encode_allen, encode_score, meets_constraint_check, observed_interval, AllenRelation, QScore, QTemporalObject,
};
use iscore_core::engine::{oracle_enumerate, DEFAULT_STATE_BOUND};
use iscore_core::model::{validate_score, Duration, Tcr, Tick};
use proptest::prelude::*;

/// Allen's endpoint-order definitions on closed tick intervals.
fn holds(a: AllenRelation, (s1, e1): (Tick, Tick), (s2, e2): (Tick, Tick)) -> bool {
    match a {
        AllenRelation::Before => e1 < s2,
        AllenRelation::Meets => e1 == s2,
        AllenRelation::Overlaps => s1 < s2 && s2 < e1 && e1 < e2,
        AllenRelation::Starts => s1 == s2 && e1 < e2,
        AllenRelation::During => s2 < s1 && e1 < e2,
        AllenRelation::Finishes => e1 == e2 && s2 < s1,
        AllenRelation::Equals => s1 == s2 && e1 == e2,
    }
}

pub fn pair(a: AllenRelation, da: Tick, db: Tick) -> QScore {
    let root = QTemporalObject::new("R", Duration::flexible())
        .with_child(QTemporalObject::new("A", Duration::exactly(da)))
        .with_child(QTemporalObject::new("B", Duration::exactly(db)));
    QScore::new(root).relate(a, "A", "B")
}

/// Traces of the encoded pair, or why there are none.
fn traces(a: AllenRelation, da: Tick, db: Tick) -> Result<Vec<Vec<iscore_core::engine::TraceEvent>>, String> {
    let s = encode_score(&pair(a, da, db)).map_err(|e| format!("{e:?}"))?;
    let (s, _) = compile(&s).map_err(|e| e.to_string())?;
    oracle_enumerate(&s, &[], 40, 0, DEFAULT_STATE_BOUND).map_err(|e| e.to_string())
}

#[test]
fn equals_holds_in_every_trace_when_durations_agree() {
    for d in 1..=4 {
        let all = traces(AllenRelation::Equals, d, d).unwrap();
        assert!(!all.is_empty());
        for t in &all {
            let (ia, ib) = (observed_interval(t, "A").unwrap(), observed_interval(t, "B").unwrap());
            assert_eq!(ia, ib);
        }
    }
}

#[test]
fn during_holds_when_b_is_long_enough() {
    for (da, db) in [(1, 3), (1, 4), (2, 4)] {
        for t in traces(AllenRelation::During, da, db).unwrap() {
            let (ia, ib) = (observed_interval(&t, "A").unwrap(), observed_interval(&t, "B").unwrap());
            assert!(ib.0 < ia.0 && ia.1 < ib.1, "{da} {db}: {ia:?} {ib:?}");
        }
    }
}

#[test]
fn meets_posts_start_equals_start_plus_duration() {
    // b meets a
    let root = QTemporalObject::new("R", Duration::flexible())
        .with_child(QTemporalObject::new("A", Duration::exactly(2)))
        .with_child(QTemporalObject::new("B", Duration::exactly(3)));
    let s = encode_score(&QScore::new(root).relate(AllenRelation::Meets, "B", "A")).unwrap();
    let (s, _) = compile(&s).unwrap();
    let all = oracle_enumerate(&s, &[], 20, 0, DEFAULT_STATE_BOUND).unwrap();
    assert_eq!(all.len(), 1);
    assert_eq!(observed_interval(&all[0], "A").unwrap().0, 3);
    assert_eq!(meets_constraint_check(&all[0], "A", "B"), Ok(true));
}

/// Which (relation, dA, dB) with rigid durations in 1..4 admit at least one
/// pair of intervals at all, by exhaustive placement.
fn satisfiable(a: AllenRelation, da: Tick, db: Tick) -> bool {
    (0..10).any(|s1| (0..10).any(|s2| holds(a, (s1, s1 + da), (s2, s2 + db))))
}

#[test]
fn encoded_pairs_are_sound_when_satisfiable() {
    for a in AllenRelation::ALL {
        for da in 1..=4 {
            for db in 1..=4 {
                if !satisfiable(a, da, db) {
                    continue;
                }
                let all = traces(a, da, db).unwrap();
                assert!(!all.is_empty(), "{a} {da} {db}");
                for t in &all {
                    let (ia, ib) = (observed_interval(t, "A").unwrap(), observed_interval(t, "B").unwrap());
                    assert!(holds(a, ia, ib), "{a} {da} {db}: {ia:?} {ib:?}");
                    assert_eq!((ia.1 - ia.0, ib.1 - ib.0), (da, db), "rigid durations kept");
                }
            }
        }
    }
}

#[test]
fn unsatisfiable_pairs_still_keep_the_order() {
    let mut rejected = Vec::new();
    for a in AllenRelation::ALL {
        for da in 1..=4 {
            for db in 1..=4 {
                if satisfiable(a, da, db) {
                    continue;
                }
                match traces(a, da, db) {
                    Ok(all) => {
                        assert!(!all.is_empty(), "{a} {da} {db}");
                        for t in &all {
                            let (ia, ib) = (observed_interval(t, "A").unwrap(), observed_interval(t, "B").unwrap());
                            assert!(holds(a, ia, ib), "{a} {da} {db}: {ia:?} {ib:?}");
                        }
                    }
                    Err(_) => rejected.push((a, da, db)),
                }
            }
        }
    }
    assert_eq!(rejected, []);
}

fn arb_relation() -> impl Strategy<Value = AllenRelation> {
    prop::sample::select(AllenRelation::ALL.to_vec())
}

proptest! {
    #[test]
    fn encoded_scores_validate(rels in prop::collection::vec((arb_relation(), 0usize..4, 0usize..4), 0..6), ds in prop::collection::vec(1u64..5, 4)) {
        let ids = ["A", "B", "C", "D"];
        let mut root = QTemporalObject::new("R", Duration::flexible());
        let mut inner = QTemporalObject::new("A", Duration::flexible());
        inner = inner.with_child(QTemporalObject::new("B", Duration::exactly(ds[1])));
        root = root.with_child(inner).with_child(QTemporalObject::new("C", Duration::semi_rigid(ds[2]))).with_child(QTemporalObject::new("D", Duration::exactly(ds[3])));
        let mut q = QScore::new(root);
        for (r, x, y) in &rels {
            if x != y {
                q = q.relate(*r, ids[*x], ids[*y]);
            }
        }
        match encode_score(&q) {
            Ok(s) => prop_assert!(validate_score(&s).iter().all(|d| !d.is_error())),
            // the same relation asked twice yields the same ids
            Err(_) => prop_assert!(rels.iter().enumerate().any(|(i, r)| rels[..i].contains(r))),
        }
    }

    #[test]
    fn encoding_is_compositional(rels in prop::collection::vec((arb_relation(), 0usize..3, 0usize..3), 1..5)) {
        let ids = ["A", "B", "C"];
        let root = || QTemporalObject::new("R", Duration::flexible())
            .with_child(QTemporalObject::new("A", Duration::exactly(2)))
            .with_child(QTemporalObject::new("B", Duration::exactly(3)))
            .with_child(QTemporalObject::new("C", Duration::flexible()));
        let mut rels: Vec<_> = rels.into_iter().filter(|(_, x, y)| x != y).collect();
        rels.dedup();
        let mut seen = Vec::new();
        rels.retain(|r| if seen.contains(r) { false } else { seen.push(*r); true });
        let mut q = QScore::new(root());
        for (r, x, y) in &rels {
            q = q.relate(*r, ids[*x], ids[*y]);
        }
        let whole = encode_score(&q).unwrap();
        let objects = encode_score(&QScore::new(root())).unwrap();
        let by_id = |id: &str| q.objects().into_iter().find(|(_, t)| t.id.as_str() == id).unwrap().1.clone();
        for (r, x, y) in &rels {
            for tcr in encode_allen(*r, &by_id(ids[*x]), &by_id(ids[*y])) {
                prop_assert_eq!(whole.relation(tcr.id.as_str()), Some(&tcr));
            }
        }
        // the rest are the structural relations; anchors of placed children
        // only lose their fixed duration
        for (id, tcr) in &whole.relations {
            let allen = rels.iter().any(|(r, x, y)| encode_allen(*r, &by_id(ids[*x]), &by_id(ids[*y])).iter().any(|t| &t.id == id));
            let plain = objects.relations.get(id);
            let relaxed = plain.map(|p| Tcr { duration: Duration::flexible(), ..p.clone() });
            prop_assert!(allen || plain == Some(tcr) || relaxed.as_ref() == Some(tcr));
        }
        prop_assert_eq!(whole.relations.len(), objects.relations.len() + rels.iter().map(|(r, x, y)| encode_allen(*r, &by_id(ids[*x]), &by_id(ids[*y])).len()).sum::<usize>());
        prop_assert_eq!(&whole.objects, &objects.objects);
        prop_assert_eq!(&whole.points, &objects.points);
    }
}
