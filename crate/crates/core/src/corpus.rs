//! Seeded generator of small valid scores, for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::edition::compile;
use crate::model::{
    CmpOp, Condition, Duration, DurationClass, Evaluation, InstancePolicy, Interpretation, Literal, ProcessRef, Score,
    ScoreBuilder, SendBehavior, Tcr, VarValue, WaitBehavior,
};

/// Which features generated scores may use.
#[derive(Debug, Clone)]
pub struct CorpusOptions {
    /// Objects besides the root.
    pub max_objects: usize,
    pub choices: bool,
    pub unless: bool,
    pub now: bool,
    pub random: bool,
    pub loops: bool,
    pub policies: bool,
    /// Labels and identifiers outside plain ASCII.
    pub exotic_names: bool,
}

impl CorpusOptions {
    /// Acyclic, choice-free, no unless, now, random or policies.
    pub fn plain() -> Self {
        CorpusOptions {
            max_objects: 4,
            choices: false,
            unless: false,
            now: false,
            random: false,
            loops: false,
            policies: false,
            exotic_names: false,
        }
    }

    pub fn full() -> Self {
        CorpusOptions {
            max_objects: 6,
            choices: true,
            unless: true,
            now: true,
            random: true,
            loops: true,
            policies: true,
            exotic_names: true,
        }
    }
}

const VARS: [&str; 3] = ["a", "b", "u"];

/// A random condition over the variables `a` (int), `b` (bool) and `u`.
pub fn random_condition(rng: &mut impl Rng, depth: u32) -> Condition {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => Condition::Bool(rng.gen_bool(0.5)),
            1 => Condition::var(*VARS.choose(rng).unwrap()),
            _ => {
                let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
                let lhs = if rng.gen_bool(0.8) { Condition::var("a") } else { Condition::var("u") };
                Condition::cmp(*ops.choose(rng).unwrap(), lhs, Condition::Int(rng.gen_range(-1..4)))
            }
        };
    }
    match rng.gen_range(0..3) {
        0 => Condition::and(random_condition(rng, depth - 1), random_condition(rng, depth - 1)),
        1 => Condition::or(random_condition(rng, depth - 1), random_condition(rng, depth - 1)),
        _ => Condition::negate(random_condition(rng, depth - 1)),
    }
}

fn leaf_duration(rng: &mut impl Rng, opts: &CorpusOptions) -> Duration {
    let d = rng.gen_range(1..4);
    match rng.gen_range(0..if opts.random { 5 } else { 4 }) {
        0 => Duration::exactly(d),
        1 => Duration::rigid(d, d + rng.gen_range(0..3)),
        2 => Duration::semi_rigid(d),
        3 => Duration::flexible(),
        _ => Duration::random(d, d + rng.gen_range(0..3)),
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    opts: &'a CorpusOptions,
    b: ScoreBuilder,
    n: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn relation(&mut self, from: String, to: String, duration: Duration, may_condition: bool) {
        let mut r = Tcr::plain(format!("r{}", self.n), from, to, duration);
        self.n += 1;
        if may_condition && self.rng.gen_bool(0.3) {
            r.condition = random_condition(self.rng, 2);
            if self.opts.unless && self.rng.gen_bool(0.3) {
                r.interpretation = Interpretation::Unless;
            }
        }
        let flexible = r.duration.class == DurationClass::Flexible;
        if self.opts.now && flexible && !r.condition.is_constant_true() && self.rng.gen_bool(0.5) {
            r.evaluation = Evaluation::Now;
        }
        self.b = std::mem::replace(&mut self.b, ScoreBuilder::new("_")).relation(r);
    }

    fn edit(&mut self, f: impl FnOnce(ScoreBuilder) -> ScoreBuilder) {
        self.b = f(std::mem::replace(&mut self.b, ScoreBuilder::new("_")));
    }
}

/// A valid score built deterministically from `seed`. It may still be
/// infeasible at edition time; see [`random_compiled_score`].
pub fn random_score(seed: u64, opts: &CorpusOptions) -> Score {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=opts.max_objects);
    let name = |i: usize| {
        if opts.exotic_names && i % 3 == 1 {
            format!("Séq{i}")
        } else {
            format!("O{i}")
        }
    };
    let ids: Vec<String> = (1..=n).map(name).collect();
    let mut parent: Vec<Option<usize>> = Vec::new();
    for i in 0..n {
        // None is the root
        let p = rng.gen_range(0..=i);
        parent.push(if p == 0 { None } else { Some(p - 1) });
    }
    let children = |p: Option<usize>| -> Vec<usize> { (0..n).filter(|&c| parent[c] == p).collect() };
    let id_of = |p: Option<usize>| p.map_or("R".to_string(), |i| ids[i].clone());

    let mut g = Gen { rng: &mut rng, opts, b: ScoreBuilder::new("R"), n: 0 };
    let mut durations = Vec::new();
    for i in 0..n {
        let leaf = children(Some(i)).is_empty();
        let d = if leaf { leaf_duration(g.rng, opts) } else { Duration::flexible() };
        durations.push(d);
        let (id, par) = (ids[i].clone(), id_of(parent[i]));
        g.edit(|b| b.object(id.as_str(), par.as_str(), d));
    }
    g.edit(|b| {
        b.edit_object("R", |t| {
            t.vars.insert("a".into(), VarValue::Int(1));
            t.vars.insert("b".into(), VarValue::Bool(true));
            t.vars.insert("u".into(), VarValue::Unknown);
        })
    });

    for p in std::iter::once(None).chain((0..n).map(Some)) {
        let pid = id_of(p);
        let kids = children(p);
        if kids.is_empty() {
            let d = match p {
                Some(i) => durations[i],
                None => Duration::exactly(g.rng.gen_range(0..3)),
            };
            g.edit(|b| b.edit_object(&pid, |t| t.duration = d));
            g.relation(format!("{pid}.start"), format!("{pid}.end"), d, false);
            if opts.loops && p.is_some() && g.rng.gen_bool(0.3) {
                let back = Duration::exactly(g.rng.gen_range(1..3));
                g.relation(format!("{pid}.end"), format!("{pid}.start"), back, true);
            }
        } else {
            let mut prev: Option<usize> = None;
            for &c in &kids {
                let cid = ids[c].clone();
                let k = Duration::exactly(g.rng.gen_range(0..3));
                match prev {
                    Some(s) if g.rng.gen_bool(0.3) => {
                        g.relation(format!("{}.end", ids[s]), format!("{cid}.start"), k, true)
                    }
                    _ => g.relation(format!("{pid}.start"), format!("{cid}.start"), k, true),
                }
                if opts.policies && g.rng.gen_bool(0.3) {
                    let again = Duration::semi_rigid(g.rng.gen_range(1..4));
                    g.relation(format!("{pid}.start"), format!("{cid}.start"), again, false);
                }
                g.relation(format!("{cid}.end"), format!("{pid}.end"), Duration::flexible(), false);
                prev = Some(c);
            }
            if g.rng.gen_bool(0.5) {
                g.edit(|b| b.edit_point(&format!("{pid}.end"), |pt| pt.wait = WaitBehavior::WaitAll));
            }
            if opts.choices && kids.len() > 1 && g.rng.gen_bool(0.4) {
                g.edit(|b| b.edit_point(&format!("{pid}.start"), |pt| pt.send = SendBehavior::Choice));
            }
        }
    }

    let processes = ["silence", "play_sound", "light", "log"];
    for i in 0..n {
        let id = ids[i].clone();
        let policy = if opts.policies { *InstancePolicy::ALL.choose(g.rng).unwrap() } else { InstancePolicy::Allow };
        let process = processes.choose(g.rng).unwrap().to_string();
        let level = g.rng.gen_range(0..10);
        let constrained = g.rng.gen_bool(0.2);
        let exotic = opts.exotic_names && i % 2 == 0;
        g.edit(|b| {
            b.edit_object(&id, |t| {
                t.policy = policy;
                if process != "silence" {
                    let mut pr = ProcessRef::named(process);
                    pr.params.insert("level".into(), Literal::Int(level));
                    if exotic {
                        pr.params.insert("file".into(), Literal::Str("son \"été\".wav".into()));
                    }
                    t.process = pr;
                }
                if constrained {
                    t.constraint = Condition::cmp(CmpOp::Ge, Condition::var("a"), Condition::Int(0));
                }
                if exotic {
                    t.name = format!("objet {i} «{}»", t.id);
                }
            })
        });
    }
    g.b.build()
}

/// The first seed from `seed` on whose score compiles, with that score compiled.
pub fn random_compiled_score(seed: u64, opts: &CorpusOptions) -> (u64, Score) {
    let mut s = seed;
    loop {
        if let Ok((score, _)) = compile(&random_score(s, opts)) {
            return (s, score);
        }
        s = s.wrapping_add(0x9e37_79b9);
    }
}
