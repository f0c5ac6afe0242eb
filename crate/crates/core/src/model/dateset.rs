use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Tick;

/// Exact sets larger than this are widened to `AtLeast`.
pub const EXACT_LIMIT: usize = 256;

/// Set of ticks at which a point may execute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DateSet {
    /// `{ d | d >= offset, (d - offset) % period == 0 }`, period > 0.
    Progression { offset: Tick, period: Tick },
    AtLeast { min: Tick },
    Exact { ticks: BTreeSet<Tick> },
    Any,
    /// The analysis could not bound the set.
    Unknown,
}

impl DateSet {
    /// Builds a progression; a zero period collapses to the single offset.
    pub fn progression(offset: Tick, period: Tick) -> Self {
        if period == 0 {
            DateSet::exact([offset])
        } else {
            DateSet::Progression { offset, period }
        }
    }

    pub fn exact(ticks: impl IntoIterator<Item = Tick>) -> Self {
        DateSet::Exact {
            ticks: ticks.into_iter().collect(),
        }
        .normalized()
    }

    pub fn empty() -> Self {
        DateSet::Exact {
            ticks: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DateSet::Exact { ticks } if ticks.is_empty())
    }

    /// `Any` and `Unknown` admit every tick.
    pub fn contains(&self, t: Tick) -> bool {
        match self {
            DateSet::Progression { offset, period } => t >= *offset && (t - offset) % period == 0,
            DateSet::AtLeast { min } => t >= *min,
            DateSet::Exact { ticks } => ticks.contains(&t),
            DateSet::Any | DateSet::Unknown => true,
        }
    }

    /// Smallest member, when the set has a finite lower bound.
    pub fn min(&self) -> Option<Tick> {
        match self {
            DateSet::Progression { offset, .. } => Some(*offset),
            DateSet::AtLeast { min } => Some(*min),
            DateSet::Exact { ticks } => ticks.first().copied(),
            DateSet::Any | DateSet::Unknown => None,
        }
    }

    fn normalized(self) -> Self {
        match self {
            DateSet::Exact { ticks } if ticks.len() > EXACT_LIMIT => DateSet::AtLeast {
                min: *ticks.first().unwrap(),
            },
            other => other,
        }
    }

    /// Every member shifted by `delta`.
    pub fn shift(&self, delta: Tick) -> Self {
        match self {
            DateSet::Progression { offset, period } => DateSet::Progression {
                offset: offset + delta,
                period: *period,
            },
            DateSet::AtLeast { min } => DateSet::AtLeast { min: min + delta },
            DateSet::Exact { ticks } => DateSet::Exact {
                ticks: ticks.iter().map(|t| t + delta).collect(),
            },
            other => other.clone(),
        }
    }

    /// Every member shifted by every value in `lo..=hi`.
    pub fn shift_range(&self, lo: Tick, hi: Tick) -> Self {
        if lo == hi {
            return self.shift(lo);
        }
        match self {
            DateSet::Exact { ticks } => {
                let out: BTreeSet<Tick> = ticks
                    .iter()
                    .flat_map(|t| (lo..=hi).map(move |d| t + d))
                    .collect();
                DateSet::Exact { ticks: out }.normalized()
            }
            DateSet::Progression { offset, .. } => DateSet::AtLeast { min: offset + lo },
            DateSet::AtLeast { min } => DateSet::AtLeast { min: min + lo },
            other => other.clone(),
        }
    }

    /// Smallest representable superset of the union.
    pub fn join(&self, other: &DateSet) -> DateSet {
        use DateSet::*;
        match (self, other) {
            (Any, _) | (_, Any) => Any,
            (Unknown, _) | (_, Unknown) => Unknown,
            (Exact { ticks: a }, _) if a.is_empty() => other.clone(),
            (_, Exact { ticks: b }) if b.is_empty() => self.clone(),
            (Exact { ticks: a }, Exact { ticks: b }) => {
                Exact { ticks: a.union(b).copied().collect() }.normalized()
            }
            (Progression { offset: o1, period: p1 }, Progression { offset: o2, period: p2 }) => {
                if p1 != p2 {
                    Unknown
                } else if o1 % p1 == o2 % p1 {
                    Progression { offset: *o1.min(o2), period: *p1 }
                } else {
                    AtLeast { min: *o1.min(o2) }
                }
            }
            (Progression { offset, period }, Exact { ticks })
            | (Exact { ticks }, Progression { offset, period }) => {
                if ticks.iter().all(|t| t % period == offset % period) {
                    let first = *ticks.first().unwrap();
                    Progression { offset: first.min(*offset), period: *period }
                } else {
                    AtLeast { min: (*offset).min(*ticks.first().unwrap()) }
                }
            }
            (a, b) => AtLeast {
                min: a.min().unwrap().min(b.min().unwrap()),
            },
        }
    }

    /// Closes the set under repeated addition of `period`.
    pub fn periodize(&self, period: Tick) -> DateSet {
        if period == 0 {
            return self.clone();
        }
        match self {
            DateSet::Exact { ticks } if ticks.is_empty() => self.clone(),
            DateSet::Exact { ticks } => {
                let first = *ticks.first().unwrap();
                if ticks.iter().all(|t| t % period == first % period) {
                    DateSet::Progression { offset: first, period }
                } else {
                    DateSet::AtLeast { min: first }
                }
            }
            DateSet::Progression { offset, period: p } if *p == period => self.clone(),
            DateSet::Progression { .. } => DateSet::Unknown,
            other => other.clone(),
        }
    }
}

impl fmt::Display for DateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DateSet::Progression { offset, period } => {
                if *offset == 0 {
                    write!(f, "d >= 0 and d % {period} = 0")
                } else {
                    write!(f, "d >= {offset} and (d - {offset}) % {period} = 0")
                }
            }
            DateSet::AtLeast { min } => write!(f, "d >= {min}"),
            DateSet::Exact { ticks } => {
                f.write_str("{")?;
                for (i, t) in ticks.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("}")
            }
            DateSet::Any => f.write_str("any"),
            DateSet::Unknown => f.write_str("unknown"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn progression_membership() {
        let ds = DateSet::progression(3, 8);
        assert!(ds.contains(11));
        assert!(!ds.contains(4));
        assert!(DateSet::Any.contains(12345));
    }

    #[test]
    fn zero_period_collapses() {
        assert_eq!(DateSet::progression(5, 0), DateSet::exact([5]));
    }

    #[test]
    fn join_rules() {
        let p = DateSet::progression(0, 8);
        assert_eq!(DateSet::exact([0]).join(&p), p);
        assert_eq!(DateSet::exact([16]).join(&p), p);
        assert_eq!(DateSet::exact([3]).join(&p), DateSet::AtLeast { min: 0 });
        assert_eq!(p.join(&DateSet::progression(0, 5)), DateSet::Unknown);
        assert_eq!(DateSet::empty().join(&p), p);
    }

    #[test]
    fn periodize_exact() {
        assert_eq!(DateSet::exact([4]).periodize(8), DateSet::progression(4, 8));
        assert_eq!(DateSet::exact([4, 5]).periodize(8), DateSet::AtLeast { min: 4 });
    }

    proptest! {
        #[test]
        fn progression_members(o in 0u64..1000, p in 1u64..100, k in 0u64..100, below in 0u64..1000) {
            let ds = DateSet::progression(o, p);
            prop_assert!(ds.contains(o + k * p));
            if below < o {
                prop_assert!(!ds.contains(below));
            }
        }

        #[test]
        fn join_is_superset(a in proptest::collection::btree_set(0u64..60, 0..6),
                            o in 0u64..20, p in 1u64..10, t in 0u64..80) {
            let x = DateSet::Exact { ticks: a };
            let y = DateSet::progression(o, p);
            let j = x.join(&y);
            if x.contains(t) || y.contains(t) {
                prop_assert!(j.contains(t));
            }
        }
    }
}
