use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{PointId, TcrId};

pub const INTERACTIVE: &str = "interactive";
pub const AUTO: &str = "auto";

/// Resolves a choice point with several enabled options.
pub trait ChoiceStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Index into `options`, or `None` to wait for the performer.
    fn resolve(&self, point: &PointId, options: &[TcrId], rng: &mut ChaCha8Rng) -> Option<usize>;
}

pub struct Interactive;

impl ChoiceStrategy for Interactive {
    fn name(&self) -> &'static str {
        INTERACTIVE
    }

    fn resolve(&self, _point: &PointId, _options: &[TcrId], _rng: &mut ChaCha8Rng) -> Option<usize> {
        None
    }
}

/// Uniform pick from the engine's choice stream.
pub struct AutoSeeded;

impl ChoiceStrategy for AutoSeeded {
    fn name(&self) -> &'static str {
        AUTO
    }

    fn resolve(&self, _point: &PointId, options: &[TcrId], rng: &mut ChaCha8Rng) -> Option<usize> {
        Some(rng.gen_range(0..options.len()))
    }
}

#[derive(Clone)]
pub struct ChoiceRegistry {
    strategies: BTreeMap<String, Arc<dyn ChoiceStrategy>>,
}

impl ChoiceRegistry {
    pub fn empty() -> Self {
        ChoiceRegistry { strategies: BTreeMap::new() }
    }

    pub fn register(&mut self, s: Arc<dyn ChoiceStrategy>) {
        self.strategies.insert(s.name().to_string(), s);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ChoiceStrategy>> {
        self.strategies.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}

impl Default for ChoiceRegistry {
    fn default() -> Self {
        let mut r = ChoiceRegistry::empty();
        r.register(Arc::new(Interactive));
        r.register(Arc::new(AutoSeeded));
        r
    }
}
