use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::InstancePolicy;

/// What happens to a start delivery while the object already runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyEffect {
    /// Start another instance alongside the running ones.
    Spawn,
    /// Start once the running instance ends.
    Queue,
    /// Cancel the running instances, then start afresh.
    Restart,
    /// Absorb the delivery into the running instance.
    Merge,
}

pub trait InstancePolicyStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn on_reactivation(&self, running: usize) -> PolicyEffect;
}

struct Fixed(&'static str, PolicyEffect);

impl InstancePolicyStrategy for Fixed {
    fn name(&self) -> &'static str {
        self.0
    }

    fn on_reactivation(&self, _running: usize) -> PolicyEffect {
        self.1
    }
}

#[derive(Clone)]
pub struct PolicyRegistry {
    strategies: BTreeMap<String, Arc<dyn InstancePolicyStrategy>>,
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        PolicyRegistry { strategies: BTreeMap::new() }
    }

    pub fn register(&mut self, s: Arc<dyn InstancePolicyStrategy>) {
        self.strategies.insert(s.name().to_string(), s);
    }

    pub fn get(&self, policy: InstancePolicy) -> Option<&Arc<dyn InstancePolicyStrategy>> {
        self.strategies.get(policy.name())
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        let mut r = PolicyRegistry::empty();
        for (p, effect) in [
            (InstancePolicy::Allow, PolicyEffect::Spawn),
            (InstancePolicy::Delay, PolicyEffect::Queue),
            (InstancePolicy::Cancel, PolicyEffect::Restart),
            (InstancePolicy::Split, PolicyEffect::Merge),
        ] {
            r.register(Arc::new(Fixed(p.name(), effect)));
        }
        r
    }
}
