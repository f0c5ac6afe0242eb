//! Process stubs attached to temporal objects. Media playback is not
//! performed; stubs only log their lifecycle and parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::{Literal, ToId};

pub trait ProcessStub: Send + Sync {
    fn name(&self) -> &str;

    fn start(&self, object: &ToId, instance: u64, params: &BTreeMap<String, Literal>) {
        log::info!("{} start: object={object} instance={instance} params={params:?}", self.name());
    }

    fn stop(&self, object: &ToId, instance: u64) {
        log::info!("{} stop: object={object} instance={instance}", self.name());
    }
}

/// A stub that logs under a fixed name.
pub struct LoggingStub(pub &'static str);

impl ProcessStub for LoggingStub {
    fn name(&self) -> &str {
        self.0
    }
}

/// Does nothing at all, not even logging.
pub struct Silence;

impl ProcessStub for Silence {
    fn name(&self) -> &str {
        "silence"
    }

    fn start(&self, _: &ToId, _: u64, _: &BTreeMap<String, Literal>) {}

    fn stop(&self, _: &ToId, _: u64) {}
}

#[derive(Clone)]
pub struct ProcessRegistry {
    stubs: BTreeMap<String, Arc<dyn ProcessStub>>,
}

impl ProcessRegistry {
    pub fn empty() -> Self {
        ProcessRegistry { stubs: BTreeMap::new() }
    }

    pub fn register(&mut self, stub: Arc<dyn ProcessStub>) {
        let name = stub.name().to_string();
        if self.stubs.insert(name.clone(), stub).is_some() {
            log::warn!("process stub `{name}` registered twice; keeping the latest");
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.stubs.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn ProcessStub>> {
        self.stubs.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.stubs.keys().map(String::as_str)
    }
}

impl Default for ProcessRegistry {
    fn default() -> Self {
        let mut reg = ProcessRegistry::empty();
        reg.register(Arc::new(Silence));
        for name in ["play_sound", "play_video", "show_image", "light", "log"] {
            reg.register(Arc::new(LoggingStub(name)));
        }
        reg
    }
}

impl std::fmt::Debug for ProcessRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.stubs.keys()).finish()
    }
}
