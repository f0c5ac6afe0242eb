//! A live performance: engine state plus the inputs queued for the next tick.
//!
//! Inputs never apply mid-tick. Whatever arrives between two boundaries is
//! applied as one batch, and every batch is recorded so a session can be
//! replayed as a script.

use iscore_core::engine::{
    Engine, EngineError, EngineState, InputEvent, ScriptEntry, TraceEvent, TraceKind,
};
use iscore_core::model::{Score, Tick};

use crate::wire::{ClientMessage, ErrorCode, ServerMessage, Snapshot};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    /// Wall milliseconds per tick.
    pub tick_ms: u64,
    pub seed: u64,
    pub choice_policy: String,
    /// Stop after this many ticks even if not quiescent.
    pub max_ticks: Option<Tick>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { tick_ms: 1000, seed: 0, choice_policy: "auto".into(), max_ticks: None }
    }
}

pub struct Session {
    engine: Engine,
    state: EngineState,
    max_ticks: Option<Tick>,
    queue: Vec<InputEvent>,
    batches: Vec<ScriptEntry>,
    trace: Vec<TraceEvent>,
    started: bool,
    paused: bool,
    ended: Option<String>,
}

/// Replies meant for the sender of a message.
#[derive(Debug, Default, PartialEq)]
pub struct Outcome {
    pub reply: Vec<ServerMessage>,
}

impl Session {
    pub fn new(score: &Score, cfg: &SessionConfig) -> Result<Self, EngineError> {
        Self::with_engine(Engine::default(), score, cfg)
    }

    pub fn with_engine(engine: Engine, score: &Score, cfg: &SessionConfig) -> Result<Self, EngineError> {
        let state = engine.init(score, cfg.seed, &cfg.choice_policy)?;
        Ok(Session {
            engine,
            state,
            max_ticks: cfg.max_ticks,
            queue: Vec::new(),
            batches: Vec::new(),
            trace: Vec::new(),
            started: false,
            paused: false,
            ended: None,
        })
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    /// Every applied input, stamped with the tick it applied at.
    pub fn script(&self) -> &[ScriptEntry] {
        &self.batches
    }

    pub fn ended(&self) -> Option<&str> {
        self.ended.as_deref()
    }

    /// Whether a wall-clock tick should advance logical time.
    pub fn is_ticking(&self) -> bool {
        self.started && !self.paused && self.ended.is_none()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::of(&self.state, self.started, self.paused, self.ended.clone())
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Outcome {
        let mut out = Outcome::default();
        let err = |code, m: String| ServerMessage::error(code, m);
        if self.ended.is_some() && !matches!(msg, ClientMessage::SnapshotRequest) {
            out.reply.push(err(ErrorCode::Ended, "the session has ended".into()));
            return out;
        }
        match msg {
            ClientMessage::Start if self.started => {
                out.reply.push(err(ErrorCode::AlreadyStarted, "the session is already running".into()))
            }
            ClientMessage::Start => {
                self.started = true;
                log::info!("session started");
            }
            ClientMessage::Pause | ClientMessage::Resume if !self.started => {
                out.reply.push(err(ErrorCode::NotStarted, "the session has not started".into()))
            }
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
            ClientMessage::SetVar { to, name, value } => {
                if self.state.score.object(to.as_str()).is_none() {
                    out.reply.push(err(ErrorCode::UnknownTo, format!("no temporal object `{to}`")));
                } else {
                    self.queue.push(InputEvent::SetVar { to, name, value });
                }
            }
            ClientMessage::Choose { point, relation } => {
                match self.state.awaiting.iter().find(|a| a.point == point) {
                    None => out.reply.push(err(ErrorCode::NotAwaiting, format!("`{point}` is not awaiting a choice"))),
                    Some(a) if !a.options.contains(&relation) => out.reply.push(err(
                        ErrorCode::NotAnOption,
                        format!("`{relation}` is not an enabled option of `{point}`"),
                    )),
                    Some(_) => self.queue.push(InputEvent::Choose { point, relation }),
                }
            }
            ClientMessage::SnapshotRequest => out.reply.push(ServerMessage::Snapshot { state: self.snapshot() }),
        }
        out
    }

    /// Runs one logical tick with the queued inputs.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        let t = self.state.tick;
        let batch = std::mem::take(&mut self.queue);
        self.batches.extend(batch.iter().map(|e| ScriptEntry { tick: t, event: e.clone() }));
        let mut out = vec![ServerMessage::Tick { t }];
        match self.engine.step(&mut self.state, &batch) {
            Ok(events) => {
                for e in &events {
                    out.push(ServerMessage::Trace { event: e.clone() });
                    if let TraceKind::AwaitingChoice { point, options, .. } = &e.kind {
                        out.push(ServerMessage::AwaitingChoice { point: point.clone(), options: options.clone() });
                    }
                }
                self.trace.extend(events);
                if self.state.is_quiescent() {
                    self.end("quiescent", &mut out);
                } else if self.max_ticks.is_some_and(|m| self.state.tick >= m) {
                    self.end("max_ticks", &mut out);
                }
            }
            Err(e) => {
                log::error!("tick {t}: {e}");
                out.push(ServerMessage::error(ErrorCode::Engine, e.to_string()));
                self.end("error", &mut out);
            }
        }
        out
    }

    fn end(&mut self, reason: &str, out: &mut Vec<ServerMessage>) {
        log::info!("session ended at tick {}: {reason}", self.state.tick.saturating_sub(1));
        self.ended = Some(reason.to_string());
        out.push(ServerMessage::Ended { reason: reason.to_string() });
    }
}
