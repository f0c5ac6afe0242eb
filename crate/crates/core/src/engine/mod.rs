//! Performance phase: a deterministic tick-stepped machine.
//!
//! Within a tick the order is fixed: the root starts (first tick only),
//! variable updates apply, pending choices are looked at again, then jumps
//! are resolved in waves. Each wave fires or discards every jump due now,
//! delivers the fired ones, and executes the points that receive control;
//! zero-duration successors are due in the next wave of the same tick.
//! Constraints are checked once the tick has settled.

mod choice;
mod exec;
mod input;
mod oracle;
mod policy;
mod state;
mod trace;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use choice::{AutoSeeded, ChoiceRegistry, ChoiceStrategy, Interactive, AUTO, INTERACTIVE};
pub use input::{by_tick, parse_script, InputEvent, ScriptEntry, ScriptError};
pub use oracle::{oracle_enumerate, OracleError, DEFAULT_STATE_BOUND};
pub use policy::{InstancePolicyStrategy, PolicyEffect, PolicyRegistry};
pub use state::{
    AwaitingChoice, DelayedActivation, EngineState, Instance, InstanceEnv, InstanceId, InstanceStatus, JumpId,
    JumpState, PendingJump, WaitSet,
};
pub use trace::{parse_jsonl, to_jsonl, write_jsonl, DiscardReason, TraceEvent, TraceKind};

use crate::model::{validate_with, PointId, Score, Tick};
use crate::process::ProcessRegistry;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("score has no nominal durations; compile it first")]
    UncompiledScore,
    #[error("score is invalid: {0}")]
    InvalidScore(String),
    #[error("unknown choice policy `{0}`")]
    UnknownChoicePolicy(String),
    #[error("zero-duration jumps do not settle at tick {tick} (points: {})", points.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "))]
    ZeroDelayCycle { tick: Tick, points: Vec<PointId> },
}

/// Uniform integer in `lo..=hi`.
pub fn sample_random_duration(rng: &mut impl Rng, lo: Tick, hi: Tick) -> Tick {
    if lo >= hi {
        return lo;
    }
    rng.gen_range(lo..=hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Quiescent,
    MaxTicks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: Vec<TraceEvent>,
    pub reason: Termination,
    /// Last tick executed.
    pub last_tick: Tick,
    pub state: EngineState,
}

/// Strategies and processes consulted while performing.
#[derive(Clone, Default)]
pub struct Engine {
    pub policies: PolicyRegistry,
    pub choices: ChoiceRegistry,
    pub processes: ProcessRegistry,
}

impl Engine {
    /// State before the first tick; the root starts when tick 0 is stepped.
    pub fn init(&self, s: &Score, seed: u64, choice_policy: &str) -> Result<EngineState, EngineError> {
        let errors: Vec<String> =
            validate_with(s, &self.processes).into_iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect();
        if !errors.is_empty() {
            return Err(EngineError::InvalidScore(errors.join("; ")));
        }
        if !s.is_compiled() {
            return Err(EngineError::UncompiledScore);
        }
        if self.choices.get(choice_policy).is_none() {
            return Err(EngineError::UnknownChoicePolicy(choice_policy.to_string()));
        }
        let choice_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut duration_rng = ChaCha8Rng::seed_from_u64(seed);
        duration_rng.set_stream(1);
        Ok(EngineState {
            tick: 0,
            seed,
            choice_policy: choice_policy.to_string(),
            score: s.clone(),
            started: false,
            instances: Default::default(),
            next_instance: 1,
            jumps: Default::default(),
            next_jump: 1,
            wait_sets: Vec::new(),
            awaiting: Vec::new(),
            delayed: Vec::new(),
            choice_rng,
            duration_rng,
        })
    }

    /// Executes tick `st.tick` and advances to the next one.
    pub fn step(&self, st: &mut EngineState, inputs: &[InputEvent]) -> Result<Vec<TraceEvent>, EngineError> {
        exec::Cx::new(self, st).run_tick(inputs)
    }

    /// Steps until quiescence or until ticks `0..max_ticks` have run.
    pub fn run(
        &self,
        s: &Score,
        script: &[ScriptEntry],
        max_ticks: Tick,
        seed: u64,
        choice_policy: &str,
    ) -> Result<RunOutcome, EngineError> {
        let mut st = self.init(s, seed, choice_policy)?;
        let inputs = by_tick(script);
        let mut trace = Vec::new();
        while st.tick < max_ticks {
            let tick = st.tick;
            let batch = inputs.get(&tick).map(Vec::as_slice).unwrap_or(&[]);
            trace.extend(self.step(&mut st, batch)?);
            if st.is_quiescent() {
                return Ok(RunOutcome { trace, reason: Termination::Quiescent, last_tick: tick, state: st });
            }
        }
        let last_tick = st.tick.saturating_sub(1);
        Ok(RunOutcome { trace, reason: Termination::MaxTicks, last_tick, state: st })
    }
}

pub fn init(s: &Score, seed: u64, choice_policy: &str) -> Result<EngineState, EngineError> {
    Engine::default().init(s, seed, choice_policy)
}

/// One tick with the default strategies.
pub fn step(mut st: EngineState, inputs: &[InputEvent]) -> Result<(EngineState, Vec<TraceEvent>), EngineError> {
    let trace = Engine::default().step(&mut st, inputs)?;
    Ok((st, trace))
}

pub fn run(
    s: &Score,
    script: &[ScriptEntry],
    max_ticks: Tick,
    seed: u64,
    choice_policy: &str,
) -> Result<RunOutcome, EngineError> {
    Engine::default().run(s, script, max_ticks, seed, choice_policy)
}
