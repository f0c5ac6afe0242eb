use std::collections::BTreeMap;

use super::state::{AwaitingChoice, DelayedActivation, EngineState, Instance, InstanceId, InstanceStatus, JumpState, PendingJump, WaitSet};
use super::trace::{DiscardReason, TraceEvent, TraceKind};
use super::{sample_random_duration, Engine, EngineError, InputEvent, PolicyEffect};
use crate::model::{
    eval_condition, jump_enabled, DurationClass, Evaluation, PointId, PointRole, SendBehavior, TcrId, Tick, ToId, Truth,
    WaitBehavior,
};

/// Where a delivery to a point lands.
enum Target {
    /// The running instance whose end the point is.
    End(InstanceId),
    /// Start of a new instance under this parent.
    Start(Option<InstanceId>),
    Gone(&'static str),
}

pub(super) struct Cx<'a> {
    engine: &'a Engine,
    st: &'a mut EngineState,
    tick: Tick,
    trace: Vec<TraceEvent>,
    chooses: BTreeMap<PointId, Vec<TcrId>>,
    parents: BTreeMap<ToId, ToId>,
}

impl<'a> Cx<'a> {
    pub(super) fn new(engine: &'a Engine, st: &'a mut EngineState) -> Self {
        let tick = st.tick;
        let parents = st.score.parents();
        Cx { engine, st, tick, trace: Vec::new(), chooses: BTreeMap::new(), parents }
    }

    fn emit(&mut self, kind: TraceKind) {
        let seq = self.trace.len() as u32;
        self.trace.push(TraceEvent { tick: self.tick, seq, kind });
    }

    pub(super) fn run_tick(mut self, inputs: &[InputEvent]) -> Result<Vec<TraceEvent>, EngineError> {
        for input in inputs {
            if let InputEvent::Choose { point, relation } = input {
                self.chooses.entry(point.clone()).or_default().push(relation.clone());
            }
        }
        if !self.st.started {
            self.st.started = true;
            let root = self.st.score.root.clone();
            self.execute_start(&root, None);
        }
        for input in inputs {
            if let InputEvent::SetVar { to, name, value } = input {
                self.set_var(to, name, value);
            }
        }
        self.regather();
        self.settle()?;
        self.check_constraints();
        self.collect_garbage();
        self.st.tick += 1;
        Ok(self.trace)
    }

    fn set_var(&mut self, to: &ToId, name: &str, value: &crate::model::VarValue) {
        let targets: Vec<InstanceId> = self.st.running_of(to).map(|i| i.id).collect();
        if targets.is_empty() {
            log::warn!("tick {}: set {name} on {to} ignored, no running instance", self.tick);
        }
        for id in targets {
            self.st.instances.get_mut(&id).unwrap().vars.insert(name.to_string(), value.clone());
            self.emit(TraceKind::VarSet { to: to.clone(), instance: id, name: name.to_string(), value: value.clone() });
        }
    }

    /// Resolves jumps due this tick, repeatedly, until nothing more happens.
    fn settle(&mut self) -> Result<(), EngineError> {
        let bound = self.st.score.points.len() + 1;
        let mut waves = 0;
        loop {
            let due: Vec<JumpId> = self
                .st
                .jumps
                .values()
                .filter(|j| {
                    let now = self.st.score.relations[&j.tcr].evaluation == Evaluation::Now;
                    j.activation <= self.tick && (now || j.deadline <= self.tick)
                })
                .map(|j| j.id)
                .collect();
            let mut fired = Vec::new();
            let mut resolved = 0;
            for id in &due {
                let j = self.st.jumps[id].clone();
                let rel = &self.st.score.relations[&j.tcr];
                let enabled = jump_enabled(rel, &self.st.env(j.source));
                let now = rel.evaluation == Evaluation::Now;
                if !enabled && now && j.deadline > self.tick {
                    continue;
                }
                self.st.jumps.remove(id);
                resolved += 1;
                if enabled {
                    let (from, to) = (rel.from.clone(), rel.to.clone());
                    self.emit(TraceKind::JumpFired {
                        relation: j.tcr.clone(),
                        from,
                        to,
                        activation: j.activation,
                        duration: self.tick - j.activation,
                    });
                    fired.push(PendingJump { state: JumpState::Fired, ..j });
                } else {
                    self.discard(&j.tcr, j.source, DiscardReason::Condition);
                }
            }
            for j in fired {
                self.deliver(&j.tcr, j.source);
            }
            self.sweep();
            if resolved == 0 {
                return Ok(());
            }
            waves += 1;
            if waves > bound {
                let points = due
                    .iter()
                    .filter_map(|id| self.st.jumps.get(id))
                    .map(|j| self.st.score.relations[&j.tcr].from.clone())
                    .chain(self.st.jumps.values().filter(|j| j.deadline == self.tick).map(|j| self.st.score.relations[&j.tcr].from.clone()))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                return Err(EngineError::ZeroDelayCycle { tick: self.tick, points });
            }
        }
    }

    fn lineage_pick(&self, source: InstanceId, candidates: Vec<InstanceId>) -> Option<InstanceId> {
        let lineage = self.st.lineage(source);
        candidates.iter().copied().find(|c| lineage.contains(c)).or_else(|| candidates.first().copied())
    }

    fn target_of(&self, rel: &TcrId, source: InstanceId) -> Target {
        let to = &self.st.score.relations[rel].to;
        let point = &self.st.score.points[to];
        match point.role {
            PointRole::End => {
                let running: Vec<InstanceId> = self.st.running_of(&point.owner).map(|i| i.id).collect();
                self.lineage_pick(source, running).map_or(Target::Gone("no running instance"), Target::End)
            }
            PointRole::Start => match self.parents.get(&point.owner) {
                None => Target::Start(None),
                Some(parent) => {
                    let running: Vec<InstanceId> = self.st.running_of(parent).map(|i| i.id).collect();
                    self.lineage_pick(source, running)
                        .map_or(Target::Gone("parent not running"), |p| Target::Start(Some(p)))
                }
            },
        }
    }

    fn wait_set(&mut self, point: &PointId, context: Option<InstanceId>) -> &mut WaitSet {
        if let Some(i) = self.st.wait_sets.iter().position(|w| &w.point == point && w.context == context) {
            return &mut self.st.wait_sets[i];
        }
        let expected = self.st.score.incoming(point).map(|r| r.id.clone()).collect();
        self.st.wait_sets.push(WaitSet { point: point.clone(), context, expected, arrived: Default::default() });
        self.st.wait_sets.last_mut().unwrap()
    }

    fn context_of(target: &Target) -> Option<Option<InstanceId>> {
        match target {
            Target::End(i) => Some(Some(*i)),
            Target::Start(p) => Some(*p),
            Target::Gone(_) => None,
        }
    }

    fn deliver(&mut self, rel: &TcrId, source: InstanceId) {
        let point_id = self.st.score.relations[rel].to.clone();
        let point = self.st.score.points[&point_id].clone();
        let target = self.target_of(rel, source);
        if let Target::Gone(reason) = target {
            self.emit(TraceKind::DeadPath { point: point_id, reason: reason.into() });
            return;
        }
        if point.wait == WaitBehavior::WaitAll {
            let ctx = Self::context_of(&target).unwrap();
            self.wait_set(&point_id, ctx).arrived.insert(rel.clone());
            return;
        }
        match target {
            Target::End(i) => self.execute_end(i),
            Target::Start(parent) => self.activate(&point.owner, parent),
            Target::Gone(_) => unreachable!(),
        }
    }

    /// Executes wait-all points whose joins are complete.
    fn sweep(&mut self) {
        while let Some(i) = self.st.wait_sets.iter().position(|w| w.is_complete() || w.is_dead()) {
            let w = self.st.wait_sets.remove(i);
            if w.is_dead() {
                self.emit(TraceKind::DeadPath { point: w.point, reason: "all incoming relations discarded".into() });
                continue;
            }
            let point = self.st.score.points[&w.point].clone();
            match (point.role, w.context) {
                (PointRole::End, Some(inst)) if self.st.is_running(inst) => self.execute_end(inst),
                (PointRole::Start, parent) if parent.map_or(true, |p| self.st.is_running(p)) => {
                    self.activate(&point.owner, parent)
                }
                _ => self.emit(TraceKind::DeadPath { point: w.point, reason: "context ended".into() }),
            }
        }
    }

    /// A start point receives control.
    fn activate(&mut self, to: &ToId, parent: Option<InstanceId>) {
        let running = self.st.running_of(to).count();
        if running == 0 {
            self.execute_start(to, parent);
            return;
        }
        let policy = self.st.score.objects[to].policy;
        let effect = match self.engine.policies.get(policy) {
            Some(s) => s.on_reactivation(running),
            None => {
                log::warn!("no strategy registered for policy {}; allowing", policy.name());
                PolicyEffect::Spawn
            }
        };
        self.emit(TraceKind::PolicyApplied { to: to.clone(), policy: policy.name().into() });
        match effect {
            PolicyEffect::Spawn => self.execute_start(to, parent),
            PolicyEffect::Queue => {
                self.st.delayed.push(DelayedActivation { to: to.clone(), parent, requested: self.tick })
            }
            PolicyEffect::Restart => {
                let ids: Vec<InstanceId> = self.st.running_of(to).map(|i| i.id).collect();
                for id in ids {
                    self.close_instance(id, InstanceStatus::Cancelled);
                }
                self.execute_start(to, parent);
            }
            PolicyEffect::Merge => {}
        }
    }

    fn execute_start(&mut self, to: &ToId, parent: Option<InstanceId>) {
        let obj = &self.st.score.objects[to];
        let id = self.st.next_instance;
        self.st.next_instance += 1;
        let inst = Instance {
            id,
            to: to.clone(),
            parent,
            start_tick: self.tick,
            status: InstanceStatus::Running,
            vars: obj.vars.clone(),
            sampled_durations: BTreeMap::new(),
            violated: false,
        };
        let start = obj.start.clone();
        let process = obj.process.clone();
        self.st.instances.insert(id, inst);
        self.emit(TraceKind::InstanceStarted { instance: id, to: to.clone(), parent });
        if let Some(p) = self.engine.processes.get(&process.name) {
            p.start(to, id, &process.params);
        }
        self.emit(TraceKind::PointExecuted { point: start.clone(), instance: id });
        self.dispatch(&start, id);
    }

    fn execute_end(&mut self, id: InstanceId) {
        let to = self.st.instances[&id].to.clone();
        let end = self.st.score.objects[&to].end.clone();
        self.emit(TraceKind::PointExecuted { point: end.clone(), instance: id });
        self.close_instance(id, InstanceStatus::Ended);
        self.dispatch(&end, id);
        if self.st.running_of(&to).next().is_none() {
            if let Some(i) = self.st.delayed.iter().position(|d| d.to == to) {
                let d = self.st.delayed.remove(i);
                if d.parent.map_or(true, |p| self.st.is_running(p)) {
                    self.execute_start(&to, d.parent);
                }
            }
        }
    }

    /// Ends or cancels an instance and cancels its running descendants.
    fn close_instance(&mut self, id: InstanceId, status: InstanceStatus) {
        let descendants = self.st.descendants(id);
        for &d in &descendants {
            let to = {
                let inst = self.st.instances.get_mut(&d).unwrap();
                inst.status = InstanceStatus::Cancelled;
                inst.to.clone()
            };
            self.emit(TraceKind::InstanceCancelled { instance: d, to: to.clone() });
            self.stop_process(&to, d);
        }
        let (to, start_tick) = {
            let inst = self.st.instances.get_mut(&id).unwrap();
            inst.status = status;
            (inst.to.clone(), inst.start_tick)
        };
        let mut closed = descendants;
        closed.push(id);

        // jumps armed by finished descendants die with them too
        let dead: Vec<PendingJump> =
            self.st.jumps.values().filter(|j| self.st.lineage(j.source).contains(&id)).cloned().collect();
        for j in dead {
            self.st.jumps.remove(&j.id);
            self.discard(&j.tcr, j.source, DiscardReason::Cancelled);
        }
        let (gone, kept): (Vec<AwaitingChoice>, Vec<AwaitingChoice>) =
            std::mem::take(&mut self.st.awaiting).into_iter().partition(|a| self.st.lineage(a.instance).contains(&id));
        self.st.awaiting = kept;
        for a in gone {
            for r in self.candidates(&a.point) {
                self.discard(&r, a.instance, DiscardReason::Cancelled);
            }
        }
        self.st.wait_sets.retain(|w| w.context.map_or(true, |c| !closed.contains(&c)));
        self.st.delayed.retain(|d| d.parent.map_or(true, |p| !closed.contains(&p)));

        match status {
            InstanceStatus::Ended => {
                let duration = self.tick - start_tick;
                self.emit(TraceKind::InstanceEnded { instance: id, to: to.clone(), duration });
                let class = self.st.score.objects[&to].duration.class;
                let ok = match class {
                    DurationClass::Flexible => true,
                    DurationClass::SemiRigid { min } => duration >= min,
                    DurationClass::Rigid { min, max } | DurationClass::Random { min, max } => {
                        (min..=max).contains(&duration)
                    }
                };
                if !ok {
                    let detail = format!("duration {duration} outside {}", self.st.score.objects[&to].duration);
                    self.emit(TraceKind::ConstraintViolated { instance: id, to: to.clone(), detail });
                }
            }
            InstanceStatus::Cancelled => self.emit(TraceKind::InstanceCancelled { instance: id, to: to.clone() }),
            InstanceStatus::Running => unreachable!(),
        }
        self.stop_process(&to, id);
    }

    fn stop_process(&self, to: &ToId, id: InstanceId) {
        let name = &self.st.score.objects[to].process.name;
        if let Some(p) = self.engine.processes.get(name) {
            p.stop(to, id);
        }
    }

    fn candidates(&self, point: &PointId) -> Vec<TcrId> {
        self.st.score.outgoing(point).map(|r| r.id.clone()).collect()
    }

    /// Hands control from an executed point to its successors.
    fn dispatch(&mut self, point: &PointId, instance: InstanceId) {
        let candidates = self.candidates(point);
        if self.st.score.points[point].send == SendBehavior::NoChoice {
            for r in candidates {
                self.arm(&r, instance);
            }
            return;
        }
        let options = self.enabled_options(&candidates, instance);
        if !self.try_resolve(point, instance, &candidates, &options) {
            self.st.awaiting.push(AwaitingChoice {
                point: point.clone(),
                instance,
                since: self.tick,
                options: options.clone(),
            });
            self.emit(TraceKind::AwaitingChoice { point: point.clone(), instance, options });
        }
    }

    fn enabled_options(&self, candidates: &[TcrId], instance: InstanceId) -> Vec<TcrId> {
        let env = self.st.env(instance);
        candidates.iter().filter(|r| jump_enabled(&self.st.score.relations[*r], &env)).cloned().collect()
    }

    /// Settles a choice unless the performer has to make it.
    fn try_resolve(&mut self, point: &PointId, instance: InstanceId, candidates: &[TcrId], options: &[TcrId]) -> bool {
        if options.is_empty() {
            for r in candidates {
                self.discard(r, instance, DiscardReason::Condition);
            }
            return true;
        }
        let requested = self.chooses.get_mut(point).and_then(|rs| {
            let i = rs.iter().position(|r| options.contains(r))?;
            Some(rs.remove(i))
        });
        let chosen = match requested {
            Some(r) => Some(r),
            None if options.len() == 1 => Some(options[0].clone()),
            _ => match self.engine.choices.get(&self.st.choice_policy) {
                Some(s) => s.resolve(point, options, &mut self.st.choice_rng).map(|i| options[i].clone()),
                None => None,
            },
        };
        let Some(chosen) = chosen else { return false };
        self.emit(TraceKind::ChoiceResolved { point: point.clone(), relation: chosen.clone() });
        for r in candidates {
            if *r == chosen {
                self.arm(r, instance);
            } else {
                let reason = if options.contains(r) { DiscardReason::NotChosen } else { DiscardReason::Condition };
                self.discard(r, instance, reason);
            }
        }
        true
    }

    /// Choice points carried over from earlier ticks look at their options again.
    fn regather(&mut self) {
        for a in std::mem::take(&mut self.st.awaiting) {
            let candidates = self.candidates(&a.point);
            let options = self.enabled_options(&candidates, a.instance);
            if self.try_resolve(&a.point, a.instance, &candidates, &options) {
                continue;
            }
            if options != a.options {
                self.emit(TraceKind::AwaitingChoice { point: a.point.clone(), instance: a.instance, options: options.clone() });
            }
            self.st.awaiting.push(AwaitingChoice { options, ..a });
        }
    }

    fn arm(&mut self, rel: &TcrId, source: InstanceId) {
        let r = &self.st.score.relations[rel];
        let duration = match (r.duration.class, r.evaluation) {
            (DurationClass::Random { min, max }, Evaluation::Wait) => {
                let d = sample_random_duration(&mut self.st.duration_rng, min, max);
                if let Some(inst) = self.st.instances.get_mut(&source) {
                    inst.sampled_durations.insert(rel.clone(), d);
                }
                d
            }
            _ => r.nominal(),
        };
        let id = self.st.next_jump;
        self.st.next_jump += 1;
        self.st.jumps.insert(
            id,
            PendingJump {
                id,
                tcr: rel.clone(),
                source,
                activation: self.tick,
                deadline: self.tick + duration,
                state: JumpState::Armed,
            },
        );
    }

    fn discard(&mut self, rel: &TcrId, source: InstanceId, reason: DiscardReason) {
        self.emit(TraceKind::JumpDiscarded { relation: rel.clone(), reason });
        let to = self.st.score.relations[rel].to.clone();
        if self.st.score.points[&to].wait != WaitBehavior::WaitAll {
            return;
        }
        if let Some(ctx) = Self::context_of(&self.target_of(rel, source)) {
            self.wait_set(&to, ctx).expected.remove(rel);
        }
    }

    fn check_constraints(&mut self) {
        let ids: Vec<InstanceId> = self.st.running().map(|i| i.id).collect();
        for id in ids {
            let to = self.st.instances[&id].to.clone();
            let constraint = &self.st.score.objects[&to].constraint;
            if constraint.is_constant_true() {
                continue;
            }
            let violated = eval_condition(constraint, &self.st.env(id)) == Truth::False;
            let was = std::mem::replace(&mut self.st.instances.get_mut(&id).unwrap().violated, violated);
            if violated && !was {
                let detail = format!("constraint `{constraint}` is false");
                self.emit(TraceKind::ConstraintViolated { instance: id, to, detail });
            }
        }
    }

    /// Forgets finished instances nothing refers to any more.
    fn collect_garbage(&mut self) {
        let st = &mut *self.st;
        let mut keep: std::collections::BTreeSet<InstanceId> = st.running().map(|i| i.id).collect();
        keep.extend(st.jumps.values().map(|j| j.source));
        keep.extend(st.awaiting.iter().map(|a| a.instance));
        keep.extend(st.wait_sets.iter().filter_map(|w| w.context));
        keep.extend(st.delayed.iter().filter_map(|d| d.parent));
        let roots: Vec<InstanceId> = keep.iter().copied().collect();
        for r in roots {
            keep.extend(st.lineage(r));
        }
        st.instances.retain(|id, _| keep.contains(id));
    }
}

use super::state::JumpId;
