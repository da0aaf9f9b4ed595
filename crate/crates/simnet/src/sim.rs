use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fault::FaultPlan;
use crate::latency::LatencyModel;
use crate::time::VirtualTime;
use crate::trace::{SimTrace, TraceRecord};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActorId(pub usize);

impl fmt::Debug for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown actor {0:?}")]
    UnknownActor(ActorId),
}

/// A cooperatively scheduled logical actor. Handlers run one at a time over
/// virtual time; all effects go through the [`Ctx`].
pub trait Actor {
    fn on_start(&mut self, ctx: &mut Ctx);
    fn on_timer(&mut self, ctx: &mut Ctx, token: u64);
    fn on_message(&mut self, ctx: &mut Ctx, from: ActorId, bytes: Vec<u8>);
    /// Best-effort notification that a frame sent to `peer` could not be
    /// handed off (peer crashed or absent). Connection-refused analog.
    fn on_send_failed(&mut self, _ctx: &mut Ctx, _peer: ActorId) {}
}

enum Payload {
    Start(ActorId),
    Timer { actor: ActorId, token: u64 },
    Deliver { to: ActorId, from: ActorId, bytes: Vec<u8> },
    SendFailed { sender: ActorId, peer: ActorId },
    Crash(ActorId),
    PartitionHeal(usize),
}

struct Queued {
    time: VirtualTime,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

enum Action {
    Send { to: ActorId, bytes: Vec<u8> },
    SetTimer { delay: VirtualTime, token: u64 },
    Trace { event: String, detail: String },
    Halt,
}

/// Handler-side view of the simulation. Effects are collected and applied
/// after the handler returns, in order.
pub struct Ctx<'a> {
    now: VirtualTime,
    self_id: ActorId,
    rng: &'a mut ChaCha8Rng,
    actions: Vec<Action>,
}

impl Ctx<'_> {
    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn self_id(&self) -> ActorId {
        self.self_id
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut *self.rng
    }

    pub fn send(&mut self, to: ActorId, bytes: Vec<u8>) {
        self.actions.push(Action::Send { to, bytes });
    }

    pub fn set_timer(&mut self, delay: VirtualTime, token: u64) {
        self.actions.push(Action::SetTimer { delay, token });
    }

    pub fn trace(&mut self, event: &str, detail: String) {
        self.actions.push(Action::Trace {
            event: event.to_owned(),
            detail,
        });
    }

    /// Stops the whole simulation after the current event.
    pub fn halt(&mut self) {
        self.actions.push(Action::Halt);
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub latency: LatencyModel,
    pub faults: FaultPlan,
    pub time_cap: VirtualTime,
    /// Per-link FIFO delivery (stream-transport semantics). Disable to allow
    /// frame reordering.
    pub fifo_links: bool,
    pub trace_enabled: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            latency: LatencyModel::default(),
            faults: FaultPlan::default(),
            time_cap: VirtualTime::from_secs(3600),
            fifo_links: true,
            trace_enabled: true,
        }
    }
}

/// Frame accounting for the conservation invariant:
/// sent = delivered + dropped + in-flight at cap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl FrameStats {
    pub fn in_flight(&self) -> u64 {
        self.sent - self.delivered - self.dropped
    }
}

struct Slot {
    name: String,
    actor: Box<dyn Actor>,
    alive: bool,
}

/// Strictly single-threaded discrete-event simulator. Events dispatch in
/// (time, insertion sequence) order; identical configs and seeds produce
/// byte-identical traces.
pub struct Simulation {
    config: SimConfig,
    now: VirtualTime,
    seq: u64,
    queue: BinaryHeap<Queued>,
    slots: Vec<Slot>,
    rng: ChaCha8Rng,
    link_clock: HashMap<(ActorId, ActorId), VirtualTime>,
    held: Vec<Vec<(ActorId, ActorId, Vec<u8>)>>, // per partition
    trace: Vec<TraceRecord>,
    stats: FrameStats,
    halted: bool,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let held = vec![Vec::new(); config.faults.partitions.len()];
        Simulation {
            config,
            now: VirtualTime::ZERO,
            seq: 0,
            queue: BinaryHeap::new(),
            slots: Vec::new(),
            rng,
            link_clock: HashMap::new(),
            held,
            trace: Vec::new(),
            stats: FrameStats::default(),
            halted: false,
        }
    }

    pub fn add_actor(&mut self, name: &str, actor: Box<dyn Actor>) -> ActorId {
        let id = ActorId(self.slots.len());
        self.slots.push(Slot {
            name: name.to_owned(),
            actor,
            alive: true,
        });
        id
    }

    pub fn stats(&self) -> FrameStats {
        self.stats
    }

    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn is_alive(&self, id: ActorId) -> bool {
        self.slots.get(id.0).map(|s| s.alive).unwrap_or(false)
    }

    /// Runs to quiescence (empty queue) or the time cap. Returns the trace;
    /// `quiescent` is false when the cap was hit first.
    pub fn run(&mut self) -> SimTrace {
        for i in 0..self.slots.len() {
            self.push(VirtualTime::ZERO, Payload::Start(ActorId(i)));
        }
        let crashes = self.config.faults.crashes.clone();
        for (actor, time) in crashes {
            self.push(time, Payload::Crash(actor));
        }
        let heals: Vec<(usize, VirtualTime)> = self
            .config
            .faults
            .partitions
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.end.map(|e| (i, e)))
            .collect();
        for (i, end) in heals {
            self.push(end, Payload::PartitionHeal(i));
        }

        let mut quiescent = true;
        while let Some(ev) = self.queue.pop() {
            debug_assert!(ev.time >= self.now, "virtual time must not decrease");
            if ev.time > self.config.time_cap {
                quiescent = false;
                break;
            }
            self.now = ev.time;
            self.dispatch(ev.payload);
            if self.halted {
                break;
            }
        }
        // frames still held behind terminal partitions count as in-flight
        SimTrace {
            records: std::mem::take(&mut self.trace),
            quiescent: quiescent && !self.halted,
            end_time: self.now.as_micros(),
        }
    }

    fn dispatch(&mut self, payload: Payload) {
        match payload {
            Payload::Start(id) => {
                self.record(id, "start", String::new());
                self.with_actor(id, |actor, ctx| actor.on_start(ctx));
            }
            Payload::Timer { actor, token } => {
                if !self.is_alive(actor) {
                    return;
                }
                self.record(actor, "timer", format!("token={token}"));
                self.with_actor(actor, |a, ctx| a.on_timer(ctx, token));
            }
            Payload::Deliver { to, from, bytes } => {
                if !self.is_alive(to) {
                    self.stats.dropped += 1;
                    self.record(to, "drop", format!("from={} dead-target", from.0));
                    return;
                }
                self.stats.delivered += 1;
                self.record(to, "deliver", format!("from={} len={}", from.0, bytes.len()));
                self.with_actor(to, |a, ctx| a.on_message(ctx, from, bytes));
            }
            Payload::SendFailed { sender, peer } => {
                if !self.is_alive(sender) {
                    return;
                }
                self.record(sender, "send_failed", format!("peer={}", peer.0));
                self.with_actor(sender, |a, ctx| a.on_send_failed(ctx, peer));
            }
            Payload::Crash(id) => {
                if let Some(slot) = self.slots.get_mut(id.0) {
                    slot.alive = false;
                }
                self.record(id, "crash", String::new());
            }
            Payload::PartitionHeal(idx) => {
                self.record(ActorId(usize::MAX), "partition_heal", format!("id={idx}"));
                let held = std::mem::take(&mut self.held[idx]);
                for (to, from, bytes) in held {
                    let delay = self.config.latency.sample(&mut self.rng);
                    let at = self.fifo_adjust(from, to, self.now + delay);
                    self.push(at, Payload::Deliver { to, from, bytes });
                }
            }
        }
    }

    fn with_actor(&mut self, id: ActorId, f: impl FnOnce(&mut dyn Actor, &mut Ctx)) {
        let mut slot = std::mem::replace(
            &mut self.slots[id.0],
            Slot {
                name: String::new(),
                actor: Box::new(NullActor),
                alive: false,
            },
        );
        let mut ctx = Ctx {
            now: self.now,
            self_id: id,
            rng: &mut self.rng,
            actions: Vec::new(),
        };
        f(slot.actor.as_mut(), &mut ctx);
        let actions = ctx.actions;
        self.slots[id.0] = slot;
        for action in actions {
            self.apply(id, action);
        }
    }

    fn apply(&mut self, from: ActorId, action: Action) {
        match action {
            Action::Send { to, bytes } => self.route(from, to, bytes),
            Action::SetTimer { delay, token } => {
                self.push(self.now + delay, Payload::Timer { actor: from, token });
            }
            Action::Trace { event, detail } => self.record(from, &event, detail),
            Action::Halt => self.halted = true,
        }
    }

    fn route(&mut self, from: ActorId, to: ActorId, bytes: Vec<u8>) {
        self.stats.sent += 1;
        if self.config.trace_enabled {
            self.record(from, "send", format!("to={} len={}", to.0, bytes.len()));
        }
        if !self.is_alive(to) {
            self.stats.dropped += 1;
            let delay = self.config.latency.sample(&mut self.rng);
            self.push(self.now + delay, Payload::SendFailed { sender: from, peer: to });
            return;
        }
        for (idx, p) in self.config.faults.partitions.iter().enumerate() {
            if p.separates(from, to, self.now) {
                match p.end {
                    Some(_) => self.held[idx].push((to, from, bytes)),
                    None => self.stats.dropped += 1,
                }
                return;
            }
        }
        if self.config.faults.drop_probability > 0.0
            && self.rng.gen_bool(self.config.faults.drop_probability)
        {
            self.stats.dropped += 1;
            self.record(from, "drop", format!("to={} random", to.0));
            return;
        }
        let delay = self.config.latency.sample(&mut self.rng);
        let at = self.fifo_adjust(from, to, self.now + delay);
        self.push(at, Payload::Deliver { to, from, bytes });
    }

    fn fifo_adjust(&mut self, from: ActorId, to: ActorId, proposed: VirtualTime) -> VirtualTime {
        if !self.config.fifo_links {
            return proposed;
        }
        let last = self.link_clock.entry((from, to)).or_insert(VirtualTime::ZERO);
        let at = proposed.max(*last);
        *last = at;
        at
    }

    fn push(&mut self, time: VirtualTime, payload: Payload) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Queued { time, seq, payload });
    }

    fn record(&mut self, actor: ActorId, event: &str, detail: String) {
        if !self.config.trace_enabled {
            return;
        }
        let name = self
            .slots
            .get(actor.0)
            .map(|s| s.name.clone())
            .unwrap_or_else(|| "sim".to_owned());
        self.trace.push(TraceRecord {
            time: self.now.as_micros(),
            actor: name,
            event: event.to_owned(),
            detail,
        });
    }
}

struct NullActor;

impl Actor for NullActor {
    fn on_start(&mut self, _: &mut Ctx) {}
    fn on_timer(&mut self, _: &mut Ctx, _: u64) {}
    fn on_message(&mut self, _: &mut Ctx, _: ActorId, _: Vec<u8>) {}
}
