//! Standard single-run topology: one relay, one outliner, N implementers,
//! one evaluator, all on the simulated network. Used by the integration
//! tests and the experiment harness.

use std::cell::RefCell;
use std::rc::Rc;

use claim_protocol::ProtocolConfig;
use crdt_core::{converged, DocumentState};
use simnet::{ActorId, FaultPlan, LatencyModel, SimConfig, Simulation, SimTrace, VirtualTime};
use sync_relay::{
    EventFilter, MemStorage, RelayActor, RelayCore, SessionConfig, SessionCore,
};

use crate::evaluator::EvaluatorActor;
use crate::generator::ScriptedGenerator;
use crate::implementer::ImplementerActor;
use crate::metrics::RunMetrics;
use crate::outliner::OutlinerActor;
use crate::script::TaskScript;

pub const RELAY_ACTOR: ActorId = ActorId(0);
pub const OUTLINER_ACTOR: ActorId = ActorId(1);

/// Actor id of implementer `i` (0-based).
pub fn implementer_actor(i: usize) -> ActorId {
    ActorId(2 + i)
}

pub fn evaluator_actor(implementers: usize) -> ActorId {
    ActorId(2 + implementers)
}

#[derive(Clone)]
pub struct RunSpec {
    pub script: TaskScript,
    pub implementers: usize,
    pub seed: u64,
    pub latency: LatencyModel,
    pub faults: FaultPlan,
    pub protocol: ProtocolConfig,
    pub evaluator_timeout: VirtualTime,
    pub time_cap: VirtualTime,
}

impl RunSpec {
    pub fn new(script: TaskScript, implementers: usize, seed: u64) -> Self {
        RunSpec {
            script,
            implementers,
            seed,
            latency: LatencyModel::default(),
            faults: FaultPlan::default(),
            protocol: ProtocolConfig::default(),
            evaluator_timeout: VirtualTime::from_secs(600),
            time_cap: VirtualTime::from_secs(3600),
        }
    }
}

pub struct RunOutcome {
    pub metrics: RunMetrics,
    /// Final text per replica doc: outliner, implementers…, evaluator.
    pub texts: Vec<String>,
    pub relay_text: String,
    /// All live replicas (crashed implementers excluded) pairwise converged
    /// with the relay.
    pub converged: bool,
    /// Total remote-op callbacks across all agent subscriptions.
    pub callback_count: u64,
    pub quiescent: bool,
    pub end_time: VirtualTime,
    pub trace: SimTrace,
}

pub fn run_single(spec: RunSpec) -> RunOutcome {
    let metrics = RunMetrics::shared();
    let mut sim = Simulation::new(SimConfig {
        seed: spec.seed,
        latency: spec.latency,
        faults: spec.faults.clone(),
        time_cap: spec.time_cap,
        ..SimConfig::default()
    });

    let relay_core = Rc::new(RefCell::new(RelayCore::new("task", MemStorage::default())));
    let relay = sim.add_actor("relay", Box::new(RelayActor::new(relay_core.clone())));
    assert_eq!(relay, RELAY_ACTOR);

    let session = |replica: u64| {
        let mut core = SessionCore::new(DocumentState::new(replica), SessionConfig::new("task"));
        // count every remote op observed, for the observation-cost metric
        core.handle_mut()
            .subscribe(EventFilter::remote_only(), |_| {});
        Rc::new(RefCell::new(core))
    };

    let mut cores = Vec::new();

    let outliner_core = session(1);
    cores.push(outliner_core.clone());
    let id = sim.add_actor(
        "outliner",
        Box::new(OutlinerActor::new(outliner_core, relay, spec.script.clone())),
    );
    assert_eq!(id, OUTLINER_ACTOR);

    for i in 0..spec.implementers {
        let core = session(2 + i as u64);
        cores.push(core.clone());
        // distinct stream per agent so sampled generation times differ
        let generator = ScriptedGenerator::new(
            spec.script.clone(),
            spec.seed.wrapping_add(i as u64 * 0x9E37_79B9),
        );
        let id = sim.add_actor(
            &format!("impl{i}"),
            Box::new(ImplementerActor::new(
                core,
                relay,
                Box::new(generator),
                spec.protocol.clone(),
                metrics.clone(),
            )),
        );
        assert_eq!(id, implementer_actor(i));
    }

    let evaluator_core = session(2 + spec.implementers as u64);
    cores.push(evaluator_core.clone());
    let id = sim.add_actor(
        "evaluator",
        Box::new(EvaluatorActor::new(
            evaluator_core,
            relay,
            spec.script.todos.len(),
            spec.evaluator_timeout,
            metrics.clone(),
        )),
    );
    assert_eq!(id, evaluator_actor(spec.implementers));

    let trace = sim.run();

    let alive: Vec<bool> = (0..cores.len())
        .map(|i| sim.is_alive(ActorId(1 + i)))
        .collect();
    let relay_ref = relay_core.borrow();
    let mut all_converged = true;
    for (i, core) in cores.iter().enumerate() {
        if alive[i] && !converged(core.borrow().handle().doc(), relay_ref.doc()) {
            all_converged = false;
        }
    }

    let texts: Vec<String> = cores
        .iter()
        .map(|c| c.borrow().handle().doc().text_read())
        .collect();
    let callback_count: u64 = cores.iter().map(|c| c.borrow().handle().total_callbacks()).sum();

    let run_metrics = metrics.borrow().clone();
    RunOutcome {
        metrics: run_metrics,
        texts,
        relay_text: relay_ref.doc().text_read(),
        converged: all_converged,
        callback_count,
        quiescent: trace.quiescent,
        end_time: VirtualTime(trace.end_time),
        trace,
    }
}
