//! Agent roles for collaborative code generation over a shared replicated
//! document: an outliner that lays down a skeleton of claimable TODO
//! markers, implementers that race to claim and fill them, and an
//! evaluator that waits for completion and reports duplicate declarations.
//! Generation is scripted and deterministic; a live model would plug in
//! behind the same generator contract.

pub mod conflict;
pub mod evaluator;
pub mod generator;
pub mod implementer;
pub mod metrics;
pub mod outliner;
pub mod runner;
pub mod script;

pub use conflict::{conflict_scan, ConflictReport};
pub use evaluator::EvaluatorActor;
pub use generator::{
    GenRequest, GenResponse, GeneratorContract, ScriptedGenerator, EXTERNAL_ADAPTER_PROTOCOL,
};
pub use implementer::{ImplementerActor, CONFLICT_BACKOFF};
pub use metrics::{RunMetrics, SharedMetrics};
pub use outliner::OutlinerActor;
pub use runner::{
    evaluator_actor, implementer_actor, run_single, RunOutcome, RunSpec, OUTLINER_ACTOR,
    RELAY_ACTOR,
};
pub use script::{
    bundled_script, bundled_scripts, find_marker, marker_line, ScriptError, TaskScript, TodoSpec,
};
