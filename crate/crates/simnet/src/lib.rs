//! Deterministic discrete-event network simulator.
//!
//! Hosts cooperatively scheduled actors over virtual time with seeded
//! lognormal link latency, optional per-frame drops, partitions that hold and
//! replay frames on heal, and crash injection. Identical configuration and
//! seeds produce byte-identical traces.

mod fault;
mod latency;
mod sim;
mod time;
mod trace;

pub use fault::{FaultPlan, Partition};
pub use latency::LatencyModel;
pub use sim::{Actor, ActorId, Ctx, FrameStats, SimConfig, SimError, Simulation};
pub use time::VirtualTime;
pub use trace::{SimTrace, TraceRecord};
