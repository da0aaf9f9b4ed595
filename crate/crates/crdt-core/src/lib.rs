//! Replicated document state with strong eventual consistency.
//!
//! Three CRDTs share one operation space: an RGA text sequence with
//! tombstoned deletes, a last-writer-wins map keyed by (key, field), and an
//! append-only log read in OperationId order. Replicas exchange
//! [`UpdatePacket`]s; applying a packet is commutative, idempotent, and
//! tolerant of any delivery order (sequence ops with missing origins are
//! buffered until their dependencies arrive).

mod doc;
mod id;
mod log;
mod lww;
mod op;
mod packet;
mod sequence;
mod value;
mod vector;

pub use doc::{converged, ChangeEvent, DocError, DocumentState, EventOrigin, EventScope};
pub use id::{OperationId, Origin, ReplicaId, BEGIN_REPLICA};
pub use lww::{LwwCell, LwwMapState};
pub use op::Op;
pub use packet::{DecodeError, UpdatePacket, MAGIC, VERSION};
pub use value::ScalarValue;
pub use vector::{ClockSet, StateVector};
