//! Networking for the replicated document: a framed wire protocol, a relay
//! that persists and fans out updates, client sessions with handshake and
//! exponential-backoff reconnect, and a subscription layer that delivers one
//! callback per applied op.
//!
//! Protocol cores are transport-free; [`host`] runs them on the simulated
//! network and [`tcp`] on real sockets.

pub mod frame;
pub mod host;
pub mod relay;
pub mod session;
pub mod subscribe;
pub mod tcp;

pub use frame::{Frame, FrameError, FrameType};
pub use host::{RelayActor, SessionHost};
pub use relay::{FileStorage, MemStorage, RelayAction, RelayCore, RelayStorage, RELAY_REPLICA};
pub use session::{
    sync_docs, Output, SessionCmd, SessionConfig, SessionCore, SessionNote, SessionState,
};
pub use subscribe::{DocHandle, EventFilter, SubscriptionId};
pub use tcp::{serve_relay, TcpClient};
