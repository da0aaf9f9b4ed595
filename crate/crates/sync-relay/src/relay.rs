//! Relay core: applies every received update to its own replica of the
//! document, persists new ops, and fans out to all other live sessions.
//! Transport-independent; sessions are opaque u64 handles.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crdt_core::{DocumentState, ReplicaId, UpdatePacket};

use crate::frame::{
    decode_hello, decode_vector, encode_vector, Frame, FrameType,
};

/// Replica id reserved for relays. Relays never originate ops, so the id only
/// matters for bookkeeping.
pub const RELAY_REPLICA: u64 = 0;

pub trait RelayStorage {
    /// Appends one encoded UPDATE frame.
    fn append(&mut self, frame_bytes: &[u8]);
    /// Returns all persisted frames, dropping any torn tail.
    fn load(&mut self) -> Vec<Vec<u8>>;
}

/// In-memory storage for simulated relays.
#[derive(Default)]
pub struct MemStorage {
    frames: Vec<Vec<u8>>,
}

impl RelayStorage for MemStorage {
    fn append(&mut self, frame_bytes: &[u8]) {
        self.frames.push(frame_bytes.to_vec());
    }

    fn load(&mut self) -> Vec<Vec<u8>> {
        self.frames.clone()
    }
}

/// Append-only file of concatenated frames, one file per document id.
/// Crash-recoverable: a torn tail frame is truncated on load.
pub struct FileStorage {
    path: PathBuf,
    file: File,
}

impl FileStorage {
    pub fn open(data_dir: &Path, doc_id: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(data_dir)?;
        let safe: String = doc_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let path = data_dir.join(format!("{safe}.oplog"));
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(FileStorage { path, file })
    }
}

impl RelayStorage for FileStorage {
    fn append(&mut self, frame_bytes: &[u8]) {
        if let Err(e) = self.file.write_all(frame_bytes) {
            log::error!("persistence append failed: {e}");
        }
        let _ = self.file.flush();
    }

    fn load(&mut self) -> Vec<Vec<u8>> {
        let mut bytes = Vec::new();
        match File::open(&self.path) {
            Ok(mut f) => {
                if f.read_to_end(&mut bytes).is_err() {
                    return Vec::new();
                }
            }
            Err(_) => return Vec::new(),
        }
        let mut frames = Vec::new();
        let mut off = 0;
        while off < bytes.len() {
            match Frame::from_bytes(&bytes[off..]) {
                Ok((_, used)) => {
                    frames.push(bytes[off..off + used].to_vec());
                    off += used;
                }
                Err(_) => {
                    // torn tail: truncate the file at the last good frame
                    log::warn!("truncating torn tail at offset {off}");
                    let _ = self.truncate_to(off);
                    break;
                }
            }
        }
        frames
    }
}

impl FileStorage {
    fn truncate_to(&mut self, len: usize) -> std::io::Result<()> {
        let f = OpenOptions::new().write(true).open(&self.path)?;
        f.set_len(len as u64)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelayAction {
    Send { session: u64, bytes: Vec<u8> },
    /// Close the offending session only; other sessions are unaffected.
    Close { session: u64 },
}

struct SessionInfo {
    replica: ReplicaId,
}

pub struct RelayCore<S: RelayStorage> {
    doc: DocumentState,
    doc_id: String,
    sessions: HashMap<u64, SessionInfo>,
    storage: S,
}

impl<S: RelayStorage> RelayCore<S> {
    /// Creates a relay for `doc_id`, replaying any persisted ops.
    pub fn new(doc_id: &str, mut storage: S) -> Self {
        let mut doc = DocumentState::new(RELAY_REPLICA);
        for frame_bytes in storage.load() {
            if let Ok((frame, _)) = Frame::from_bytes(&frame_bytes) {
                if frame.frame_type == FrameType::Update {
                    if let Ok(pkt) = UpdatePacket::from_bytes(&frame.payload) {
                        doc.apply_update(&pkt);
                    }
                }
            }
        }
        RelayCore {
            doc,
            doc_id: doc_id.to_owned(),
            sessions: HashMap::new(),
            storage,
        }
    }

    pub fn doc(&self) -> &DocumentState {
        &self.doc
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn on_disconnect(&mut self, session: u64) {
        self.sessions.remove(&session);
    }

    /// Handles one inbound frame. A decode error closes the offending
    /// session; the relay itself and other sessions are unaffected.
    pub fn on_frame(&mut self, session: u64, bytes: &[u8]) -> Vec<RelayAction> {
        let frame = match Frame::from_bytes(bytes) {
            Ok((frame, _)) => frame,
            Err(e) => {
                log::warn!("session {session}: bad frame ({e}), closing");
                self.sessions.remove(&session);
                return vec![RelayAction::Close { session }];
            }
        };
        match frame.frame_type {
            FrameType::Hello => match decode_hello(&frame.payload) {
                Ok((replica, doc_id)) => {
                    if doc_id != self.doc_id {
                        self.sessions.remove(&session);
                        return vec![RelayAction::Close { session }];
                    }
                    let mut actions = Vec::new();
                    // at most one live session per replica
                    let stale: Vec<u64> = self
                        .sessions
                        .iter()
                        .filter(|(sid, info)| info.replica == replica && **sid != session)
                        .map(|(sid, _)| *sid)
                        .collect();
                    for sid in stale {
                        self.sessions.remove(&sid);
                        actions.push(RelayAction::Close { session: sid });
                    }
                    self.sessions.insert(session, SessionInfo { replica });
                    actions.push(RelayAction::Send {
                        session,
                        bytes: Frame::new(
                            FrameType::SyncReq,
                            encode_vector(&self.doc.state_vector()),
                        )
                        .to_bytes(),
                    });
                    actions
                }
                Err(_) => {
                    self.sessions.remove(&session);
                    vec![RelayAction::Close { session }]
                }
            },
            FrameType::SyncReq => match decode_vector(&frame.payload) {
                Ok(vector) => {
                    let delta = self.doc.encode_update_since(&vector);
                    vec![RelayAction::Send {
                        session,
                        bytes: Frame::new(FrameType::SyncResp, delta.to_bytes()).to_bytes(),
                    }]
                }
                Err(_) => {
                    self.sessions.remove(&session);
                    vec![RelayAction::Close { session }]
                }
            },
            FrameType::Update | FrameType::SyncResp => {
                match UpdatePacket::from_bytes(&frame.payload) {
                    Ok(packet) => self.ingest(session, &frame.payload, &packet),
                    Err(_) => {
                        self.sessions.remove(&session);
                        vec![RelayAction::Close { session }]
                    }
                }
            }
            FrameType::Ping => vec![RelayAction::Send {
                session,
                bytes: Frame::new(FrameType::Pong, Vec::new()).to_bytes(),
            }],
            FrameType::Pong => Vec::new(),
        }
    }

    /// Applies a packet; when it contains new ops, persists it and fans the
    /// identical bytes out to every other live session. The relay never
    /// mutates op content.
    fn ingest(&mut self, from: u64, packet_bytes: &[u8], packet: &UpdatePacket) -> Vec<RelayAction> {
        let events = self.doc.apply_update(packet);
        if events.is_empty() && self.doc.pending_len() == 0 {
            return Vec::new();
        }
        let update = Frame::new(FrameType::Update, packet_bytes.to_vec()).to_bytes();
        self.storage.append(&update);
        let mut actions = Vec::new();
        let mut targets: Vec<u64> = self
            .sessions
            .keys()
            .copied()
            .filter(|sid| *sid != from)
            .collect();
        targets.sort_unstable();
        for sid in targets {
            actions.push(RelayAction::Send {
                session: sid,
                bytes: update.clone(),
            });
        }
        actions
    }
}
