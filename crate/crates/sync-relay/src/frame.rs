//! Framed wire protocol. A frame is `length: u32 LE` (byte count of type +
//! payload) followed by `type: u8` and the payload. Unknown types are a
//! protocol error.

use crdt_core::{ReplicaId, StateVector};
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[repr(u8)]
pub enum FrameType {
    Hello = 1,
    SyncReq = 2,
    SyncResp = 3,
    Update = 4,
    Ping = 5,
    Pong = 6,
}

impl FrameType {
    fn from_u8(v: u8) -> Option<FrameType> {
        match v {
            1 => Some(FrameType::Hello),
            2 => Some(FrameType::SyncReq),
            3 => Some(FrameType::SyncResp),
            4 => Some(FrameType::Update),
            5 => Some(FrameType::Ping),
            6 => Some(FrameType::Pong),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("incomplete frame: have {have} bytes, need {need}")]
    Incomplete { have: usize, need: usize },
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error("zero-length frame")]
    Empty,
    #[error("malformed {0} payload")]
    BadPayload(&'static str),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Frame {
    pub frame_type: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(frame_type: FrameType, payload: Vec<u8>) -> Self {
        Frame { frame_type, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.extend_from_slice(&((self.payload.len() + 1) as u32).to_le_bytes());
        out.push(self.frame_type as u8);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes one frame from the head of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
        if bytes.len() < 4 {
            return Err(FrameError::Incomplete {
                have: bytes.len(),
                need: 4,
            });
        }
        let len = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        if len == 0 {
            return Err(FrameError::Empty);
        }
        if bytes.len() < 4 + len {
            return Err(FrameError::Incomplete {
                have: bytes.len(),
                need: 4 + len,
            });
        }
        let frame_type =
            FrameType::from_u8(bytes[4]).ok_or(FrameError::UnknownType(bytes[4]))?;
        Ok((
            Frame {
                frame_type,
                payload: bytes[5..4 + len].to_vec(),
            },
            4 + len,
        ))
    }
}

// ---- payload helpers ----

pub fn encode_hello(replica: ReplicaId, doc_id: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + doc_id.len());
    out.extend_from_slice(&replica.0.to_le_bytes());
    out.extend_from_slice(&(doc_id.len() as u32).to_le_bytes());
    out.extend_from_slice(doc_id.as_bytes());
    out
}

pub fn decode_hello(payload: &[u8]) -> Result<(ReplicaId, String), FrameError> {
    if payload.len() < 12 {
        return Err(FrameError::BadPayload("hello"));
    }
    let replica = ReplicaId(u64::from_le_bytes(payload[0..8].try_into().unwrap()));
    let len = u32::from_le_bytes(payload[8..12].try_into().unwrap()) as usize;
    if payload.len() != 12 + len {
        return Err(FrameError::BadPayload("hello"));
    }
    let doc_id = String::from_utf8(payload[12..].to_vec())
        .map_err(|_| FrameError::BadPayload("hello"))?;
    Ok((replica, doc_id))
}

pub fn encode_vector(vector: &StateVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + vector.0.len() * 16);
    out.extend_from_slice(&(vector.0.len() as u32).to_le_bytes());
    for (replica, clock) in &vector.0 {
        out.extend_from_slice(&replica.0.to_le_bytes());
        out.extend_from_slice(&clock.to_le_bytes());
    }
    out
}

pub fn decode_vector(payload: &[u8]) -> Result<StateVector, FrameError> {
    if payload.len() < 4 {
        return Err(FrameError::BadPayload("vector"));
    }
    let count = u32::from_le_bytes(payload[0..4].try_into().unwrap()) as usize;
    if payload.len() != 4 + count * 16 {
        return Err(FrameError::BadPayload("vector"));
    }
    let mut v = StateVector::new();
    for i in 0..count {
        let off = 4 + i * 16;
        let replica = ReplicaId(u64::from_le_bytes(payload[off..off + 8].try_into().unwrap()));
        let clock = u64::from_le_bytes(payload[off + 8..off + 16].try_into().unwrap());
        v.0.insert(replica, clock);
    }
    Ok(v)
}
