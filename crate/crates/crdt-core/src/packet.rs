//! Bit-exact update packet encoding.
//!
//! Layout (all integers little-endian):
//!   magic u32 = 0x43434454 ("CCDT"), version u8 = 1, op-count u32,
//!   then each op: type tag u8, OperationId (clock u64, replica u64),
//!   per-type payload with u32-length-prefixed UTF-8 strings,
//!   trailer: sender vector as u32 count of (replica u64, clock u64) pairs.
//!
//! Op tags: 1 map-set, 2 seq-insert, 3 seq-delete, 4 log-append.
//! Seq-insert carries an origin OperationId; replica 0xFFFF_FFFF_FFFF_FFFF
//! encodes BEGIN. Map-set values are tagged: 0 null, 1 string, 2 int (i64).

use thiserror::Error;

use crate::id::{OperationId, Origin, ReplicaId, BEGIN_REPLICA};
use crate::op::Op;
use crate::value::ScalarValue;
use crate::vector::StateVector;

pub const MAGIC: u32 = 0x4343_4454;
pub const VERSION: u8 = 1;

const TAG_MAP_SET: u8 = 1;
const TAG_SEQ_INSERT: u8 = 2;
const TAG_SEQ_DELETE: u8 = 3;
const TAG_LOG_APPEND: u8 = 4;

const VAL_NULL: u8 = 0;
const VAL_STR: u8 = 1;
const VAL_INT: u8 = 2;

/// Serialized batch of operations plus the sender's state vector. Applying a
/// packet is idempotent; packets are self-contained for decoding.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct UpdatePacket {
    pub ops: Vec<Op>,
    pub sender_vector: StateVector,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("truncated packet at offset {0}")]
    Truncated(usize),
    #[error("bad magic {0:#x}")]
    BadMagic(u32),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown op tag {0}")]
    UnknownTag(u8),
    #[error("unknown value tag {0}")]
    UnknownValueTag(u8),
    #[error("invalid utf-8 in string")]
    BadUtf8,
    #[error("trailing {0} bytes after trailer")]
    TrailingBytes(usize),
}

impl UpdatePacket {
    pub fn new(ops: Vec<Op>, sender_vector: StateVector) -> Self {
        UpdatePacket { ops, sender_vector }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.ops.len() * 32);
        out.extend_from_slice(&MAGIC.to_le_bytes());
        out.push(VERSION);
        out.extend_from_slice(&(self.ops.len() as u32).to_le_bytes());
        for op in &self.ops {
            encode_op(&mut out, op);
        }
        out.extend_from_slice(&(self.sender_vector.0.len() as u32).to_le_bytes());
        for (replica, clock) in &self.sender_vector.0 {
            out.extend_from_slice(&replica.0.to_le_bytes());
            out.extend_from_slice(&clock.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.u32()?;
        if magic != MAGIC {
            return Err(DecodeError::BadMagic(magic));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(DecodeError::BadVersion(version));
        }
        let count = r.u32()? as usize;
        let mut ops = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            ops.push(decode_op(&mut r)?);
        }
        let vec_count = r.u32()? as usize;
        let mut sender_vector = StateVector::new();
        for _ in 0..vec_count {
            let replica = ReplicaId(r.u64()?);
            let clock = r.u64()?;
            sender_vector.0.insert(replica, clock);
        }
        if r.pos != bytes.len() {
            return Err(DecodeError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(UpdatePacket { ops, sender_vector })
    }
}

fn encode_op(out: &mut Vec<u8>, op: &Op) {
    let id = op.id();
    match op {
        Op::MapSet { key, field, value, .. } => {
            out.push(TAG_MAP_SET);
            encode_id(out, id);
            encode_str(out, key);
            encode_str(out, field);
            match value {
                ScalarValue::Null => out.push(VAL_NULL),
                ScalarValue::Str(s) => {
                    out.push(VAL_STR);
                    encode_str(out, s);
                }
                ScalarValue::Int(i) => {
                    out.push(VAL_INT);
                    out.extend_from_slice(&i.to_le_bytes());
                }
            }
        }
        Op::SeqInsert { origin, content, .. } => {
            out.push(TAG_SEQ_INSERT);
            encode_id(out, id);
            match origin {
                Origin::Begin => encode_id(out, OperationId::new(0, BEGIN_REPLICA)),
                Origin::Id(o) => encode_id(out, *o),
            }
            encode_str(out, content);
        }
        Op::SeqDelete { target, count, .. } => {
            out.push(TAG_SEQ_DELETE);
            encode_id(out, id);
            encode_id(out, *target);
            out.extend_from_slice(&count.to_le_bytes());
        }
        Op::LogAppend { payload, .. } => {
            out.push(TAG_LOG_APPEND);
            encode_id(out, id);
            encode_str(out, payload);
        }
    }
}

fn encode_id(out: &mut Vec<u8>, id: OperationId) {
    out.extend_from_slice(&id.clock.to_le_bytes());
    out.extend_from_slice(&id.replica.0.to_le_bytes());
}

fn encode_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn decode_op(r: &mut Reader<'_>) -> Result<Op, DecodeError> {
    let tag = r.u8()?;
    let id = r.id()?;
    match tag {
        TAG_MAP_SET => {
            let key = r.string()?;
            let field = r.string()?;
            let vtag = r.u8()?;
            let value = match vtag {
                VAL_NULL => ScalarValue::Null,
                VAL_STR => ScalarValue::Str(r.string()?),
                VAL_INT => ScalarValue::Int(i64::from_le_bytes(r.bytes(8)?.try_into().unwrap())),
                other => return Err(DecodeError::UnknownValueTag(other)),
            };
            Ok(Op::MapSet { id, key, field, value })
        }
        TAG_SEQ_INSERT => {
            let raw = r.id()?;
            let origin = if raw.replica.0 == BEGIN_REPLICA {
                Origin::Begin
            } else {
                Origin::Id(raw)
            };
            let content = r.string()?;
            Ok(Op::SeqInsert { id, origin, content })
        }
        TAG_SEQ_DELETE => {
            let target = r.id()?;
            let count = r.u32()?;
            Ok(Op::SeqDelete { id, target, count })
        }
        TAG_LOG_APPEND => {
            let payload = r.string()?;
            Ok(Op::LogAppend { id, payload })
        }
        other => Err(DecodeError::UnknownTag(other)),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.pos + n > self.buf.len() {
            return Err(DecodeError::Truncated(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn id(&mut self) -> Result<OperationId, DecodeError> {
        let clock = self.u64()?;
        let replica = ReplicaId(self.u64()?);
        Ok(OperationId { clock, replica })
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        let len = self.u32()? as usize;
        let raw = self.bytes(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::BadUtf8)
    }
}
