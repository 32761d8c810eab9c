//! Length-prefixed binary frames between the solver and a policy service.
//!
//! ```text
//! u32 BE payload length | u8 tag | payload
//! ```
//!
//! | tag | frame | payload |
//! |-----|-------|---------|
//! | 0 | RESET | JSON [`ResetDescriptor`] |
//! | 1 | OBS | u16 BE count, then per agent: u16 BE slot, observation bundle |
//! | 2 | ACT | per agent: u16 BE slot, u8 action, 5 × f32 LE probabilities |
//! | 3 | DONE | empty |
//! | 4 | ERR | UTF-8 message |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{PolicyError, ProtocolError};
use crate::features::{ObservationBundle, BUNDLE_BYTES, NUM_CHANNELS, VECTOR_LEN};
use crate::grid::Action;

pub const TAG_RESET: u8 = 0;
pub const TAG_OBS: u8 = 1;
pub const TAG_ACT: u8 = 2;
pub const TAG_DONE: u8 = 3;
pub const TAG_ERR: u8 = 4;

/// Largest accepted payload.
pub const MAX_PAYLOAD: usize = 64 * 1024 * 1024;
const ACT_ENTRY: usize = 2 + 1 + 5 * 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActMode {
    Sample,
    Greedy,
}

impl std::str::FromStr for ActMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sample" => Ok(ActMode::Sample),
            "greedy" => Ok(ActMode::Greedy),
            other => Err(format!("unknown act mode `{other}`")),
        }
    }
}

/// Episode description sent at the start of every session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResetDescriptor {
    pub session: u64,
    pub map_width: u32,
    pub map_height: u32,
    pub num_agents: usize,
    /// Instance ids of the controlled agents, in slot order.
    pub agent_ids: Vec<usize>,
    pub episode_limit: usize,
    pub fov: usize,
    pub channels: usize,
    pub vector_len: usize,
    pub act_mode: ActMode,
    pub seed: u64,
}

impl ResetDescriptor {
    pub fn layout_defaults(session: u64, act_mode: ActMode, seed: u64) -> Self {
        Self {
            session,
            map_width: 0,
            map_height: 0,
            num_agents: 0,
            agent_ids: Vec::new(),
            episode_limit: 0,
            fov: crate::env::FOV,
            channels: NUM_CHANNELS,
            vector_len: VECTOR_LEN,
            act_mode,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActEntry {
    pub slot: u16,
    pub action: u8,
    pub probs: [f32; 5],
}

#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    Reset(ResetDescriptor),
    Obs(Vec<(u16, ObservationBundle)>),
    Act(Vec<ActEntry>),
    Done,
    Err(String),
}

impl Frame {
    pub fn tag(&self) -> u8 {
        match self {
            Frame::Reset(_) => TAG_RESET,
            Frame::Obs(_) => TAG_OBS,
            Frame::Act(_) => TAG_ACT,
            Frame::Done => TAG_DONE,
            Frame::Err(_) => TAG_ERR,
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            Frame::Reset(d) => serde_json::to_vec(d).expect("descriptor serializes"),
            Frame::Obs(entries) => {
                let mut out = Vec::with_capacity(2 + entries.len() * (2 + BUNDLE_BYTES));
                out.extend_from_slice(&(entries.len() as u16).to_be_bytes());
                for (slot, bundle) in entries {
                    out.extend_from_slice(&slot.to_be_bytes());
                    out.extend_from_slice(&bundle.to_bytes());
                }
                out
            }
            Frame::Act(entries) => {
                let mut out = Vec::with_capacity(entries.len() * ACT_ENTRY);
                for e in entries {
                    out.extend_from_slice(&e.slot.to_be_bytes());
                    out.push(e.action);
                    for p in e.probs {
                        out.extend_from_slice(&p.to_le_bytes());
                    }
                }
                out
            }
            Frame::Done => Vec::new(),
            Frame::Err(msg) => msg.as_bytes().to_vec(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(5 + payload.len());
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.push(self.tag());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode_payload(tag: u8, payload: &[u8]) -> Result<Frame, ProtocolError> {
        match tag {
            TAG_RESET => serde_json::from_slice(payload)
                .map(Frame::Reset)
                .map_err(|e| ProtocolError::Malformed(format!("reset descriptor: {e}"))),
            TAG_OBS => {
                if payload.len() < 2 {
                    return Err(ProtocolError::Truncated("observation count"));
                }
                let n = u16::from_be_bytes([payload[0], payload[1]]) as usize;
                let body = &payload[2..];
                if body.len() != n * (2 + BUNDLE_BYTES) {
                    return Err(ProtocolError::Malformed(format!(
                        "{} observation bytes for {n} agents",
                        body.len()
                    )));
                }
                let entries = body
                    .chunks_exact(2 + BUNDLE_BYTES)
                    .map(|chunk| {
                        let slot = u16::from_be_bytes([chunk[0], chunk[1]]);
                        (slot, ObservationBundle::from_bytes(&chunk[2..]).expect("length checked"))
                    })
                    .collect();
                Ok(Frame::Obs(entries))
            }
            TAG_ACT => {
                if !payload.len().is_multiple_of(ACT_ENTRY) {
                    return Err(ProtocolError::Truncated("action entry"));
                }
                let entries = payload
                    .chunks_exact(ACT_ENTRY)
                    .map(|c| {
                        let mut probs = [0f32; 5];
                        for (i, p) in probs.iter_mut().enumerate() {
                            let o = 3 + 4 * i;
                            *p = f32::from_le_bytes([c[o], c[o + 1], c[o + 2], c[o + 3]]);
                        }
                        ActEntry { slot: u16::from_be_bytes([c[0], c[1]]), action: c[2], probs }
                    })
                    .collect();
                Ok(Frame::Act(entries))
            }
            TAG_DONE if payload.is_empty() => Ok(Frame::Done),
            TAG_DONE => Err(ProtocolError::Malformed("DONE carries a payload".into())),
            TAG_ERR => Ok(Frame::Err(String::from_utf8_lossy(payload).into_owned())),
            other => Err(ProtocolError::UnknownTag(other)),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, ProtocolError> {
        if bytes.len() < 5 {
            return Err(ProtocolError::Truncated("frame header"));
        }
        let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
        if bytes.len() != 5 + len {
            return Err(ProtocolError::Truncated("frame payload"));
        }
        Frame::decode_payload(bytes[4], &bytes[5..])
    }
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> std::io::Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()
}

/// Blocking read of one frame. `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>, PolicyError> {
    let mut header = [0u8; 5];
    match r.read_exact(&mut header[..1]) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    r.read_exact(&mut header[1..]).map_err(|_| ProtocolError::Truncated("frame header"))?;
    let len = u32::from_be_bytes([header[0], header[1], header[2], header[3]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::Oversized(len).into());
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|_| ProtocolError::Truncated("frame payload"))?;
    Ok(Some(Frame::decode_payload(header[4], &payload)?))
}

/// Action for a proposal: kept when valid, otherwise the most probable
/// valid action (lowest index on ties).
pub fn mask_action(proposed: u8, probs: &[f32; 5], valid: &[Action]) -> Action {
    if let Some(a) = Action::from_index(proposed as usize).filter(|a| valid.contains(a)) {
        return a;
    }
    let mut best = Action::Stay;
    let mut best_p = f32::NEG_INFINITY;
    for &a in valid {
        let p = probs[a.index()];
        if p > best_p || (p == best_p && a.index() < best.index()) {
            best = a;
            best_p = p;
        }
    }
    best
}
