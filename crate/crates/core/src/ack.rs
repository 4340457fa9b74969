//! Server acknowledgements and their canonical byte encoding.
//!
//! Layout: kind byte, u32 sender, u32 receiver (`0xFFFFFFFF` when absent),
//! u16 cid length, cid, c_f presence byte, c_f, u64 cs, u64 cr. All integers
//! big-endian.

use crate::crypto::{mac_tag, mac_verify, Commitment, MacKey, MacTagBytes, LAMBDA};
use crate::Party;

const NO_PARTY: u32 = 0xFFFF_FFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AckKind {
    S,
    R,
    Init,
}

impl AckKind {
    pub fn byte(self) -> u8 {
        match self {
            AckKind::S => 0x53,
            AckKind::R => 0x52,
            AckKind::Init => 0x49,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x53 => Some(AckKind::S),
            0x52 => Some(AckKind::R),
            0x49 => Some(AckKind::Init),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ack {
    pub kind: AckKind,
    pub sender: Party,
    pub receiver: Option<Party>,
    pub cid: Vec<u8>,
    pub c_f: Option<Commitment>,
    pub cs: u64,
    pub cr: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AckDecodeError {
    #[error("ack truncated at byte {0}")]
    Truncated(usize),
    #[error("unknown ack kind 0x{0:02x}")]
    Kind(u8),
    #[error("bad c_f presence byte 0x{0:02x}")]
    Presence(u8),
    #[error("{0} trailing bytes after ack")]
    Trailing(usize),
    #[error("counters or fields do not fit the ack kind")]
    Shape,
}

impl Ack {
    pub fn init(party: Party, cid: &[u8]) -> Self {
        Ack { kind: AckKind::Init, sender: party, receiver: None, cid: cid.to_vec(), c_f: None, cs: 0, cr: 0 }
    }

    /// The party whose chain this ack extends: the sender of a send, the
    /// receiver of a reception, the named party of an init.
    pub fn owner(&self) -> Option<Party> {
        match self.kind {
            AckKind::S | AckKind::Init => Some(self.sender),
            AckKind::R => self.receiver,
        }
    }

    fn well_shaped(&self) -> bool {
        match self.kind {
            AckKind::S => self.cs >= 1 && self.c_f.is_some(),
            AckKind::R => self.cr >= 1 && self.c_f.is_some() && self.receiver.is_some(),
            AckKind::Init => self.c_f.is_none() && self.cs == 0 && self.cr == 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        assert!(self.cid.len() <= u16::MAX as usize, "cid longer than 65535 bytes");
        let mut out = Vec::with_capacity(1 + 4 + 4 + 2 + self.cid.len() + 1 + LAMBDA + 16);
        out.push(self.kind.byte());
        out.extend_from_slice(&(self.sender as u32).to_be_bytes());
        let r = self.receiver.map_or(NO_PARTY, |r| r as u32);
        out.extend_from_slice(&r.to_be_bytes());
        out.extend_from_slice(&(self.cid.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.cid);
        match &self.c_f {
            Some(c) => {
                out.push(1);
                out.extend_from_slice(&c.0);
            }
            None => out.push(0),
        }
        out.extend_from_slice(&self.cs.to_be_bytes());
        out.extend_from_slice(&self.cr.to_be_bytes());
        out
    }

    pub fn decode(b: &[u8]) -> Result<Ack, AckDecodeError> {
        let mut at = 0usize;
        let mut take = |k: usize| -> Result<&[u8], AckDecodeError> {
            let s = b.get(at..at + k).ok_or(AckDecodeError::Truncated(at))?;
            at += k;
            Ok(s)
        };
        let kb = take(1)?[0];
        let kind = AckKind::from_byte(kb).ok_or(AckDecodeError::Kind(kb))?;
        let sender = u32::from_be_bytes(take(4)?.try_into().unwrap());
        let receiver = u32::from_be_bytes(take(4)?.try_into().unwrap());
        let len = u16::from_be_bytes(take(2)?.try_into().unwrap()) as usize;
        let cid = take(len)?.to_vec();
        let c_f = match take(1)?[0] {
            0 => None,
            1 => Some(Commitment(take(LAMBDA)?.try_into().unwrap())),
            x => return Err(AckDecodeError::Presence(x)),
        };
        let cs = u64::from_be_bytes(take(8)?.try_into().unwrap());
        let cr = u64::from_be_bytes(take(8)?.try_into().unwrap());
        if at != b.len() {
            return Err(AckDecodeError::Trailing(b.len() - at));
        }
        if sender == NO_PARTY {
            return Err(AckDecodeError::Shape);
        }
        let ack = Ack {
            kind,
            sender: sender as Party,
            receiver: (receiver != NO_PARTY).then_some(receiver as Party),
            cid,
            c_f,
            cs,
            cr,
        };
        if !ack.well_shaped() {
            return Err(AckDecodeError::Shape);
        }
        Ok(ack)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServerTag {
    pub ack: Ack,
    pub mac: MacTagBytes,
}

impl ServerTag {
    pub fn issue(k_mac: &MacKey, ack: Ack) -> Self {
        let mac = mac_tag(k_mac, &ack.encode());
        ServerTag { ack, mac }
    }

    pub fn verify(&self, k_mac: &MacKey) -> bool {
        mac_verify(k_mac, &self.ack.encode(), &self.mac)
    }
}
