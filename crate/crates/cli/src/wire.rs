//! On-disk shapes: tags, ciphertexts and report entries with base64 bytes.

use anyhow::{anyhow, bail, Context, Result};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use tfrank::ack::{Ack, ServerTag};
use tfrank::crypto::{ChannelCiphertext, Commitment, MacTagBytes, OpeningKey, LAMBDA};
use tfrank::franking::{FrankedCiphertext, Opening, ReportEntry};

pub fn b64(b: &[u8]) -> String {
    B64.encode(b)
}

pub fn unb64(s: &str) -> Result<Vec<u8>> {
    B64.decode(s).map_err(|e| anyhow!("bad base64: {e}"))
}

pub fn unb64_32(s: &str) -> Result<[u8; LAMBDA]> {
    let v = unb64(s)?;
    <[u8; LAMBDA]>::try_from(v.as_slice()).map_err(|_| anyhow!("expected {LAMBDA} bytes, got {}", v.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagJson {
    pub ack: String,
    pub mac: String,
}

impl TagJson {
    pub fn from_tag(t: &ServerTag) -> Self {
        TagJson { ack: b64(&t.ack.encode()), mac: b64(&t.mac.0) }
    }

    pub fn to_tag(&self) -> Result<ServerTag> {
        let ack = Ack::decode(&unb64(&self.ack)?).map_err(|e| anyhow!("bad ack: {e}"))?;
        Ok(ServerTag { ack, mac: MacTagBytes(unb64_32(&self.mac)?) })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiphertextJson {
    pub sender: usize,
    pub i: u64,
    pub body: String,
    pub body_mac: String,
    pub c_f: String,
}

impl CiphertextJson {
    pub fn from_ct(c: &FrankedCiphertext) -> Self {
        CiphertextJson {
            sender: c.c_e.sender,
            i: c.i,
            body: b64(&c.c_e.body),
            body_mac: b64(&c.c_e.body_mac.0),
            c_f: b64(&c.c_f.0),
        }
    }

    pub fn to_ct(&self) -> Result<FrankedCiphertext> {
        Ok(FrankedCiphertext {
            c_e: ChannelCiphertext {
                sender: self.sender,
                i: self.i,
                body: unb64(&self.body)?,
                body_mac: MacTagBytes(unb64_32(&self.body_mac)?),
            },
            c_f: Commitment(unb64_32(&self.c_f)?),
            i: self.i,
        })
    }
}

/// A report entry; `msg` and `k_f` are absent when redacted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub sender: usize,
    pub receiver: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<String>,
    pub c_f: String,
    pub t_s: TagJson,
    pub t_r: TagJson,
}

impl EntryJson {
    pub fn to_entry(&self) -> Result<ReportEntry> {
        let opening = match (&self.msg, &self.k_f) {
            (Some(m), Some(k)) => Opening::Open { m: unb64(m)?, k_f: OpeningKey(unb64_32(k)?) },
            (None, None) => Opening::Redacted,
            _ => bail!("msg and k_f must be both present or both absent"),
        };
        Ok(ReportEntry {
            sender: self.sender,
            receiver: self.receiver,
            opening,
            c_f: Commitment(unb64_32(&self.c_f)?),
            t_s: self.t_s.to_tag().context("t_s")?,
            t_r: self.t_r.to_tag().context("t_r")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub cid: String,
    pub entries: Vec<EntryJson>,
}
