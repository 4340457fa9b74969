//! JSON-lines traces and event logs.

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use tfrank::Party;

use crate::wire::{CiphertextJson, EntryJson, TagJson};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum TraceEvent {
    /// Switch conversations. Without one, events go to "conversation".
    Init { cid: String },
    Send {
        id: String,
        from: Party,
        msg: String,
        /// Outsourced mode: chain from this earlier event's tag instead of
        /// the sender's latest.
        #[serde(default)]
        pred: Option<String>,
    },
    Deliver {
        send: String,
        to: Party,
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        pred: Option<String>,
    },
    Redact { refs: Vec<String> },
    Report { refs: Vec<String> },
}

pub fn parse_trace(text: &str) -> Result<Vec<(usize, TraceEvent)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ev: TraceEvent = serde_json::from_str(line).map_err(|e| anyhow!("trace line {}: {e}", no + 1))?;
        match &ev {
            TraceEvent::Send { id, .. } | TraceEvent::Deliver { id: Some(id), .. } if id.is_empty() || id.contains('@') => {
                bail!("trace line {}: event id {id:?} must be non-empty and free of '@'", no + 1)
            }
            _ => {}
        }
        out.push((no + 1, ev));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Rejected,
}

/// One line of the event log. `counters` is the ground truth for the
/// conversation after the event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEvent {
    pub seq: u64,
    pub op: String,
    pub status: Status,
    pub cid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub send: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Party>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Party>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<String>,
    /// base64
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ct: Option<CiphertextJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_s: Option<TagJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_r: Option<TagJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Vec<EntryJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub counters: Vec<(u64, u64)>,
}

impl LogEvent {
    pub fn new(seq: u64, op: &str, cid: &str, counters: Vec<(u64, u64)>) -> Self {
        LogEvent {
            seq,
            op: op.into(),
            status: Status::Ok,
            cid: cid.into(),
            id: None,
            send: None,
            from: None,
            to: None,
            msg: None,
            k_f: None,
            ct: None,
            t_s: None,
            t_r: None,
            refs: Vec::new(),
            report: None,
            reason: None,
            counters,
        }
    }

    pub fn rejected(mut self, why: impl Into<String>) -> Self {
        self.status = Status::Rejected;
        self.reason = Some(why.into());
        self
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(no, l)| serde_json::from_str(l).map_err(|e| anyhow!("log line {}: {e}", no + 1)))
        .collect()
}
