//! Report building. The same index backs `report` ops inside a trace and
//! the `report` subcommand reading a log.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use tfrank::Party;

use crate::trace::{LogEvent, Status};
use crate::wire::{EntryJson, ReportFile, TagJson};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentMsg {
    pub cid: String,
    pub from: Party,
    pub msg: String,
    pub k_f: String,
    pub c_f: String,
    pub t_s: TagJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub send: String,
    pub to: Party,
    pub id: Option<String>,
    pub t_r: TagJson,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Index {
    pub sends: BTreeMap<String, SentMsg>,
    /// In delivery order.
    pub deliveries: Vec<Delivery>,
    pub redactions: BTreeSet<String>,
}

impl Index {
    pub fn from_log(log: &[LogEvent]) -> Result<Index> {
        let mut ix = Index::default();
        for ev in log.iter().filter(|e| e.status == Status::Ok) {
            let bad = || anyhow!("log event {} ({}) is missing fields", ev.seq, ev.op);
            match ev.op.as_str() {
                "send" => {
                    let id = ev.id.clone().ok_or_else(bad)?;
                    let ct = ev.ct.as_ref().ok_or_else(bad)?;
                    let sent = SentMsg {
                        cid: ev.cid.clone(),
                        from: ev.from.ok_or_else(bad)?,
                        msg: ev.msg.clone().ok_or_else(bad)?,
                        k_f: ev.k_f.clone().ok_or_else(bad)?,
                        c_f: ct.c_f.clone(),
                        t_s: ev.t_s.clone().ok_or_else(bad)?,
                    };
                    ix.sends.insert(id, sent);
                }
                "deliver" => ix.deliveries.push(Delivery {
                    send: ev.send.clone().ok_or_else(bad)?,
                    to: ev.to.ok_or_else(bad)?,
                    id: ev.id.clone(),
                    t_r: ev.t_r.clone().ok_or_else(bad)?,
                }),
                "redact" => ix.redactions.extend(ev.refs.iter().cloned()),
                _ => {}
            }
        }
        Ok(ix)
    }

    fn resolve(&self, r: &str) -> Result<Vec<&Delivery>> {
        let undelivered = |what: &str| {
            anyhow!("{what} has no reception tag: only messages that have been sent and received can be reported")
        };
        if let Some((send, to)) = r.rsplit_once('@') {
            let to: Party = to.parse().map_err(|_| anyhow!("bad reference {r:?}: expected ID or ID@PARTY"))?;
            if !self.sends.contains_key(send) {
                bail!("unknown send {send:?}");
            }
            let d = self.deliveries.iter().find(|d| d.send == send && d.to == to);
            return d.map(|d| vec![d]).ok_or_else(|| undelivered(&format!("{send} at party {to}")));
        }
        if self.sends.contains_key(r) {
            let mut ds: Vec<&Delivery> = self.deliveries.iter().filter(|d| d.send == r).collect();
            if ds.is_empty() {
                return Err(undelivered(r));
            }
            ds.sort_by_key(|d| d.to);
            return Ok(ds);
        }
        match self.deliveries.iter().find(|d| d.id.as_deref() == Some(r)) {
            Some(d) => Ok(vec![d]),
            None => bail!("unknown event {r:?}"),
        }
    }

    fn redacted(&self, d: &Delivery, extra: &BTreeSet<String>) -> bool {
        let at = format!("{}@{}", d.send, d.to);
        let hit = [Some(&d.send), Some(&at), d.id.as_ref()]
            .into_iter()
            .flatten()
            .any(|k| self.redactions.contains(k) || extra.contains(k));
        hit
    }

    /// Entries for `refs` in the order given; every delivery of `cid` (or of
    /// the only conversation) when `refs` is empty.
    pub fn build(&self, refs: &[String], redact: &[String], cid: Option<&str>) -> Result<ReportFile> {
        let extra: BTreeSet<String> = redact.iter().cloned().collect();
        let mut picked: Vec<&Delivery> = Vec::new();
        if refs.is_empty() {
            let cid = match cid {
                Some(c) => c.to_string(),
                None => {
                    let cids: BTreeSet<&str> = self.sends.values().map(|s| s.cid.as_str()).collect();
                    match cids.len() {
                        0 => bail!("nothing to report"),
                        1 => cids.into_iter().next().expect("one").to_string(),
                        _ => bail!("log spans {} conversations; pass --cid", cids.len()),
                    }
                }
            };
            picked = self.deliveries.iter().filter(|d| self.sends[&d.send].cid == cid).collect();
        } else {
            for r in refs {
                for d in self.resolve(r)? {
                    if !picked.iter().any(|p| std::ptr::eq(*p, d)) {
                        picked.push(d);
                    }
                }
            }
        }
        let cids: BTreeSet<&str> = picked.iter().map(|d| self.sends[&d.send].cid.as_str()).collect();
        let cid = match (cids.len(), cid) {
            (0, Some(c)) => c.to_string(),
            (0, None) => bail!("nothing to report"),
            (1, c) => {
                let only = cids.into_iter().next().expect("one");
                if c.is_some_and(|c| c != only) {
                    bail!("selection belongs to conversation {only:?}, not {:?}", c.unwrap_or_default());
                }
                only.to_string()
            }
            _ => bail!("selection spans several conversations; a report covers one"),
        };
        let entries = picked
            .into_iter()
            .map(|d| {
                let s = &self.sends[&d.send];
                let open = !self.redacted(d, &extra);
                EntryJson {
                    sender: s.from,
                    receiver: d.to,
                    msg: open.then(|| crate::wire::b64(s.msg.as_bytes())),
                    k_f: open.then(|| s.k_f.clone()),
                    c_f: s.c_f.clone(),
                    t_s: s.t_s.clone(),
                    t_r: d.t_r.clone(),
                }
            })
            .collect();
        Ok(ReportFile { cid, entries })
    }
}
