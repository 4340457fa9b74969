//! One front for the three server flavours.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};

use super::Variant;
use crate::ack::{Ack, AckKind, ServerTag};
use crate::causality::CausalityGraph;
use crate::checks::Checks;
use crate::crypto::Commitment;
use crate::franking::{ReportEntry, ServerState};
use crate::group::GroupServerState;
use crate::outsourced::OutServerState;
use crate::Party;

#[derive(Debug, Clone)]
pub(crate) enum Server {
    Two(ServerState),
    Group(GroupServerState),
    Out(OutServerState),
}

impl Server {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R, v: Variant) -> Self {
        match v {
            Variant::TwoParty => Server::Two(ServerState::init(rng)),
            Variant::Group(n) => Server::Group(GroupServerState::init(rng, n).expect("n >= 2")),
            Variant::Outsourced(n) => {
                let (s, _) = OutServerState::init(rng, n, b"").expect("n >= 2");
                Server::Out(s)
            }
        }
    }

    pub fn init_tags(&self, cid: &[u8]) -> Vec<ServerTag> {
        match self {
            Server::Out(s) => s.init_tags(cid),
            _ => Vec::new(),
        }
    }

    pub fn tag_send(
        &mut self,
        cid: &[u8],
        p: Party,
        c_f: Commitment,
        pred: Option<&ServerTag>,
        ck: Checks,
    ) -> Option<ServerTag> {
        match self {
            Server::Two(s) => s.tag_send(cid, p, c_f).ok(),
            Server::Group(s) => s.tag_send(cid, p, c_f).ok(),
            Server::Out(s) => s.tag_send_with(cid, p, c_f, pred?, ck),
        }
    }

    pub fn tag_recv(
        &mut self,
        cid: &[u8],
        p_r: Party,
        p_s: Party,
        c_f: Commitment,
        pred: Option<&ServerTag>,
        ck: Checks,
    ) -> Option<ServerTag> {
        match self {
            Server::Two(s) => {
                if p_r > 1 || p_s != 1 - p_r {
                    return None;
                }
                s.tag_recv(cid, p_r, c_f).ok()
            }
            Server::Group(s) => s.tag_recv(cid, p_r, p_s, c_f).ok(),
            Server::Out(s) => s.tag_recv_with(cid, p_r, p_s, c_f, pred?, ck),
        }
    }

    pub fn judge(&self, cid: &[u8], report: &[ReportEntry], ck: Checks) -> Option<CausalityGraph> {
        match self {
            Server::Two(s) => s.judge_with(cid, report, ck),
            Server::Group(s) => s.judge_with(cid, report, ck),
            Server::Out(s) => s.judge_with(cid, report, ck),
        }
    }

    pub fn judge_replay(&self, t: &ServerTag, u: &ServerTag, ck: Checks) -> Option<Party> {
        match self {
            Server::Out(s) => s.judge_replay_with(t, u, ck),
            _ => None,
        }
    }

    /// Server-side counters, when the server keeps any.
    pub fn counters(&self, cid: &[u8]) -> Option<Vec<(u64, u64)>> {
        match self {
            Server::Two(s) => s.table().get(cid).into(),
            Server::Group(s) => Some(s.counters(cid)),
            Server::Out(_) => None,
        }
    }
}

/// The ack the server should issue given the ground truth after the update;
/// the R' ledger of the integrity argument.
pub(crate) fn expected_ack(
    v: Variant,
    g: &CausalityGraph,
    cid: &[u8],
    kind: AckKind,
    p_s: Party,
    p_r: Party,
    c_f: Commitment,
) -> Ack {
    let (owner, receiver) = match kind {
        AckKind::S => (p_s, v.layout().send_receiver(p_s)),
        _ => (p_r, Some(p_r)),
    };
    let (cs, cr) = g.counters(owner);
    Ack { kind, sender: p_s, receiver, cid: cid.to_vec(), c_f: Some(c_f), cs, cr }
}

/// Latest tag per party and conversation, for games where the game itself
/// carries the outsourced chain.
#[derive(Debug, Clone, Default)]
pub(crate) struct HeldChains {
    chains: BTreeMap<Vec<u8>, Vec<ServerTag>>,
}

impl HeldChains {
    pub fn get(&mut self, srv: &Server, cid: &[u8], p: Party) -> Option<ServerTag> {
        if !matches!(srv, Server::Out(_)) {
            return None;
        }
        let chain = self.chains.entry(cid.to_vec()).or_insert_with(|| srv.init_tags(cid));
        chain.get(p).cloned()
    }

    pub fn set(&mut self, cid: &[u8], p: Party, t: ServerTag) {
        if let Some(chain) = self.chains.get_mut(cid) {
            chain[p] = t;
        }
    }

    pub fn counters(&self, cid: &[u8]) -> Option<Vec<(u64, u64)>> {
        self.chains.get(cid).map(|c| c.iter().map(|t| (t.ack.cs, t.ack.cr)).collect())
    }
}
