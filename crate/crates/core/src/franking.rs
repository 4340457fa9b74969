//! Two-party franking with send and receive counters, plus the client side and the
//! judge shared with the group and outsourced variants.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};

use crate::ack::{Ack, AckKind, ServerTag};
use crate::causality::{CausalityGraph, Edge, VId};
use crate::checks::Checks;
use crate::crypto::{
    channel_init, channel_recv, channel_send, commit, commit_verify, ChannelCiphertext,
    ChannelError, ChannelState, Commitment, MacKey, OpeningKey, LAMBDA,
};
use crate::Party;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrankingError {
    #[error("party {party} out of range for {n} parties")]
    BadParty { party: Party, n: usize },
    #[error("party {0} cannot receive its own message")]
    SelfReception(Party),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrankedCiphertext {
    pub c_e: ChannelCiphertext,
    pub c_f: Commitment,
    pub i: u64,
}

impl FrankedCiphertext {
    /// Everything except the public header: encrypted body, body MAC, c_f.
    pub fn opaque_bytes(&self) -> Vec<u8> {
        let mut out = self.c_e.body.clone();
        out.extend_from_slice(&self.c_e.body_mac.0);
        out.extend_from_slice(&self.c_f.0);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutboxEntry {
    pub m: Vec<u8>,
    pub k_f: OpeningKey,
    pub c_f: Commitment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Received {
    pub m: Vec<u8>,
    pub k_f: OpeningKey,
    pub i: u64,
}

/// Client state: channel state plus an outbox of own messages, kept so the
/// sender can report them later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientState {
    chan: ChannelState,
    outbox: BTreeMap<u64, OutboxEntry>,
}

impl ClientState {
    /// Two-party client.
    pub fn init(p: Party, k: [u8; LAMBDA]) -> Result<Self, FrankingError> {
        Self::init_group(p, k, 2)
    }

    pub fn init_group(p: Party, k: [u8; LAMBDA], n: usize) -> Result<Self, FrankingError> {
        Ok(ClientState { chan: channel_init(p, k, n)?, outbox: BTreeMap::new() })
    }

    pub fn from_parts(chan: ChannelState, outbox: BTreeMap<u64, OutboxEntry>) -> Self {
        ClientState { chan, outbox }
    }

    pub fn party(&self) -> Party {
        self.chan.party()
    }

    pub fn channel(&self) -> &ChannelState {
        &self.chan
    }

    pub fn outbox(&self) -> &BTreeMap<u64, OutboxEntry> {
        &self.outbox
    }

    pub fn snd<R: RngCore + CryptoRng>(&mut self, rng: &mut R, m: &[u8]) -> FrankedCiphertext {
        let (k_f, c_f) = commit(rng, m);
        let mut payload = Vec::with_capacity(m.len() + LAMBDA);
        payload.extend_from_slice(m);
        payload.extend_from_slice(&k_f.0);
        let c_e = channel_send(&mut self.chan, &payload);
        let i = c_e.i;
        self.outbox.insert(i, OutboxEntry { m: m.to_vec(), k_f, c_f });
        FrankedCiphertext { c_e, c_f, i }
    }

    /// Two-party receive: the sender is the other party.
    pub fn rcv(&mut self, c: &FrankedCiphertext) -> Option<Received> {
        let peer = 1 - self.party().min(1);
        self.rcv_from(peer, c)
    }

    pub fn rcv_from(&mut self, sender: Party, c: &FrankedCiphertext) -> Option<Received> {
        if c.i != c.c_e.i {
            return None;
        }
        // check before consuming the index so a bad commitment does not burn it
        let mut trial = self.chan.clone();
        let (payload, i) = channel_recv(&mut trial, sender, &c.c_e)?;
        if payload.len() < LAMBDA {
            return None;
        }
        let (m, k) = payload.split_at(payload.len() - LAMBDA);
        let k_f = OpeningKey::from_slice(k)?;
        if !commit_verify(m, &k_f, &c.c_f) {
            return None;
        }
        self.chan = trial;
        Some(Received { m: m.to_vec(), k_f, i })
    }
}

/// Length of [`FrankedCiphertext::opaque_bytes`] for an `m_len`-byte message.
pub fn clen(m_len: usize) -> usize {
    m_len + 3 * LAMBDA
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opening {
    Open { m: Vec<u8>, k_f: OpeningKey },
    Redacted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReportEntry {
    pub sender: Party,
    pub receiver: Party,
    pub opening: Opening,
    pub c_f: Commitment,
    pub t_s: ServerTag,
    pub t_r: ServerTag,
}

impl ReportEntry {
    pub fn redacted(&self) -> ReportEntry {
        ReportEntry { opening: Opening::Redacted, ..self.clone() }
    }

    pub fn message(&self) -> Option<&[u8]> {
        match &self.opening {
            Opening::Open { m, .. } => Some(m),
            Opening::Redacted => None,
        }
    }
}

/// Whether send acks name the receiver (two-party) or not (group).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    TwoParty,
    Group,
}

impl Layout {
    pub(crate) fn send_receiver(self, p: Party) -> Option<Party> {
        match self {
            Layout::TwoParty => Some(1 - p),
            Layout::Group => None,
        }
    }
}

fn entry_ok(k_mac: &MacKey, cid: &[u8], n: usize, layout: Layout, e: &ReportEntry, ck: Checks) -> bool {
    let (ts, tr) = (&e.t_s.ack, &e.t_r.ack);
    if e.sender >= n || e.receiver >= n || e.sender == e.receiver {
        return false;
    }
    if ck.mac && !(e.t_s.verify(k_mac) && e.t_r.verify(k_mac)) {
        return false;
    }
    if ts.kind != AckKind::S || tr.kind != AckKind::R {
        return false;
    }
    if ck.cf_equality && (ts.c_f != Some(e.c_f) || tr.c_f != Some(e.c_f)) {
        return false;
    }
    if ck.cid && (ts.cid != cid || tr.cid != cid) {
        return false;
    }
    let send_rcv = match layout {
        Layout::TwoParty => Some(e.receiver),
        Layout::Group => None,
    };
    if ts.sender != e.sender || ts.receiver != send_rcv {
        return false;
    }
    if tr.sender != e.sender || tr.receiver != Some(e.receiver) {
        return false;
    }
    match &e.opening {
        Opening::Open { m, k_f } => !ck.verc || commit_verify(m, k_f, &e.c_f),
        Opening::Redacted => true,
    }
}

fn put(g: &mut CausalityGraph, p: Party, v: VId, m: Option<Vec<u8>>) -> Option<()> {
    match g.vertex(p, &v).cloned() {
        None => {
            g.insert_vertex(p, v, m).ok()?;
        }
        Some(old) => match (old, m) {
            (Some(a), Some(b)) if a != b => return None,
            (None, Some(b)) => {
                g.set_message(p, &v, Some(b));
            }
            _ => {}
        },
    }
    Some(())
}

/// Shared judge. Any failed entry rejects the whole report.
pub(crate) fn judge_report(
    k_mac: &MacKey,
    cid: &[u8],
    n: usize,
    layout: Layout,
    report: &[ReportEntry],
    ck: Checks,
) -> Option<CausalityGraph> {
    if report.is_empty() {
        return None;
    }
    let mut g = CausalityGraph::new(n).ok()?;
    for e in report {
        if !entry_ok(k_mac, cid, n, layout, e, ck) {
            return None;
        }
        let m = e.message().map(<[u8]>::to_vec);
        let vs = VId::s(e.t_s.ack.cs, e.t_s.ack.cr);
        let vr = VId::r(e.t_r.ack.cs, e.t_r.ack.cr);
        put(&mut g, e.sender, vs, m.clone())?;
        put(&mut g, e.receiver, vr, m)?;
        g.insert_edge(Edge { from: (e.sender, vs), to: (e.receiver, vr) }).ok()?;
    }
    Some(g)
}

/// Per-conversation counter pairs, one per party.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CounterTable {
    n: usize,
    convs: BTreeMap<Vec<u8>, Vec<(u64, u64)>>,
}

impl CounterTable {
    pub fn new(n: usize) -> Self {
        CounterTable { n, convs: BTreeMap::new() }
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn get(&self, cid: &[u8]) -> Vec<(u64, u64)> {
        self.convs.get(cid).cloned().unwrap_or_else(|| vec![(0, 0); self.n])
    }

    fn slot(&mut self, cid: &[u8]) -> &mut Vec<(u64, u64)> {
        let n = self.n;
        self.convs.entry(cid.to_vec()).or_insert_with(|| vec![(0, 0); n])
    }

    /// Install counters directly, e.g. when loading persisted state.
    pub fn set(&mut self, cid: &[u8], ctrs: Vec<(u64, u64)>) -> Result<(), FrankingError> {
        if ctrs.len() != self.n {
            return Err(FrankingError::BadParty { party: ctrs.len(), n: self.n });
        }
        self.convs.insert(cid.to_vec(), ctrs);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &Vec<(u64, u64)>)> {
        self.convs.iter()
    }

    fn check(&self, p: Party) -> Result<(), FrankingError> {
        if p >= self.n {
            return Err(FrankingError::BadParty { party: p, n: self.n });
        }
        Ok(())
    }

    pub(crate) fn bump_send(&mut self, cid: &[u8], p: Party) -> Result<(u64, u64), FrankingError> {
        self.check(p)?;
        let c = &mut self.slot(cid)[p];
        c.0 += 1;
        Ok(*c)
    }

    pub(crate) fn bump_recv(&mut self, cid: &[u8], p: Party) -> Result<(u64, u64), FrankingError> {
        self.check(p)?;
        let c = &mut self.slot(cid)[p];
        c.1 += 1;
        Ok(*c)
    }
}

/// Two-party server: MAC key and four counters per conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerState {
    k_mac: MacKey,
    table: CounterTable,
}

impl ServerState {
    pub fn init<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self::from_parts(MacKey::random(rng), CounterTable::new(2))
    }

    pub fn from_parts(k_mac: MacKey, table: CounterTable) -> Self {
        ServerState { k_mac, table }
    }

    pub fn k_mac(&self) -> &MacKey {
        &self.k_mac
    }

    pub fn table(&self) -> &CounterTable {
        &self.table
    }

    /// `(cs_0, cr_0, cs_1, cr_1)` for a conversation.
    pub fn counters(&self, cid: &[u8]) -> [u64; 4] {
        let c = self.table.get(cid);
        [c[0].0, c[0].1, c[1].0, c[1].1]
    }

    pub fn tag_send(&mut self, cid: &[u8], p: Party, c_f: Commitment) -> Result<ServerTag, FrankingError> {
        let (cs, cr) = self.table.bump_send(cid, p)?;
        let ack = Ack { kind: AckKind::S, sender: p, receiver: Some(1 - p), cid: cid.to_vec(), c_f: Some(c_f), cs, cr };
        Ok(ServerTag::issue(&self.k_mac, ack))
    }

    /// Tag a reception by `p` of the other party's message.
    pub fn tag_recv(&mut self, cid: &[u8], p: Party, c_f: Commitment) -> Result<ServerTag, FrankingError> {
        let (cs, cr) = self.table.bump_recv(cid, p)?;
        let ack = Ack { kind: AckKind::R, sender: 1 - p, receiver: Some(p), cid: cid.to_vec(), c_f: Some(c_f), cs, cr };
        Ok(ServerTag::issue(&self.k_mac, ack))
    }

    pub fn judge(&self, cid: &[u8], report: &[ReportEntry]) -> Option<CausalityGraph> {
        self.judge_with(cid, report, Checks::ALL)
    }

    pub fn judge_with(&self, cid: &[u8], report: &[ReportEntry], ck: Checks) -> Option<CausalityGraph> {
        judge_report(&self.k_mac, cid, 2, Layout::TwoParty, report, ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup() -> (ChaCha20Rng, ServerState, ClientState, ClientState) {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let srv = ServerState::init(&mut rng);
        let a = ClientState::init(0, [4; 32]).unwrap();
        let b = ClientState::init(1, [4; 32]).unwrap();
        (rng, srv, a, b)
    }

    #[test]
    fn round_trip_and_outbox() {
        let (mut rng, _, mut a, mut b) = setup();
        let c = a.snd(&mut rng, b"hi");
        assert!(a.outbox().contains_key(&1));
        let r = b.rcv(&c).unwrap();
        assert_eq!((r.m.as_slice(), r.i), (&b"hi"[..], 1));
        assert!(commit_verify(&r.m, &r.k_f, &c.c_f));
        assert!(b.rcv(&c).is_none());
        let c2 = a.snd(&mut rng, b"hi");
        assert_ne!(c.c_f, c2.c_f);
        assert_eq!(c.c_e.body.len(), 2 + LAMBDA);
        assert_eq!(c.opaque_bytes().len(), clen(2));
    }

    #[test]
    fn substituted_commitment_rejected() {
        let (mut rng, _, mut a, mut b) = setup();
        let mut c = a.snd(&mut rng, b"hi");
        let (_, other) = commit(&mut rng, b"hi");
        let good = c.c_f;
        c.c_f = other;
        assert!(b.rcv(&c).is_none());
        c.c_f = good;
        assert!(b.rcv(&c).is_some());
    }

    #[test]
    fn client_init_range() {
        assert!(ClientState::init(2, [0; 32]).is_err());
        assert_eq!(ClientState::init(1, [0; 32]).unwrap().channel().send_ctr(), 0);
    }

    #[test]
    fn counters_follow_the_quad_rule() {
        let (_, mut srv, _, _) = setup();
        let cf = Commitment([1; 32]);
        assert_eq!(srv.counters(b"x"), [0, 0, 0, 0]);
        let t = srv.tag_send(b"x", 0, cf).unwrap();
        assert_eq!((t.ack.kind, t.ack.sender, t.ack.receiver, t.ack.cs, t.ack.cr), (AckKind::S, 0, Some(1), 1, 0));
        let t = srv.tag_recv(b"x", 1, cf).unwrap();
        assert_eq!((t.ack.kind, t.ack.sender, t.ack.receiver, t.ack.cs, t.ack.cr), (AckKind::R, 0, Some(1), 0, 1));
        srv.tag_send(b"x", 1, cf).unwrap();
        srv.tag_send(b"x", 1, cf).unwrap();
        let t = srv.tag_recv(b"x", 1, cf).unwrap();
        assert_eq!((t.ack.cs, t.ack.cr), (2, 2));
        let t = srv.tag_send(b"y", 0, cf).unwrap();
        assert_eq!(t.ack.cs, 1);
        assert_eq!(srv.counters(b"x"), [1, 0, 2, 2]);
        assert!(srv.tag_send(b"x", 2, cf).is_err());
    }

    fn one_entry() -> (ServerState, ReportEntry, ReportEntry) {
        let (mut rng, mut srv, mut a, mut b) = setup();
        let mut entries = Vec::new();
        for m in [b"A".as_slice(), b"B"] {
            let c = a.snd(&mut rng, m);
            let t_s = srv.tag_send(b"cid", 0, c.c_f).unwrap();
            let r = b.rcv(&c).unwrap();
            let t_r = srv.tag_recv(b"cid", 1, c.c_f).unwrap();
            entries.push(ReportEntry {
                sender: 0,
                receiver: 1,
                opening: Opening::Open { m: r.m, k_f: r.k_f },
                c_f: c.c_f,
                t_s,
                t_r,
            });
        }
        (srv, entries[0].clone(), entries[1].clone())
    }

    #[test]
    fn judge_single_entry() {
        let (srv, e, _) = one_entry();
        let g = srv.judge(b"cid", &[e.clone()]).unwrap();
        assert_eq!(g.vertex(0, &VId::s(1, 0)), Some(&Some(b"A".to_vec())));
        assert_eq!(g.vertex(1, &VId::r(0, 1)), Some(&Some(b"A".to_vec())));
        assert_eq!(g.edges().len(), 1);
        let mut bad = e.clone();
        bad.t_r.mac.0[0] ^= 1;
        assert!(srv.judge(b"cid", &[bad]).is_none());
        assert!(srv.judge(b"other", &[e.clone()]).is_none());
        assert!(srv.judge(b"cid", &[]).is_none());
        // duplicates collapse
        assert_eq!(srv.judge(b"cid", &[e.clone(), e]).unwrap(), g);
    }

    #[test]
    fn judge_rejects_spliced_tags() {
        let (srv, a, b) = one_entry();
        let spliced = ReportEntry { t_r: b.t_r.clone(), ..a.clone() };
        assert!(srv.judge(b"cid", &[spliced.clone()]).is_none());
        assert!(srv.judge_with(b"cid", &[spliced], Checks::without(crate::checks::Mutation::DropCfEquality)).is_some());
    }

    #[test]
    fn redaction_strips_only_the_message() {
        let (srv, a, b) = one_entry();
        let full = srv.judge(b"cid", &[a.clone(), b.clone()]).unwrap();
        let red = srv.judge(b"cid", &[a.redacted(), b]).unwrap();
        assert_eq!(red.vertex(0, &VId::s(1, 0)), Some(&None));
        let mut stripped = full.clone();
        stripped.set_message(0, &VId::s(1, 0), None);
        stripped.set_message(1, &VId::r(0, 1), None);
        assert_eq!(red, stripped);
    }
}
