//! Transcript integrity. The adversary runs every client, may tag whatever it
//! likes, and wins with two accepted reports that leave the ground truth or
//! contradict each other.
//!
//! Conversations are keyed by cid so cross-conversation drivers have
//! something to splice. In the outsourced variant every oracle, `rep`
//! included, refuses to run once the issued tags contain a pair the replay
//! judge convicts.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng};
use rand_chacha::ChaCha20Rng;

use super::server::{expected_ack, Server};
use super::{record_reception, seeded, Mirror, Outcome, Variant};
use crate::ack::{Ack, AckKind, ServerTag};
use crate::causality::{are_consistent, CausalityGraph};
use crate::checks::Checks;
use crate::crypto::{Commitment, OpeningKey, LAMBDA};
use crate::franking::{ClientState, FrankedCiphertext, Opening, ReportEntry};
use crate::Party;

type Rec = (Vec<u8>, Party, FrankedCiphertext, ServerTag);

pub struct IntegrityGame {
    variant: Variant,
    ck: Checks,
    srv: Server,
    truth: BTreeMap<Vec<u8>, CausalityGraph>,
    r_t: HashMap<Rec, u64>,
    r: HashSet<Rec>,
    issued: Vec<ServerTag>,
    issued_set: HashSet<ServerTag>,
    ledger: HashSet<Ack>,
    halted: bool,
    mirror: Mirror,
    win: bool,
    calls: usize,
    forged: usize,
}

impl IntegrityGame {
    pub fn new(variant: Variant, seed: u64, ck: Checks) -> Self {
        let mut rng = seeded(seed);
        IntegrityGame {
            variant,
            ck,
            srv: Server::new(&mut rng, variant),
            truth: BTreeMap::new(),
            r_t: HashMap::new(),
            r: HashSet::new(),
            issued: Vec::new(),
            issued_set: HashSet::new(),
            ledger: HashSet::new(),
            halted: false,
            mirror: Mirror::new(ck),
            win: false,
            calls: 0,
            forged: 0,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn parties(&self) -> usize {
        self.variant.parties()
    }

    /// True once a detectable replay was issued; every oracle is closed.
    pub fn halted(&self) -> bool {
        self.halted
    }

    fn outsourced(&self) -> bool {
        matches!(self.variant, Variant::Outsourced(_))
    }

    /// Initial tags of a conversation (outsourced only; empty otherwise).
    pub fn open(&mut self, cid: &[u8]) -> Vec<ServerTag> {
        let tags = self.srv.init_tags(cid);
        self.ledger.extend(tags.iter().map(|t| t.ack.clone()));
        tags
    }

    fn truth_mut(&mut self, cid: &[u8]) -> &mut CausalityGraph {
        let n = self.parties();
        self.truth.entry(cid.to_vec()).or_insert_with(|| CausalityGraph::new(n).expect("n >= 2"))
    }

    fn detects_replay(&self, t: &ServerTag) -> bool {
        let sum = t.ack.cs + t.ack.cr;
        self.issued
            .iter()
            .filter(|u| u.ack.owner() == t.ack.owner() && (!self.ck.sum || u.ack.cs + u.ack.cr == sum))
            .any(|u| self.srv.judge_replay(t, u, self.ck).is_some())
    }

    fn admit(&mut self, cid: &[u8], t: &ServerTag, kind: AckKind, p_s: Party, p_r: Party, c_f: Commitment) {
        let replay = self.outsourced() && self.detects_replay(t);
        self.issued.push(t.clone());
        self.issued_set.insert(t.clone());
        self.ledger.insert(t.ack.clone());
        if replay {
            self.halted = true;
            return;
        }
        let g = &self.truth[cid];
        let want = expected_ack(self.variant, g, cid, kind, p_s, p_r, c_f);
        let ok = t.ack == want && self.srv.counters(cid).map_or(true, |c| c == g.all_counters());
        self.mirror.check(ok, || format!("issued {:?}, expected {want:?}", t.ack));
    }

    pub fn send_tag(
        &mut self,
        cid: &[u8],
        p: Party,
        c: &FrankedCiphertext,
        pred: Option<&ServerTag>,
    ) -> Option<ServerTag> {
        self.calls += 1;
        if self.halted || p >= self.parties() {
            return None;
        }
        let t = self.srv.tag_send(cid, p, c.c_f, pred, self.ck)?;
        if self.outsourced() && self.issued_set.contains(&t) {
            // same predecessor, same inputs: the very same tag again
            return Some(t);
        }
        let v = self.truth_mut(cid).add_send(p, None).expect("valid party");
        self.r_t.insert((cid.to_vec(), p, c.clone(), t.clone()), v.cs);
        self.admit(cid, &t, AckKind::S, p, p, c.c_f);
        Some(t)
    }

    pub fn recv_tag(
        &mut self,
        cid: &[u8],
        p_r: Party,
        p_s: Party,
        c: &FrankedCiphertext,
        t_s: &ServerTag,
        pred: Option<&ServerTag>,
    ) -> Option<ServerTag> {
        self.calls += 1;
        if self.halted || p_r >= self.parties() || p_r == p_s {
            return None;
        }
        let i = *self.r_t.get(&(cid.to_vec(), p_s, c.clone(), t_s.clone()))?;
        let key = (cid.to_vec(), p_r, c.clone(), t_s.clone());
        if self.r.contains(&key) {
            return None;
        }
        let t = self.srv.tag_recv(cid, p_r, p_s, c.c_f, pred, self.ck)?;
        self.r.insert(key);
        if self.outsourced() && self.issued_set.contains(&t) {
            return Some(t);
        }
        record_reception(self.truth_mut(cid), p_s, p_r, i).expect("tagged send exists");
        self.admit(cid, &t, AckKind::R, p_s, p_r, c.c_f);
        Some(t)
    }

    pub fn rep(&mut self, cid: &[u8], rho1: &[ReportEntry], rho2: &[ReportEntry]) {
        self.calls += 1;
        if self.halted || rho1.is_empty() || rho2.is_empty() {
            return;
        }
        let (Some(g1), Some(g2)) = (self.srv.judge(cid, rho1, self.ck), self.srv.judge(cid, rho2, self.ck)) else {
            return;
        };
        let empty = CausalityGraph::new(self.parties()).expect("n >= 2");
        let truth = self.truth.get(cid).unwrap_or(&empty);
        let escapes = !g1.strip_messages().is_subgraph(truth) || !g2.strip_messages().is_subgraph(truth);
        if escapes || !are_consistent(&g1, &g2) {
            self.win = true;
            let foreign = rho1
                .iter()
                .chain(rho2)
                .any(|e| !self.ledger.contains(&e.t_s.ack) || !self.ledger.contains(&e.t_r.ack));
            self.forged += foreign as usize;
        }
    }

    pub fn outcome(&self) -> Outcome {
        Outcome {
            win: self.win,
            calls: self.calls,
            mirror_checks: self.mirror.checks,
            mirror_breaks: self.mirror.breaks,
            forged: self.forged,
        }
    }
}

#[derive(Debug, Clone)]
struct Sent {
    cid: Vec<u8>,
    p: Party,
    c: FrankedCiphertext,
    t_s: ServerTag,
    m: Vec<u8>,
    k_f: OpeningKey,
    to: Vec<Party>,
}

/// Client-side bookkeeping shared by the drivers. Holds the channel key, the
/// clients and, in the outsourced variant, each party's latest tag.
pub struct Adversary {
    n: usize,
    k_ch: [u8; LAMBDA],
    clients: BTreeMap<Vec<u8>, Vec<ClientState>>,
    chains: BTreeMap<Vec<u8>, Vec<ServerTag>>,
    sent: Vec<Sent>,
    got: Vec<(Vec<u8>, ReportEntry)>,
}

impl Adversary {
    pub fn new(n: usize, k_ch: [u8; LAMBDA]) -> Self {
        Adversary { n, k_ch, clients: BTreeMap::new(), chains: BTreeMap::new(), sent: Vec::new(), got: Vec::new() }
    }

    fn ensure(&mut self, game: &mut IntegrityGame, cid: &[u8]) {
        if !self.clients.contains_key(cid) {
            let (n, k) = (self.n, self.k_ch);
            let cl = (0..n).map(|p| ClientState::init_group(p, k, n).expect("valid party")).collect();
            self.clients.insert(cid.to_vec(), cl);
            self.chains.insert(cid.to_vec(), game.open(cid));
        }
    }

    fn pred(&self, cid: &[u8], p: Party) -> Option<ServerTag> {
        self.chains.get(cid).and_then(|c| c.get(p)).cloned()
    }

    fn advance(&mut self, cid: &[u8], p: Party, t: &ServerTag) {
        if let Some(slot) = self.chains.get_mut(cid).and_then(|c| c.get_mut(p)) {
            *slot = t.clone();
        }
    }

    /// Encrypt and tag a fresh random message; index into the sent list.
    pub fn send<R: Rng + CryptoRng>(&mut self, game: &mut IntegrityGame, rng: &mut R, cid: &[u8], p: Party) -> Option<usize> {
        self.ensure(game, cid);
        let m: Vec<u8> = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(b'a'..=b'z')).collect();
        let c = self.clients.get_mut(cid)?[p].snd(rng, &m);
        let k_f = self.clients[cid][p].outbox()[&c.i].k_f;
        let pred = self.pred(cid, p);
        let t_s = game.send_tag(cid, p, &c, pred.as_ref())?;
        self.advance(cid, p, &t_s);
        self.sent.push(Sent { cid: cid.to_vec(), p, c, t_s, m, k_f, to: Vec::new() });
        Some(self.sent.len() - 1)
    }

    pub fn deliver(&mut self, game: &mut IntegrityGame, k: usize, to: Party) -> Option<ReportEntry> {
        let s = self.sent.get(k)?.clone();
        let pred = self.pred(&s.cid, to);
        let t_r = game.recv_tag(&s.cid, to, s.p, &s.c, &s.t_s, pred.as_ref())?;
        self.advance(&s.cid, to, &t_r);
        self.sent[k].to.push(to);
        let e = ReportEntry {
            sender: s.p,
            receiver: to,
            opening: Opening::Open { m: s.m, k_f: s.k_f },
            c_f: s.c.c_f,
            t_s: s.t_s,
            t_r,
        };
        self.got.push((s.cid, e.clone()));
        Some(e)
    }

    fn receivers(&self, p: Party) -> Vec<Party> {
        (0..self.n).filter(|&q| q != p).collect()
    }

    /// Random sends and deliveries in one conversation. `busy` gets most of
    /// the sends when set.
    pub fn chatter<R: Rng + CryptoRng>(&mut self, game: &mut IntegrityGame, rng: &mut R, cid: &[u8], events: usize, busy: Option<Party>) {
        for _ in 0..events {
            let pending: Vec<(usize, Party)> = self
                .sent
                .iter()
                .enumerate()
                .filter(|(_, s)| s.cid == cid)
                .flat_map(|(k, s)| {
                    self.receivers(s.p).into_iter().filter(|q| !s.to.contains(q)).map(move |q| (k, q))
                })
                .collect();
            if pending.is_empty() || rng.gen_bool(0.5) {
                let p = match busy {
                    Some(b) if rng.gen_bool(0.7) => b,
                    _ => rng.gen_range(0..self.n),
                };
                self.send(game, rng, cid, p);
            } else {
                let (k, q) = *pending.choose(rng).expect("non-empty");
                self.deliver(game, k, q);
            }
        }
    }

    pub fn entries(&self, cid: &[u8]) -> Vec<ReportEntry> {
        self.got.iter().filter(|(c, _)| c == cid).map(|(_, e)| e.clone()).collect()
    }

    fn subset<R: Rng + CryptoRng>(&self, rng: &mut R, cid: &[u8]) -> Vec<ReportEntry> {
        let all = self.entries(cid);
        if all.is_empty() {
            return all;
        }
        let k = rng.gen_range(1..=all.len());
        all.choose_multiple(rng, k).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntDriver {
    Honest,
    /// Send tag of one message with the reception tag of another.
    Splice,
    /// Two openings for one commitment.
    Equivocate,
    /// Tags from a side conversation reported under the main cid.
    CrossCid,
    /// Swapped reception tags and swapped roles.
    ReorderMisreport,
    /// Redacted or re-opened entries with borrowed commitments.
    RedactionAbuse,
    /// Edited acks and made-up MACs.
    Forge,
    /// Stale predecessors and repeated deliveries.
    Replay,
    /// Tagging against another party's latest tag.
    PiSwap,
    /// The same commitment under two send tags. Not part of `ALL`: it wins
    /// against the construction as specified.
    CommitmentReuse,
}

const MAIN: &[u8] = b"main";

impl IntDriver {
    pub const ALL: [IntDriver; 9] = [
        IntDriver::Honest,
        IntDriver::Splice,
        IntDriver::Equivocate,
        IntDriver::CrossCid,
        IntDriver::ReorderMisreport,
        IntDriver::RedactionAbuse,
        IntDriver::Forge,
        IntDriver::Replay,
        IntDriver::PiSwap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntDriver::Honest => "honest",
            IntDriver::Splice => "splice",
            IntDriver::Equivocate => "equivocate",
            IntDriver::CrossCid => "cross-cid",
            IntDriver::ReorderMisreport => "reorder-misreport",
            IntDriver::RedactionAbuse => "redaction-abuse",
            IntDriver::Forge => "forge",
            IntDriver::Replay => "replay",
            IntDriver::PiSwap => "pi-swap",
            IntDriver::CommitmentReuse => "commitment-reuse",
        }
    }

    pub fn run(self, game: &mut IntegrityGame, rng: &mut ChaCha20Rng) {
        let n = game.parties();
        let mut k_ch = [0u8; LAMBDA];
        rng.fill(&mut k_ch);
        let mut adv = Adversary::new(n, k_ch);
        let warmup = rng.gen_range(6..30);
        match self {
            IntDriver::PiSwap => adv.chatter(game, rng, MAIN, warmup, Some(1)),
            _ => adv.chatter(game, rng, MAIN, warmup, None),
        }
        let mut attacks: Vec<Vec<ReportEntry>> = Vec::new();
        match self {
            IntDriver::Honest => {}
            IntDriver::Splice => splice(&adv, rng, &mut attacks),
            IntDriver::Equivocate => equivocate(&adv, rng, &mut attacks),
            IntDriver::CrossCid => cross_cid(&mut adv, game, rng, warmup, &mut attacks),
            IntDriver::ReorderMisreport => reorder(&adv, rng, &mut attacks),
            IntDriver::RedactionAbuse => redaction(&adv, rng, &mut attacks),
            IntDriver::Forge => forge(&mut adv, game, rng, &mut attacks),
            IntDriver::Replay => replay(&mut adv, game, rng, &mut attacks),
            IntDriver::PiSwap => pi_swap(&mut adv, game, rng, &mut attacks),
            IntDriver::CommitmentReuse => commitment_reuse(&mut adv, game, rng, &mut attacks),
        }
        let tail = rng.gen_range(0..6);
        adv.chatter(game, rng, MAIN, tail, None);
        let honest = adv.entries(MAIN);
        for _ in 0..3 {
            let (a, b) = (adv.subset(rng, MAIN), adv.subset(rng, MAIN));
            game.rep(MAIN, &a, &b);
        }
        for bad in attacks {
            if bad.is_empty() {
                continue;
            }
            game.rep(MAIN, &bad, &bad);
            if !honest.is_empty() {
                game.rep(MAIN, &bad, &honest);
                let mut mixed = adv.subset(rng, MAIN);
                mixed.extend(bad.iter().cloned());
                game.rep(MAIN, &mixed, &honest);
            }
        }
    }
}

fn two_distinct<'a, R: Rng>(rng: &mut R, es: &'a [ReportEntry]) -> Option<(&'a ReportEntry, &'a ReportEntry)> {
    if es.len() < 2 {
        return None;
    }
    let a = rng.gen_range(0..es.len());
    let mut b = rng.gen_range(0..es.len() - 1);
    if b >= a {
        b += 1;
    }
    Some((&es[a], &es[b]))
}

fn splice<R: Rng + CryptoRng>(adv: &Adversary, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let es = adv.entries(MAIN);
    for _ in 0..4 {
        let Some((a, b)) = two_distinct(rng, &es) else { return };
        let mut x = a.clone();
        x.t_r = b.t_r.clone();
        x.receiver = b.receiver;
        out.push(vec![x.clone()]);
        x.c_f = b.c_f;
        x.opening = b.opening.clone();
        out.push(vec![x]);
        let mut y = b.clone();
        y.t_s = a.t_s.clone();
        y.sender = a.sender;
        out.push(vec![y]);
    }
}

fn random_opening<R: Rng + CryptoRng>(rng: &mut R) -> Opening {
    let m: Vec<u8> = (0..rng.gen_range(0..12)).map(|_| rng.gen()).collect();
    let mut k = [0u8; LAMBDA];
    rng.fill(&mut k);
    Opening::Open { m, k_f: OpeningKey(k) }
}

fn equivocate<R: Rng + CryptoRng>(adv: &Adversary, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let es = adv.entries(MAIN);
    for e in es.choose_multiple(rng, 3) {
        let mut x = e.clone();
        x.opening = random_opening(rng);
        out.push(vec![x.clone()]);
        // keep the key, change the message
        if let Opening::Open { m, k_f } = &e.opening {
            let mut m2 = m.clone();
            m2.push(b'!');
            x.opening = Opening::Open { m: m2, k_f: *k_f };
            out.push(vec![x]);
        }
    }
}

/// One ciphertext tagged as two sends. Reception acks carry only c_f, so the
/// reception can be reported against either send.
fn commitment_reuse<R: Rng + CryptoRng>(adv: &mut Adversary, game: &mut IntegrityGame, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let Some(k) = adv.send(game, rng, MAIN, 0) else { return };
    let s = adv.sent[k].clone();
    let Some(t2) = game.send_tag(MAIN, 0, &s.c, adv.pred(MAIN, 0).as_ref()) else { return };
    adv.advance(MAIN, 0, &t2);
    let to = adv.receivers(0)[0];
    if let Some(e) = adv.deliver(game, k, to) {
        let mut x = e.clone();
        x.t_s = t2;
        out.push(vec![x]);
    }
}

fn cross_cid<R: Rng + CryptoRng>(adv: &mut Adversary, game: &mut IntegrityGame, rng: &mut R, warmup: usize, out: &mut Vec<Vec<ReportEntry>>) {
    let side = format!("side-{}", rng.gen::<u16>()).into_bytes();
    adv.chatter(game, rng, &side, warmup + 20, None);
    let theirs = adv.entries(&side);
    for e in theirs.choose_multiple(rng, 3) {
        out.push(vec![e.clone()]);
        let mut mixed = adv.entries(MAIN);
        mixed.truncate(3);
        mixed.push(e.clone());
        out.push(mixed);
    }
    // a side-conversation predecessor presented in the main one
    if let Some(t) = adv.pred(&side, 0) {
        let c = adv.clients.get_mut(MAIN).expect("main open")[0].snd(rng, b"x");
        game.send_tag(MAIN, 0, &c, Some(&t));
    }
}

fn reorder<R: Rng + CryptoRng>(adv: &Adversary, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let es = adv.entries(MAIN);
    let Some((a, b)) = two_distinct(rng, &es) else { return };
    let (mut x, mut y) = (a.clone(), b.clone());
    std::mem::swap(&mut x.t_r, &mut y.t_r);
    out.push(vec![x.clone(), y.clone()]);
    std::mem::swap(&mut x.c_f, &mut y.c_f);
    out.push(vec![x, y]);
    let mut z = a.clone();
    std::mem::swap(&mut z.sender, &mut z.receiver);
    out.push(vec![z.clone()]);
    std::mem::swap(&mut z.t_s, &mut z.t_r);
    out.push(vec![z]);
}

fn redaction<R: Rng + CryptoRng>(adv: &Adversary, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let es = adv.entries(MAIN);
    let Some((a, b)) = two_distinct(rng, &es) else { return };
    let mut x = a.redacted();
    x.c_f = b.c_f;
    out.push(vec![x]);
    let mut y = a.clone();
    y.c_f = b.c_f;
    y.opening = b.opening.clone();
    out.push(vec![a.redacted(), y]);
    let mut w = a.redacted();
    w.t_r = b.t_r.clone();
    w.receiver = b.receiver;
    out.push(vec![w, b.clone()]);
}

fn forge<R: Rng + CryptoRng>(adv: &mut Adversary, game: &mut IntegrityGame, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let es = adv.entries(MAIN);
    for e in es.choose_multiple(rng, 3) {
        let mut x = e.clone();
        x.t_s.ack.cs += rng.gen_range(1..6);
        out.push(vec![x]);
        let mut y = e.clone();
        y.t_r.ack.cr += rng.gen_range(1..6);
        y.t_r.ack.cs += rng.gen_range(0..3);
        out.push(vec![y]);
        let mut z = e.clone();
        z.t_s.mac.0[rng.gen_range(0..LAMBDA)] ^= 1;
        out.push(vec![z]);
    }
    // fast-forward: a predecessor with inflated counters
    if let Some(mut t) = adv.pred(MAIN, 0) {
        t.ack.cs += 7;
        let c = adv.clients.get_mut(MAIN).expect("main open")[0].snd(rng, b"ff");
        if let Some(t_s) = game.send_tag(MAIN, 0, &c, Some(&t)) {
            let to = adv.receivers(0)[0];
            let k_f = adv.clients[MAIN][0].outbox()[&c.i].k_f;
            adv.sent.push(Sent { cid: MAIN.to_vec(), p: 0, c, t_s, m: b"ff".to_vec(), k_f, to: Vec::new() });
            let k = adv.sent.len() - 1;
            if let Some(e) = adv.deliver(game, k, to) {
                out.push(vec![e]);
            }
        }
    }
}

fn replay<R: Rng + CryptoRng>(adv: &mut Adversary, game: &mut IntegrityGame, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    // deliver a record a second time: refused
    if let Some(k) = adv.sent.iter().position(|s| !s.to.is_empty()) {
        let to = adv.sent[k].to[0];
        adv.sent[k].to.clear();
        if let Some(e) = adv.deliver(game, k, to) {
            out.push(vec![e]);
        }
    }
    let Some(stale) = adv.pred(MAIN, 0) else { return };
    adv.chatter(game, rng, MAIN, 4, Some(0));
    // same inputs, same predecessor: same tag back
    let c = adv.clients.get_mut(MAIN).expect("main open")[0].snd(rng, b"again");
    let t1 = game.send_tag(MAIN, 0, &c, Some(&stale));
    let t2 = game.send_tag(MAIN, 0, &c, Some(&stale));
    if let (Some(a), Some(b)) = (&t1, &t2) {
        assert_eq!(a, b);
    }
    // stale predecessor, new inputs: a detectable replay
    let c2 = adv.clients.get_mut(MAIN).expect("main open")[0].snd(rng, b"fork");
    game.send_tag(MAIN, 0, &c2, Some(&stale));
    out.push(adv.entries(MAIN));
}

fn pi_swap<R: Rng + CryptoRng>(adv: &mut Adversary, game: &mut IntegrityGame, rng: &mut R, out: &mut Vec<Vec<ReportEntry>>) {
    let n = adv.n;
    let Some(theirs) = adv.pred(MAIN, 1) else {
        // stateful: claim the wrong sender for a delivery
        let es = adv.entries(MAIN);
        if let Some(e) = es.choose(rng) {
            let mut x = e.clone();
            x.sender = (e.sender + 1) % n;
            if x.sender == x.receiver {
                x.sender = (x.sender + 1) % n;
            }
            out.push(vec![x]);
        }
        return;
    };
    let c = adv.clients.get_mut(MAIN).expect("main open")[0].snd(rng, b"pi");
    if let Some(t_s) = game.send_tag(MAIN, 0, &c, Some(&theirs)) {
        let k_f = adv.clients[MAIN][0].outbox()[&c.i].k_f;
        adv.sent.push(Sent { cid: MAIN.to_vec(), p: 0, c, t_s, m: b"pi".to_vec(), k_f, to: Vec::new() });
        let k = adv.sent.len() - 1;
        if let Some(e) = adv.deliver(game, k, 1) {
            out.push(vec![e]);
        }
    }
}

pub fn game_integrity(variant: Variant, driver: IntDriver, seed: u64, ck: Checks) -> Outcome {
    let mut game = IntegrityGame::new(variant, seed, ck);
    let mut rng = seeded(seed ^ 0x1D);
    driver.run(&mut game, &mut rng);
    game.outcome()
}

/// Variants the integrity suite cycles through.
pub const SUITE_VARIANTS: [Variant; 4] =
    [Variant::TwoParty, Variant::Group(3), Variant::Outsourced(2), Variant::Outsourced(3)];

/// Wins per driver name over `seeds`, each seed running every driver on one
/// variant.
pub fn integrity_suite(seeds: std::ops::Range<u64>, ck: Checks) -> BTreeMap<&'static str, (usize, usize)> {
    let mut tally: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    for seed in seeds {
        let v = SUITE_VARIANTS[(seed % SUITE_VARIANTS.len() as u64) as usize];
        for d in IntDriver::ALL {
            let out = game_integrity(v, d, seed, ck);
            let slot = tally.entry(d.name()).or_default();
            slot.0 += 1;
            slot.1 += out.win as usize;
        }
    }
    tally
}
