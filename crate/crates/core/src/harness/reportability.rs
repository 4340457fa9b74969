//! Reportability: the adversary writes ciphertexts and asks for send tags on
//! commitments of its choice; the receiver is honest. Anything the receiver
//! accepts must judge into the ground truth.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::server::{expected_ack, HeldChains, Server};
use super::{record_reception, seeded, Mirror, Outcome, Variant};
use crate::ack::{AckKind, ServerTag};
use crate::causality::CausalityGraph;
use crate::checks::Checks;
use crate::crypto::{channel_send, commit, ChannelState, Commitment, LAMBDA};
use crate::franking::{ClientState, FrankedCiphertext, Opening, ReportEntry};
use crate::Party;

pub struct ReportabilityGame {
    variant: Variant,
    ck: Checks,
    cid: Vec<u8>,
    rng: ChaCha20Rng,
    srv: Server,
    held: HeldChains,
    clients: Vec<ClientState>,
    g: CausalityGraph,
    r_t: HashMap<(Party, Commitment, ServerTag), u64>,
    r_r: HashSet<ReportEntry>,
    r: HashSet<(Party, FrankedCiphertext, ServerTag)>,
    /// Add the reception to the ground truth even when the receiver refuses.
    literal: bool,
    mirror: Mirror,
    win: bool,
    calls: usize,
}

impl ReportabilityGame {
    pub fn new(variant: Variant, seed: u64, k_ch: [u8; LAMBDA], ck: Checks) -> Self {
        let mut rng = seeded(seed);
        let srv = Server::new(&mut rng, variant);
        let n = variant.parties();
        ReportabilityGame {
            variant,
            ck,
            cid: b"conversation".to_vec(),
            rng,
            srv,
            held: HeldChains::default(),
            clients: (0..n).map(|p| ClientState::init_group(p, k_ch, n).expect("valid party")).collect(),
            g: CausalityGraph::new(n).expect("n >= 2"),
            r_t: HashMap::new(),
            r_r: HashSet::new(),
            r: HashSet::new(),
            literal: false,
            mirror: Mirror::new(ck),
            win: false,
            calls: 0,
        }
    }

    /// Record refused receptions in the ground truth as well. The server
    /// never tags those, so the mirror is only counted, not asserted.
    pub fn with_literal_reception(mut self) -> Self {
        self.literal = true;
        self.mirror = Mirror::with_strictness(false);
        self
    }

    pub fn parties(&self) -> usize {
        self.variant.parties()
    }

    fn audit(&mut self, t: &ServerTag, kind: AckKind, p_s: Party, p_r: Party, c_f: Commitment) {
        let want = expected_ack(self.variant, &self.g, &self.cid, kind, p_s, p_r, c_f);
        let ctrs = self.srv.counters(&self.cid).or_else(|| self.held.counters(&self.cid));
        let ok = t.ack == want && ctrs.as_deref().map_or(true, |c| c == self.g.all_counters());
        let g = &self.g;
        self.mirror.check(ok, || format!("issued {:?}, expected {:?}, truth {:?}", t.ack, want, g.all_counters()));
    }

    /// Honest encryption by `p`; nothing is tagged or recorded.
    pub fn send(&mut self, p: Party, m: &[u8]) -> Option<FrankedCiphertext> {
        self.calls += 1;
        let cl = self.clients.get_mut(p)?;
        Some(cl.snd(&mut self.rng, m))
    }

    pub fn tag_send(&mut self, p: Party, c_f: Commitment) -> Option<ServerTag> {
        self.calls += 1;
        if p >= self.parties() {
            return None;
        }
        let pred = self.held.get(&self.srv, &self.cid, p);
        let t_s = self.srv.tag_send(&self.cid, p, c_f, pred.as_ref(), self.ck)?;
        self.held.set(&self.cid, p, t_s.clone());
        let v = self.g.add_send(p, None).expect("valid party");
        self.audit(&t_s, AckKind::S, p, p, c_f);
        self.r_t.insert((p, c_f, t_s.clone()), v.cs);
        Some(t_s)
    }

    pub fn recv_tag(
        &mut self,
        p_r: Party,
        p_s: Party,
        c: &FrankedCiphertext,
        t_s: &ServerTag,
    ) -> Option<ReportEntry> {
        self.calls += 1;
        if p_r >= self.parties() || p_r == p_s {
            return None;
        }
        let i = *self.r_t.get(&(p_s, c.c_f, t_s.clone()))?;
        if !self.r.insert((p_r, c.clone(), t_s.clone())) {
            return None;
        }
        let rec = self.clients[p_r].rcv_from(p_s, c);
        let mut entry = None;
        if let Some(rec) = rec {
            let pred = self.held.get(&self.srv, &self.cid, p_r);
            let t_r = self.srv.tag_recv(&self.cid, p_r, p_s, c.c_f, pred.as_ref(), self.ck)?;
            self.held.set(&self.cid, p_r, t_r.clone());
            record_reception(&mut self.g, p_s, p_r, i).expect("tagged send exists");
            self.audit(&t_r, AckKind::R, p_s, p_r, c.c_f);
            let e = ReportEntry {
                sender: p_s,
                receiver: p_r,
                opening: Opening::Open { m: rec.m, k_f: rec.k_f },
                c_f: c.c_f,
                t_s: t_s.clone(),
                t_r,
            };
            self.r_r.insert(e.clone());
            entry = Some(e);
        } else if self.literal {
            record_reception(&mut self.g, p_s, p_r, i).expect("tagged send exists");
        }
        entry
    }

    /// A rejected report counts as escaping the ground truth.
    pub fn rep(&mut self, rho: &[ReportEntry]) {
        self.calls += 1;
        if rho.is_empty() {
            return;
        }
        let judged = self.srv.judge(&self.cid, rho, self.ck);
        let honest = rho.iter().all(|e| self.r_r.contains(e));
        if honest && judged.map_or(true, |g| !g.strip_messages().is_subgraph(&self.g)) {
            self.win = true;
        }
    }

    pub fn outcome(&self) -> Outcome {
        Outcome {
            win: self.win,
            calls: self.calls,
            mirror_checks: self.mirror.checks,
            mirror_breaks: self.mirror.breaks,
            forged: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepDriver {
    Honest,
    /// Flip bits in body, body MAC, index or c_f before delivery.
    Mauling,
    /// Tag a fresh commitment instead of the ciphertext's own.
    CfSubstitution,
    /// Tag sends out of encryption order and deliver copies twice.
    Shuffled,
}

impl RepDriver {
    pub const ALL: [RepDriver; 4] = [RepDriver::Honest, RepDriver::Mauling, RepDriver::CfSubstitution, RepDriver::Shuffled];

    pub fn name(self) -> &'static str {
        match self {
            RepDriver::Honest => "honest",
            RepDriver::Mauling => "mauling",
            RepDriver::CfSubstitution => "cf-substitution",
            RepDriver::Shuffled => "shuffled",
        }
    }

    /// `k_ch` is the channel key the adversary chose for the game.
    pub fn run(
        self,
        game: &mut ReportabilityGame,
        rng: &mut ChaCha20Rng,
        k_ch: [u8; LAMBDA],
        events: usize,
    ) -> Vec<ReportEntry> {
        let n = game.parties();
        let mut tagged: Vec<(Party, FrankedCiphertext, ServerTag)> = Vec::new();
        let mut untagged: Vec<(Party, FrankedCiphertext)> = Vec::new();
        let mut got = Vec::new();
        for _ in 0..events {
            if tagged.is_empty() || rng.gen_bool(0.4) {
                let p = rng.gen_range(0..n);
                let m: Vec<u8> = (0..rng.gen_range(0..16)).map(|_| rng.gen()).collect();
                let c = game.send(p, &m).expect("valid party");
                if self == RepDriver::Shuffled && rng.gen_bool(0.5) {
                    untagged.push((p, c));
                    continue;
                }
                let c_f = if self == RepDriver::CfSubstitution && rng.gen_bool(0.5) {
                    commit(rng, &m).1
                } else {
                    c.c_f
                };
                let t = game.tag_send(p, c_f).expect("tagging");
                let mut c = c;
                if c_f != c.c_f && rng.gen_bool(0.5) {
                    c.c_f = c_f;
                }
                tagged.push((p, c, t));
                if let Some((q, c2)) = untagged.pop() {
                    let t2 = game.tag_send(q, c2.c_f).expect("tagging");
                    tagged.push((q, c2, t2));
                }
            } else {
                let (p_s, c, t) = tagged.choose(rng).expect("non-empty").clone();
                let mut to = rng.gen_range(0..n);
                if to == p_s {
                    to = (to + 1) % n;
                }
                let mut c = c;
                if self == RepDriver::Mauling && rng.gen_bool(0.6) {
                    match rng.gen_range(0..4) {
                        0 if !c.c_e.body.is_empty() => {
                            let k = rng.gen_range(0..c.c_e.body.len());
                            c.c_e.body[k] ^= 1 << rng.gen_range(0..8);
                        }
                        1 => c.c_e.body_mac.0[rng.gen_range(0..LAMBDA)] ^= 0x80,
                        2 => {
                            c.c_e.i += 1;
                            c.i += 1;
                        }
                        _ => c.c_f.0[rng.gen_range(0..LAMBDA)] ^= 0x01,
                    }
                }
                if let Some(e) = game.recv_tag(to, p_s, &c, &t) {
                    got.push(e);
                }
                if self == RepDriver::Shuffled && rng.gen_bool(0.3) {
                    // two copies of one opening under fresh indices, one send tag
                    let m: Vec<u8> = (0..8).map(|_| rng.gen()).collect();
                    let (k_f, c_f) = commit(rng, &m);
                    let payload = [&m[..], &k_f.0[..]].concat();
                    let t = game.tag_send(p_s, c_f).expect("tagging");
                    for base in [1 << 20, 1 << 21] {
                        let mut st = ChannelState::from_parts(p_s, n, k_ch, base + got.len() as u64, vec![BTreeSet::new(); n])
                            .expect("valid party");
                        let c_e = channel_send(&mut st, &payload);
                        let twin = FrankedCiphertext { i: c_e.i, c_e, c_f };
                        if let Some(e) = game.recv_tag(to, p_s, &twin, &t) {
                            got.push(e);
                        }
                    }
                }
            }
            if !got.is_empty() && rng.gen_bool(0.15) {
                let k = rng.gen_range(1..=got.len());
                let rho: Vec<_> = got.choose_multiple(rng, k).cloned().collect();
                game.rep(&rho);
            }
        }
        if !got.is_empty() {
            game.rep(&got);
        }
        got
    }
}

pub fn game_reportability(variant: Variant, driver: RepDriver, seed: u64, events: usize) -> Outcome {
    let mut rng = seeded(seed ^ 0x5E);
    let mut k_ch = [0u8; LAMBDA];
    rng.fill(&mut k_ch);
    let mut game = ReportabilityGame::new(variant, seed, k_ch, Checks::ALL);
    driver.run(&mut game, &mut rng, k_ch, events);
    game.outcome()
}

/// Judges every non-empty subset of the first `k` deliveries of an honest run
/// (capped at 10). Returns `(subsets judged, subsets rejected or escaping)`.
pub fn all_subsets_report(variant: Variant, seed: u64, events: usize) -> (usize, usize) {
    let mut rng = seeded(seed ^ 0xA11);
    let mut k_ch = [0u8; LAMBDA];
    rng.fill(&mut k_ch);
    let mut game = ReportabilityGame::new(variant, seed, k_ch, Checks::ALL);
    let got = RepDriver::Honest.run(&mut game, &mut rng, k_ch, events);
    let k = got.len().min(10);
    let mut bad = 0;
    for mask in 1u32..(1 << k) {
        let rho: Vec<_> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| got[b].clone()).collect();
        let before = game.win;
        game.win = false;
        game.rep(&rho);
        if game.win {
            bad += 1;
        }
        game.win |= before;
    }
    ((1usize << k) - 1, bad)
}
