//! Correctness: honest clients, honest server, the adversary only schedules.
//! It wins if an honestly sent ciphertext is refused, or if a report of
//! honestly received messages is rejected or leaves the ground truth.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::server::{expected_ack, HeldChains, Server};
use super::trace::{random_trace, TraceOp};
use super::{record_reception, seeded, Mirror, Outcome, Variant};
use crate::ack::{AckKind, ServerTag};
use crate::causality::CausalityGraph;
use crate::checks::Checks;
use crate::crypto::{Commitment, LAMBDA};
use crate::franking::{ClientState, FrankedCiphertext, Opening, ReportEntry};
use crate::Party;

type SendRecord = (Party, FrankedCiphertext, ServerTag);

pub struct CorrectnessGame {
    variant: Variant,
    ck: Checks,
    cid: Vec<u8>,
    rng: ChaCha20Rng,
    srv: Server,
    held: HeldChains,
    clients: Vec<ClientState>,
    g: CausalityGraph,
    r_t: HashMap<SendRecord, u64>,
    r_r: HashSet<ReportEntry>,
    r: HashSet<SendRecord>,
    mirror: Mirror,
    win: bool,
    calls: usize,
}

impl CorrectnessGame {
    pub fn new(variant: Variant, seed: u64, k_ch: [u8; LAMBDA], ck: Checks) -> Self {
        let mut rng = seeded(seed);
        let srv = Server::new(&mut rng, variant);
        let n = variant.parties();
        CorrectnessGame {
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
            mirror: Mirror::new(ck),
            win: false,
            calls: 0,
        }
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

    pub fn send_tag(&mut self, p: Party, m: &[u8]) -> Option<(FrankedCiphertext, ServerTag)> {
        self.calls += 1;
        if p >= self.parties() {
            return None;
        }
        let c = self.clients[p].snd(&mut self.rng, m);
        let pred = self.held.get(&self.srv, &self.cid, p);
        let t_s = self.srv.tag_send(&self.cid, p, c.c_f, pred.as_ref(), self.ck)?;
        self.held.set(&self.cid, p, t_s.clone());
        let v = self.g.add_send(p, Some(m.to_vec())).expect("valid party");
        self.audit(&t_s, AckKind::S, p, p, c.c_f);
        self.r_t.insert((p, c.clone(), t_s.clone()), v.cs);
        Some((c, t_s))
    }

    /// `None` when an assertion refuses the call or the honest receiver
    /// rejects; the latter is a win.
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
        let key = (p_s, c.clone(), t_s.clone());
        let i = *self.r_t.get(&key)?;
        if !self.r.insert((p_r, c.clone(), t_s.clone())) {
            return None;
        }
        let Some(rec) = self.clients[p_r].rcv_from(p_s, c) else {
            self.win = true;
            return None;
        };
        let pred = self.held.get(&self.srv, &self.cid, p_r);
        let t_r = self.srv.tag_recv(&self.cid, p_r, p_s, c.c_f, pred.as_ref(), self.ck)?;
        self.held.set(&self.cid, p_r, t_r.clone());
        record_reception(&mut self.g, p_s, p_r, i).expect("tagged send exists");
        self.audit(&t_r, AckKind::R, p_s, p_r, c.c_f);
        let entry = ReportEntry {
            sender: p_s,
            receiver: p_r,
            opening: Opening::Open { m: rec.m, k_f: rec.k_f },
            c_f: c.c_f,
            t_s: t_s.clone(),
            t_r,
        };
        self.r_r.insert(entry.clone());
        Some(entry)
    }

    pub fn rep(&mut self, rho: &[ReportEntry]) {
        self.calls += 1;
        if rho.is_empty() {
            return;
        }
        let judged = self.srv.judge(&self.cid, rho, self.ck);
        let honest = rho.iter().all(|e| self.r_r.contains(e));
        if honest && judged.map_or(true, |g| !g.is_subgraph(&self.g)) {
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

    /// Judge a report without it counting as a `rep` call.
    pub fn judge(&self, rho: &[ReportEntry]) -> Option<CausalityGraph> {
        self.srv.judge(&self.cid, rho, self.ck)
    }

    pub fn truth(&self) -> &CausalityGraph {
        &self.g
    }
}

pub trait CorrectnessDriver {
    fn run(&mut self, game: &mut CorrectnessGame, rng: &mut ChaCha20Rng);
}

/// Replays a random schedule, reporting random subsets along the way and the
/// whole delivered set at the end.
pub struct RandomHonest {
    pub events: usize,
}

/// Plays `trace` through the oracles; returns every delivered entry in
/// delivery order.
pub fn play_trace<R: Rng>(
    game: &mut CorrectnessGame,
    trace: &[TraceOp],
    rng: &mut R,
    rep_chance: f64,
) -> Vec<ReportEntry> {
    let mut sent: Vec<(Party, FrankedCiphertext, ServerTag)> = Vec::new();
    let mut got = Vec::new();
    for op in trace {
        match op {
            TraceOp::Send { from, msg } => {
                let (c, t) = game.send_tag(*from, msg).expect("honest send");
                sent.push((*from, c, t));
            }
            TraceOp::Deliver { send, to } => {
                let (from, c, t) = &sent[*send];
                if let Some(e) = game.recv_tag(*to, *from, c, t) {
                    got.push(e);
                }
            }
        }
        if !got.is_empty() && rng.gen_bool(rep_chance) {
            let k = rng.gen_range(1..=got.len());
            let rho: Vec<_> = got.choose_multiple(rng, k).cloned().collect();
            game.rep(&rho);
        }
    }
    got
}

impl CorrectnessDriver for RandomHonest {
    fn run(&mut self, game: &mut CorrectnessGame, rng: &mut ChaCha20Rng) {
        let trace = random_trace(rng, game.parties(), self.events);
        let got = play_trace(game, &trace, rng, 0.1);
        if got.is_empty() {
            return;
        }
        game.rep(&got);
        for k in 0..got.len() {
            game.rep(&got[k..]);
        }
    }
}

pub fn game_correctness(
    variant: Variant,
    driver: &mut dyn CorrectnessDriver,
    seed: u64,
    ck: Checks,
) -> Outcome {
    let mut rng = seeded(seed ^ 0xC0);
    let mut k_ch = [0u8; LAMBDA];
    rng.fill(&mut k_ch);
    let mut game = CorrectnessGame::new(variant, seed, k_ch, ck);
    driver.run(&mut game, &mut rng);
    game.outcome()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_runs_never_win() {
        for (seed, v) in [(1, Variant::TwoParty), (2, Variant::Group(3)), (3, Variant::Outsourced(2)), (4, Variant::Outsourced(4))] {
            let out = game_correctness(v, &mut RandomHonest { events: 80 }, seed, Checks::ALL);
            assert!(!out.win, "{v:?}");
            assert!(out.mirror_checks > 0);
        }
    }

    #[test]
    fn unknown_records_are_refused() {
        let mut g = CorrectnessGame::new(Variant::TwoParty, 9, [1; 32], Checks::ALL);
        let (c, t) = g.send_tag(0, b"x").unwrap();
        assert!(g.recv_tag(0, 1, &c, &t).is_none());
        assert!(g.recv_tag(1, 0, &c, &t).is_some());
        assert!(g.recv_tag(1, 0, &c, &t).is_none());
        assert!(!g.outcome().win);
    }

    #[test]
    fn foreign_report_is_not_a_win() {
        let mut g = CorrectnessGame::new(Variant::TwoParty, 9, [1; 32], Checks::ALL);
        let (c, t) = g.send_tag(0, b"x").unwrap();
        let e = g.recv_tag(1, 0, &c, &t).unwrap();
        g.rep(&[e.redacted()]);
        let mut bad = e.clone();
        bad.t_r.mac.0[0] ^= 1;
        g.rep(&[bad]);
        g.rep(&[]);
        assert!(!g.outcome().win);
        g.rep(&[e]);
        assert!(!g.outcome().win);
    }
}
