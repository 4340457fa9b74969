//! Fixtures for the benches: honest conversations of a given size, already
//! tagged, plus the full report for each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tfrank::ack::ServerTag;
use tfrank::causality::CausalityGraph;
use tfrank::crypto::LAMBDA;
use tfrank::franking::{ClientState, Opening, ReportEntry, ServerState};
use tfrank::group::GroupServerState;
use tfrank::outsourced::OutServerState;

pub const CID: &[u8] = b"bench";

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn clients(rng: &mut ChaCha20Rng, n: usize) -> Vec<ClientState> {
    let mut k = [0u8; LAMBDA];
    rng.fill(&mut k);
    (0..n).map(|p| ClientState::init_group(p, k, n).unwrap()).collect()
}

fn entry(c: &tfrank::franking::FrankedCiphertext, m: &[u8], k_f: tfrank::crypto::OpeningKey, to: usize, t_s: &ServerTag, t_r: ServerTag) -> ReportEntry {
    ReportEntry {
        sender: c.c_e.sender,
        receiver: to,
        opening: Opening::Open { m: m.to_vec(), k_f },
        c_f: c.c_f,
        t_s: t_s.clone(),
        t_r,
    }
}

/// Two-party ping-pong of `msgs` messages, each delivered at once.
pub fn two_party(msgs: usize, seed: u64) -> (ServerState, Vec<ReportEntry>) {
    let mut rng = rng(seed);
    let mut srv = ServerState::init(&mut rng);
    let mut cl = clients(&mut rng, 2);
    let mut out = Vec::with_capacity(msgs);
    for k in 0..msgs {
        let (p, q) = (k % 2, 1 - k % 2);
        let m = format!("message {k}").into_bytes();
        let c = cl[p].snd(&mut rng, &m);
        let t_s = srv.tag_send(CID, p, c.c_f).unwrap();
        let got = cl[q].rcv(&c).unwrap();
        let t_r = srv.tag_recv(CID, q, c.c_f).unwrap();
        out.push(entry(&c, &m, got.k_f, q, &t_s, t_r));
    }
    (srv, out)
}

/// `n`-party group where each of `msgs` broadcasts reaches everyone.
pub fn group(n: usize, msgs: usize, seed: u64) -> (GroupServerState, Vec<ReportEntry>) {
    let mut rng = rng(seed);
    let mut srv = GroupServerState::init(&mut rng, n).unwrap();
    let mut cl = clients(&mut rng, n);
    let mut out = Vec::new();
    for k in 0..msgs {
        let p = k % n;
        let m = format!("message {k}").into_bytes();
        let c = cl[p].snd(&mut rng, &m);
        let t_s = srv.tag_send(CID, p, c.c_f).unwrap();
        for q in (0..n).filter(|&q| q != p) {
            let got = cl[q].rcv_from(p, &c).unwrap();
            let t_r = srv.tag_recv(CID, q, p, c.c_f).unwrap();
            out.push(entry(&c, &m, got.k_f, q, &t_s, t_r));
        }
    }
    (srv, out)
}

/// Same schedule as [`two_party`] against the outsourced server. Also
/// returns every tag in issue order.
pub fn outsourced(msgs: usize, seed: u64) -> (OutServerState, Vec<ReportEntry>, Vec<ServerTag>) {
    let mut rng = rng(seed);
    let (srv, mut chains) = OutServerState::init(&mut rng, 2, CID).unwrap();
    let mut cl = clients(&mut rng, 2);
    let mut out = Vec::with_capacity(msgs);
    let mut tags = Vec::new();
    for k in 0..msgs {
        let (p, q) = (k % 2, 1 - k % 2);
        let m = format!("message {k}").into_bytes();
        let c = cl[p].snd(&mut rng, &m);
        let t_s = srv.tag_send(CID, p, c.c_f, &chains[p]).unwrap();
        chains[p] = t_s.clone();
        let got = cl[q].rcv(&c).unwrap();
        let t_r = srv.tag_recv(CID, q, p, c.c_f, &chains[q]).unwrap();
        chains[q] = t_r.clone();
        tags.push(t_s.clone());
        tags.push(t_r.clone());
        out.push(entry(&c, &m, got.k_f, q, &t_s, t_r));
    }
    (srv, out, tags)
}

/// Judged graph of a full two-party conversation.
pub fn judged(msgs: usize) -> CausalityGraph {
    let (srv, rep) = two_party(msgs, 1);
    srv.judge(CID, &rep).unwrap()
}
