//! A two-party franking channel in which senders carry their own ordering
//! metadata and the server tags sends only. The judge rebuilds each party's
//! timeline from that metadata, so a sender can reorder its own history.
//!
//! Metadata per send: `q`, the sender's actions the peer has not yet
//! acknowledged (own send indices and peer indices it received), and `i_r`,
//! the largest peer index it has received (-1 for none).

use std::collections::BTreeMap;
use std::fmt;

use rand::{CryptoRng, RngCore};

use super::integrity::IntegrityGame;
use super::{seeded, Variant};
use crate::ack::AckKind;
use crate::causality::{CausalityGraph, Edge, VId};
use crate::checks::Checks;
use crate::crypto::{commit, commit_verify, mac_tag, mac_verify, Commitment, MacKey, MacTagBytes, OpeningKey};
use crate::franking::{ClientState, FrankedCiphertext, Opening, ReportEntry, ServerState};
use crate::Party;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QItem {
    /// Own send with this index.
    Sent(u64),
    /// Peer message with this index was received.
    Recv(u64),
}

impl fmt::Display for QItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QItem::Sent(k) => write!(f, "{k}"),
            QItem::Recv(k) => write!(f, "~{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meta {
    pub q: Vec<QItem>,
    pub i_r: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineTag {
    pub sender: Party,
    pub k: u64,
    pub c_f: Commitment,
    pub meta: Meta,
    pub mac: MacTagBytes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineEntry {
    pub m: Vec<u8>,
    pub k_f: OpeningKey,
    pub tag: BaselineTag,
}

fn encode(sender: Party, k: u64, c_f: &Commitment, meta: &Meta) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&(sender as u32).to_be_bytes());
    b.extend_from_slice(&k.to_be_bytes());
    b.extend_from_slice(&c_f.0);
    b.extend_from_slice(&meta.i_r.to_be_bytes());
    for it in &meta.q {
        let (tag, v) = match it {
            QItem::Sent(v) => (0u8, v),
            QItem::Recv(v) => (1u8, v),
        };
        b.push(tag);
        b.extend_from_slice(&v.to_be_bytes());
    }
    b
}

/// Server of the metadata scheme. Receptions get no tag unless the
/// reception log is switched on, in which case the judge orders timelines
/// by the log instead of by `q`.
#[derive(Debug, Clone)]
pub struct BaselineServer {
    k_mac: MacKey,
    sends: [u64; 2],
    log: Option<[Vec<QItem>; 2]>,
}

impl BaselineServer {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        BaselineServer { k_mac: MacKey::random(rng), sends: [0, 0], log: None }
    }

    pub fn with_reception_log(mut self) -> Self {
        self.log = Some([Vec::new(), Vec::new()]);
        self
    }

    pub fn tag_send(&mut self, p: Party, c_f: Commitment, meta: Meta) -> BaselineTag {
        self.sends[p] += 1;
        let k = self.sends[p];
        if let Some(log) = &mut self.log {
            log[p].push(QItem::Sent(k));
        }
        let mac = mac_tag(&self.k_mac, &encode(p, k, &c_f, &meta));
        BaselineTag { sender: p, k, c_f, meta, mac }
    }

    /// Always ⊥; with the log on, the server still writes the event down.
    pub fn tag_recv(&mut self, p: Party, t: &BaselineTag) -> Option<()> {
        if let Some(log) = &mut self.log {
            log[p].push(QItem::Recv(t.k));
        }
        None
    }

    /// Rebuild both timelines and the graph they describe.
    pub fn judge(&self, report: &[BaselineEntry]) -> Option<CausalityGraph> {
        let mut own: [BTreeMap<u64, &BaselineEntry>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for e in report {
            let t = &e.tag;
            if t.sender > 1
                || !mac_verify(&self.k_mac, &encode(t.sender, t.k, &t.c_f, &t.meta), &t.mac)
                || !commit_verify(&e.m, &e.k_f, &t.c_f)
            {
                return None;
            }
            if own[t.sender].insert(t.k, e).is_some() {
                return None;
            }
        }
        let timelines = match &self.log {
            Some(log) => [0, 1].map(|p| {
                log[p]
                    .iter()
                    .copied()
                    .filter(|it| match it {
                        QItem::Sent(k) => own[p].contains_key(k),
                        QItem::Recv(k) => own[1 - p].contains_key(k),
                    })
                    .collect::<Vec<_>>()
            }),
            None => [extract(&own[0], &own[1])?, extract(&own[1], &own[0])?],
        };
        let g = build(&timelines, &own)?;
        g.is_valid_subgraph().then_some(g)
    }
}

/// Timeline of one party from its own sends' metadata. Receptions of
/// reported peer messages that no later send mentions go at the end.
fn extract(mine: &BTreeMap<u64, &BaselineEntry>, theirs: &BTreeMap<u64, &BaselineEntry>) -> Option<Vec<QItem>> {
    let mut line: Vec<QItem> = Vec::new();
    for (&k, e) in mine {
        for it in &e.tag.meta.q {
            if !line.contains(it) {
                line.push(*it);
            }
        }
        let last_recv = line
            .iter()
            .rev()
            .find_map(|it| match it {
                QItem::Recv(j) => Some(*j as i64),
                _ => None,
            })
            .unwrap_or(-1);
        if e.tag.meta.i_r != last_recv || line.contains(&QItem::Sent(k)) {
            return None;
        }
        line.push(QItem::Sent(k));
    }
    for &j in theirs.keys() {
        if !line.contains(&QItem::Recv(j)) {
            line.push(QItem::Recv(j));
        }
    }
    Some(line)
}

fn build(lines: &[Vec<QItem>; 2], own: &[BTreeMap<u64, &BaselineEntry>; 2]) -> Option<CausalityGraph> {
    let mut g = CausalityGraph::new(2).ok()?;
    let mut sends: [BTreeMap<u64, VId>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut recvs: Vec<(Party, u64, VId)> = Vec::new();
    for p in 0..2 {
        let (mut cs, mut cr) = (0, 0);
        for it in &lines[p] {
            match *it {
                QItem::Sent(k) => {
                    cs += 1;
                    let v = VId::s(cs, cr);
                    let m = own[p].get(&k).map(|e| e.m.clone());
                    g.insert_vertex(p, v, m).ok()?;
                    sends[p].insert(k, v);
                }
                QItem::Recv(j) => {
                    cr += 1;
                    let v = VId::r(cs, cr);
                    g.insert_vertex(p, v, own[1 - p].get(&j).map(|e| e.m.clone())).ok()?;
                    recvs.push((p, j, v));
                }
            }
        }
    }
    for (p, j, v) in recvs {
        if let Some(&src) = sends[1 - p].get(&j) {
            g.insert_edge(Edge { from: (1 - p, src), to: (p, v) }).ok()?;
        }
    }
    Some(g)
}

/// The attacker's sequence (party 0 hides that it saw m2 before sending m3)
/// or the honest one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sequence {
    Misreported,
    Honest,
}

fn meta(q: &[QItem], i_r: i64) -> Meta {
    Meta { q: q.to_vec(), i_r }
}

/// Runs the eight calls against the metadata scheme. Returns the judged
/// graph of the full report and the ground truth.
pub fn run_baseline(seq: Sequence, reception_log: bool) -> (Option<CausalityGraph>, CausalityGraph) {
    use QItem::{Recv, Sent};
    let mut rng = seeded(0xA11CE);
    let mut srv = BaselineServer::new(&mut rng);
    if reception_log {
        srv = srv.with_reception_log();
    }
    let mut truth = CausalityGraph::new(2).expect("two parties");
    let mut report = Vec::new();
    let mut send = |srv: &mut BaselineServer, truth: &mut CausalityGraph, p: Party, m: &[u8], md: Meta| {
        let (k_f, c_f) = commit(&mut rng, m);
        truth.add_send(p, Some(m.to_vec())).expect("valid party");
        let tag = srv.tag_send(p, c_f, md);
        report.push(BaselineEntry { m: m.to_vec(), k_f, tag: tag.clone() });
        tag
    };
    let recv = |srv: &mut BaselineServer, truth: &mut CausalityGraph, p: Party, t: &BaselineTag| {
        truth.add_recv(t.sender, p, t.k).expect("tagged send");
        srv.tag_recv(p, t)
    };
    let (m3, m4) = match seq {
        Sequence::Misreported => (meta(&[Sent(1)], -1), meta(&[Sent(1), Sent(2), Recv(1)], 1)),
        Sequence::Honest => (meta(&[Recv(1)], 1), meta(&[Recv(1), Sent(2)], 1)),
    };
    let c1 = send(&mut srv, &mut truth, 0, b"m1", meta(&[], -1));
    recv(&mut srv, &mut truth, 1, &c1);
    let c2 = send(&mut srv, &mut truth, 1, b"m2", meta(&[Recv(1)], 1));
    recv(&mut srv, &mut truth, 0, &c2);
    let c3 = send(&mut srv, &mut truth, 0, b"m3", m3);
    recv(&mut srv, &mut truth, 1, &c3);
    let c4 = send(&mut srv, &mut truth, 0, b"m4", m4);
    recv(&mut srv, &mut truth, 1, &c4);
    (srv.judge(&report), truth)
}

/// The baseline wins when its judge accepts a graph outside the truth.
pub fn baseline_wins(seq: Sequence, reception_log: bool) -> bool {
    match run_baseline(seq, reception_log) {
        (Some(g), truth) => !g.is_subgraph(&truth),
        (None, _) => false,
    }
}

/// Party 0's order of events in a graph, as message names.
pub fn observed_order(g: &CausalityGraph, p: Party) -> Vec<String> {
    g.vertices(p)
        .map(|(_, m)| m.as_ref().map(|m| String::from_utf8_lossy(m).into_owned()).unwrap_or_else(|| "?".into()))
        .collect()
}

/// The same eight calls against the reception-tagging scheme, followed by
/// every report party 0 can assemble from them.
fn qcc_sequence() -> bool {
    let mut game = IntegrityGame::new(Variant::TwoParty, 0xA11CE, Checks::ALL);
    let mut rng = seeded(0xB0B);
    let mut clients = [0, 1].map(|p| ClientState::init(p, [7; 32]).expect("two parties"));
    let mut sent: Vec<(Party, FrankedCiphertext, crate::ack::ServerTag, Vec<u8>)> = Vec::new();
    let mut entries: Vec<ReportEntry> = Vec::new();
    let cid: &[u8] = b"main";
    let plan: [(AckKind, Party, usize); 8] = [
        (AckKind::S, 0, 0),
        (AckKind::R, 1, 0),
        (AckKind::S, 1, 1),
        (AckKind::R, 0, 1),
        (AckKind::S, 0, 2),
        (AckKind::R, 1, 2),
        (AckKind::S, 0, 3),
        (AckKind::R, 1, 3),
    ];
    for (kind, p, k) in plan {
        if kind == AckKind::S {
            let m = format!("m{}", k + 1).into_bytes();
            let c = clients[p].snd(&mut rng, &m);
            let t = game.send_tag(cid, p, &c, None).expect("tagged");
            sent.push((p, c, t, m));
        } else {
            let (ps, c, t_s, _) = sent[k].clone();
            let got = clients[p].rcv_from(ps, &c).expect("honest ciphertext");
            let t_r = game.recv_tag(cid, p, ps, &c, &t_s, None).expect("tagged");
            entries.push(ReportEntry {
                sender: ps,
                receiver: p,
                opening: Opening::Open { m: got.m, k_f: got.k_f },
                c_f: c.c_f,
                t_s,
                t_r,
            });
        }
    }
    // party 0 claims m2 arrived after m3 by trading reception tags around
    let mut lie = entries.clone();
    let (a, b) = (1, 2);
    let t = lie[a].t_r.clone();
    lie[a].t_r = lie[b].t_r.clone();
    lie[b].t_r = t;
    let reversed: Vec<_> = entries.iter().rev().cloned().collect();
    game.rep(cid, &entries, &reversed);
    game.rep(cid, &lie, &entries);
    let redacted: Vec<_> = entries.iter().map(|e| if e.sender == 1 { e.redacted() } else { e.clone() }).collect();
    game.rep(cid, &redacted, &entries);
    game.outcome().win
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackVerdict {
    pub baseline_win: bool,
    pub qcc_win: bool,
}

pub fn run_attack_demo() -> AttackVerdict {
    AttackVerdict { baseline_win: baseline_wins(Sequence::Misreported, false), qcc_win: qcc_sequence() }
}

/// Two executions that differ only in when m2 reaches party 0. With
/// receptions untagged, the server's view (all send acks) is the same for
/// both while the truths differ, so no judge gets both right.
pub fn reception_blind_ambiguity() -> bool {
    let run = |m2_first: bool| {
        let mut rng = seeded(0xC1);
        let mut srv = ServerState::init(&mut rng);
        let mut truth = CausalityGraph::new(2).expect("two parties");
        let mut acks = Vec::new();
        let mut send = |truth: &mut CausalityGraph, p: Party| {
            let (_, c_f) = commit(&mut rng, b"m");
            truth.add_send(p, None).expect("valid party");
            acks.push(srv.tag_send(b"main", p, c_f).expect("valid party").ack);
        };
        send(&mut truth, 0);
        truth.add_recv(0, 1, 1).expect("sent");
        send(&mut truth, 1);
        if m2_first {
            truth.add_recv(1, 0, 1).expect("sent");
            send(&mut truth, 0);
        } else {
            send(&mut truth, 0);
            truth.add_recv(1, 0, 1).expect("sent");
        }
        truth.add_recv(0, 1, 2).expect("sent");
        send(&mut truth, 0);
        truth.add_recv(0, 1, 3).expect("sent");
        (acks, truth)
    };
    let (view1, truth1) = run(false);
    let (view2, truth2) = run(true);
    view1 == view2 && truth1 != truth2
}

/// Human-readable account of the demo.
pub fn narrate(v: &AttackVerdict) -> String {
    let (judged, truth) = run_baseline(Sequence::Misreported, false);
    let claimed = judged.map(|g| observed_order(&g, 0).join(", ")).unwrap_or_else(|| "rejected".into());
    let side = |w: bool| if w { "attack succeeds" } else { "attack fails" };
    format!(
        "party 0 claims ({claimed})\nparty 1 saw ({})\nbaseline: {}; QCC: {}",
        observed_order(&truth, 1).join(", "),
        side(v.baseline_win),
        side(v.qcc_win)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_metadata_recovers_the_truth() {
        let (g, truth) = run_baseline(Sequence::Honest, false);
        assert_eq!(g.unwrap(), truth);
    }

    #[test]
    fn misreported_metadata_passes_every_check() {
        let (g, truth) = run_baseline(Sequence::Misreported, false);
        let g = g.expect("judge accepts");
        assert!(g.is_valid_subgraph());
        assert!(!g.is_subgraph(&truth));
        assert!(!g.strip_messages().is_subgraph(&truth.strip_messages()));
        assert_eq!(observed_order(&g, 0), ["m1", "m3", "m2", "m4"]);
        assert_eq!(observed_order(&truth, 0), ["m1", "m2", "m3", "m4"]);
    }

    #[test]
    fn demo_verdict() {
        assert_eq!(run_attack_demo(), AttackVerdict { baseline_win: true, qcc_win: false });
    }

    #[test]
    fn a_reception_log_closes_the_hole() {
        assert!(!baseline_wins(Sequence::Misreported, true));
        let (g, truth) = run_baseline(Sequence::Misreported, true);
        assert_eq!(g.unwrap(), truth);
    }

    #[test]
    fn untagged_receptions_are_ambiguous() {
        assert!(reception_blind_ambiguity());
    }
}
