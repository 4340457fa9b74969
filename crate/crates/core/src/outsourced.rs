//! Outsourced-storage variant. The server keeps only its MAC key; each client
//! presents the last tag it was issued and the server continues counting from
//! there.

use rand::{CryptoRng, RngCore};

use crate::ack::{Ack, AckKind, ServerTag};
use crate::causality::CausalityGraph;
use crate::checks::Checks;
use crate::crypto::{Commitment, MacKey};
use crate::franking::{judge_report, FrankingError, Layout, ReportEntry};
use crate::Party;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutServerState {
    k_mac: MacKey,
    n: usize,
}

/// Owner of a tag: sender of a send tag, receiver of a reception tag, the
/// named party of an init tag.
pub fn party_of_tag(t: &ServerTag) -> Option<Party> {
    t.ack.owner()
}

impl OutServerState {
    pub fn init<R: RngCore + CryptoRng>(
        rng: &mut R,
        n: usize,
        cid: &[u8],
    ) -> Result<(Self, Vec<ServerTag>), FrankingError> {
        if n < 2 {
            return Err(FrankingError::BadParty { party: n, n: 2 });
        }
        let st = OutServerState { k_mac: MacKey::random(rng), n };
        let tags = st.init_tags(cid);
        Ok((st, tags))
    }

    pub fn from_parts(k_mac: MacKey, n: usize) -> Self {
        OutServerState { k_mac, n }
    }

    pub fn k_mac(&self) -> &MacKey {
        &self.k_mac
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    fn layout(&self) -> Layout {
        if self.n == 2 {
            Layout::TwoParty
        } else {
            Layout::Group
        }
    }

    /// Init tags for a conversation, one per party.
    pub fn init_tags(&self, cid: &[u8]) -> Vec<ServerTag> {
        (0..self.n).map(|p| ServerTag::issue(&self.k_mac, Ack::init(p, cid))).collect()
    }

    fn predecessor(&self, cid: &[u8], p: Party, t: &ServerTag, ck: Checks) -> Option<(u64, u64)> {
        if p >= self.n {
            return None;
        }
        if ck.pi && party_of_tag(t) != Some(p) {
            return None;
        }
        if ck.mac && !t.verify(&self.k_mac) {
            return None;
        }
        if ck.cid && t.ack.cid != cid {
            return None;
        }
        Some((t.ack.cs, t.ack.cr))
    }

    pub fn tag_send(&self, cid: &[u8], p: Party, c_f: Commitment, t: &ServerTag) -> Option<ServerTag> {
        self.tag_send_with(cid, p, c_f, t, Checks::ALL)
    }

    pub fn tag_send_with(
        &self,
        cid: &[u8],
        p: Party,
        c_f: Commitment,
        t: &ServerTag,
        ck: Checks,
    ) -> Option<ServerTag> {
        let (cs, cr) = self.predecessor(cid, p, t, ck)?;
        let ack = Ack {
            kind: AckKind::S,
            sender: p,
            receiver: self.layout().send_receiver(p),
            cid: cid.to_vec(),
            c_f: Some(c_f),
            cs: cs + 1,
            cr,
        };
        Some(ServerTag::issue(&self.k_mac, ack))
    }

    pub fn tag_recv(
        &self,
        cid: &[u8],
        p_r: Party,
        p_s: Party,
        c_f: Commitment,
        t: &ServerTag,
    ) -> Option<ServerTag> {
        self.tag_recv_with(cid, p_r, p_s, c_f, t, Checks::ALL)
    }

    pub fn tag_recv_with(
        &self,
        cid: &[u8],
        p_r: Party,
        p_s: Party,
        c_f: Commitment,
        t: &ServerTag,
        ck: Checks,
    ) -> Option<ServerTag> {
        if p_s >= self.n || p_s == p_r {
            return None;
        }
        let (cs, cr) = self.predecessor(cid, p_r, t, ck)?;
        let ack = Ack {
            kind: AckKind::R,
            sender: p_s,
            receiver: Some(p_r),
            cid: cid.to_vec(),
            c_f: Some(c_f),
            cs,
            cr: cr + 1,
        };
        Some(ServerTag::issue(&self.k_mac, ack))
    }

    /// Convicts the owner of two distinct valid tags at the same chain
    /// position.
    pub fn judge_replay(&self, t: &ServerTag, u: &ServerTag) -> Option<Party> {
        self.judge_replay_with(t, u, Checks::ALL)
    }

    pub fn judge_replay_with(&self, t: &ServerTag, u: &ServerTag, ck: Checks) -> Option<Party> {
        let p = party_of_tag(t)?;
        if party_of_tag(u) != Some(p) {
            return None;
        }
        let macs = !ck.mac || (t.verify(&self.k_mac) && u.verify(&self.k_mac));
        let same_pos = !ck.sum || t.ack.cs + t.ack.cr == u.ack.cs + u.ack.cr;
        (macs && same_pos && t.ack != u.ack).then_some(p)
    }

    pub fn judge(&self, cid: &[u8], report: &[ReportEntry]) -> Option<CausalityGraph> {
        self.judge_with(cid, report, Checks::ALL)
    }

    pub fn judge_with(&self, cid: &[u8], report: &[ReportEntry], ck: Checks) -> Option<CausalityGraph> {
        judge_report(&self.k_mac, cid, self.n, self.layout(), report, ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(n: usize) -> (OutServerState, Vec<ServerTag>) {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        OutServerState::init(&mut rng, n, b"c").unwrap()
    }

    #[test]
    fn init_tags() {
        let (s, t) = setup(2);
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|x| x.verify(s.k_mac())));
        assert_ne!(t[0].ack.encode(), t[1].ack.encode());
        assert_eq!(setup(4).1.len(), 4);
    }

    #[test]
    fn owner_rule() {
        let cf = Some(Commitment([0; 32]));
        let mk = |kind, cs, cr| Ack { kind, sender: 0, receiver: Some(1), cid: vec![], c_f: cf, cs, cr };
        let k = MacKey([0; 32]);
        assert_eq!(party_of_tag(&ServerTag::issue(&k, mk(AckKind::S, 1, 0))), Some(0));
        assert_eq!(party_of_tag(&ServerTag::issue(&k, mk(AckKind::R, 0, 1))), Some(1));
        assert_eq!(party_of_tag(&ServerTag::issue(&k, Ack::init(1, b""))), Some(1));
    }

    #[test]
    fn chain_and_rejections() {
        let (s, t) = setup(2);
        let cf = Commitment([3; 32]);
        let a = s.tag_send(b"c", 0, cf, &t[0]).unwrap();
        assert_eq!((a.ack.cs, a.ack.cr, a.ack.receiver), (1, 0, Some(1)));
        let b = s.tag_recv(b"c", 0, 1, cf, &a).unwrap();
        assert_eq!((b.ack.cs, b.ack.cr), (1, 1));
        assert!(s.tag_send(b"c", 0, cf, &t[1]).is_none());
        let mut forged = a.clone();
        forged.mac.0[3] ^= 1;
        assert!(s.tag_send(b"c", 0, cf, &forged).is_none());
        assert!(s.tag_send(b"other", 0, cf, &a).is_none());
    }

    #[test]
    fn replay_conviction() {
        let (s, t) = setup(2);
        let a = s.tag_send(b"c", 0, Commitment([1; 32]), &t[0]).unwrap();
        let b = s.tag_send(b"c", 0, Commitment([2; 32]), &t[0]).unwrap();
        assert_eq!(s.judge_replay(&a, &b), Some(0));
        assert_eq!(s.judge_replay(&a, &a), None);
        let c = s.tag_send(b"c", 0, Commitment([2; 32]), &a).unwrap();
        assert_eq!(s.judge_replay(&a, &c), None);
        assert_eq!(s.judge_replay(&a, &t[1]), None);
        assert_eq!(s.judge_replay_with(&a, &c, Checks::without(crate::checks::Mutation::DropSumCheck)), Some(0));
    }
}
