//! Replay framing against the outsourced server. The game keeps every party's
//! chain honestly; the adversary picks what gets tagged and then hunts for a
//! pair of tags the replay judge will pin on someone.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{seeded, Mirror, Outcome};
use crate::ack::ServerTag;
use crate::checks::Checks;
use crate::crypto::{Commitment, LAMBDA};
use crate::outsourced::OutServerState;
use crate::Party;

pub struct FramingGame {
    ck: Checks,
    cid: Vec<u8>,
    srv: OutServerState,
    chains: Vec<ServerTag>,
    counts: Vec<(u64, u64)>,
    r_t: HashSet<(Party, Commitment, ServerTag)>,
    r: HashSet<(Party, Commitment, ServerTag)>,
    mirror: Mirror,
    win: bool,
    calls: usize,
}

impl FramingGame {
    pub fn new(n: usize, seed: u64, ck: Checks) -> Self {
        let mut rng = seeded(seed);
        let cid = b"conversation".to_vec();
        let (srv, chains) = OutServerState::init(&mut rng, n, &cid).expect("n >= 2");
        FramingGame {
            ck,
            cid,
            srv,
            chains,
            counts: vec![(0, 0); n],
            r_t: HashSet::new(),
            r: HashSet::new(),
            mirror: Mirror::new(ck),
            win: false,
            calls: 0,
        }
    }

    pub fn parties(&self) -> usize {
        self.chains.len()
    }

    /// The chains start from these; the adversary may use them in reports.
    pub fn init_tags(&self) -> Vec<ServerTag> {
        self.srv.init_tags(&self.cid)
    }

    fn audit(&mut self, p: Party) {
        let t = &self.chains[p].ack;
        let ok = (t.cs, t.cr) == self.counts[p];
        let want = self.counts[p];
        self.mirror.check(ok, || format!("party {p} holds {:?}, expected {want:?}", (t.cs, t.cr)));
    }

    pub fn send_tag(&mut self, p: Party, c_f: Commitment) -> Option<ServerTag> {
        self.calls += 1;
        if p >= self.parties() {
            return None;
        }
        let t = self.srv.tag_send_with(&self.cid, p, c_f, &self.chains[p], self.ck)?;
        self.chains[p] = t.clone();
        self.counts[p].0 += 1;
        self.r_t.insert((p, c_f, t.clone()));
        self.audit(p);
        Some(t)
    }

    /// Uses the stored chain of `p_r`; the adversary cannot pass its own.
    pub fn recv_tag(&mut self, p_r: Party, p_s: Party, c_f: Commitment, t_s: &ServerTag) -> Option<ServerTag> {
        self.calls += 1;
        if p_r >= self.parties() || p_r == p_s || !self.r_t.contains(&(p_s, c_f, t_s.clone())) {
            return None;
        }
        if !self.r.insert((p_r, c_f, t_s.clone())) {
            return None;
        }
        let t = self.srv.tag_recv_with(&self.cid, p_r, p_s, c_f, &self.chains[p_r], self.ck)?;
        self.chains[p_r] = t.clone();
        self.counts[p_r].1 += 1;
        self.audit(p_r);
        Some(t)
    }

    pub fn rep_replay(&mut self, t: &ServerTag, u: &ServerTag) {
        self.calls += 1;
        if self.srv.judge_replay_with(t, u, self.ck).is_some() {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrDriver {
    /// Every pair of honestly issued tags, identical ones included.
    HonestPairs,
    /// Edited counters or MAC bits, paired with honest tags.
    BitFlip,
    /// Tags of different parties with equal counter sums.
    CrossParty,
}

impl FrDriver {
    pub const ALL: [FrDriver; 3] = [FrDriver::HonestPairs, FrDriver::BitFlip, FrDriver::CrossParty];

    pub fn name(self) -> &'static str {
        match self {
            FrDriver::HonestPairs => "honest-pairs",
            FrDriver::BitFlip => "bit-flip",
            FrDriver::CrossParty => "cross-party",
        }
    }

    pub fn run(self, game: &mut FramingGame, rng: &mut ChaCha20Rng) {
        let n = game.parties();
        let mut tags = game.init_tags();
        let mut sent: Vec<(Party, Commitment, ServerTag)> = Vec::new();
        for _ in 0..rng.gen_range(4..24) {
            if sent.is_empty() || rng.gen_bool(0.5) {
                let p = rng.gen_range(0..n);
                let mut c = [0u8; LAMBDA];
                rng.fill(&mut c);
                if let Some(t) = game.send_tag(p, Commitment(c)) {
                    sent.push((p, Commitment(c), t.clone()));
                    tags.push(t);
                }
            } else {
                let (p_s, c_f, t_s) = sent.choose(rng).expect("non-empty").clone();
                let p_r = rng.gen_range(0..n);
                if let Some(t) = game.recv_tag(p_r, p_s, c_f, &t_s) {
                    tags.push(t);
                }
            }
        }
        match self {
            FrDriver::HonestPairs => {
                for a in &tags {
                    for b in &tags {
                        game.rep_replay(a, b);
                    }
                }
            }
            FrDriver::BitFlip => {
                for _ in 0..16 {
                    let a = tags.choose(rng).expect("init tags exist");
                    let mut f = a.clone();
                    match rng.gen_range(0..3) {
                        // same sum, different ack
                        0 if f.ack.cs > 0 => {
                            f.ack.cs -= 1;
                            f.ack.cr += 1;
                        }
                        1 => f.mac.0[rng.gen_range(0..LAMBDA)] ^= 1 << rng.gen_range(0..8),
                        _ => f.ack.c_f = Some(Commitment([rng.gen(); LAMBDA])),
                    }
                    for b in &tags {
                        game.rep_replay(&f, b);
                        game.rep_replay(b, &f);
                    }
                }
            }
            FrDriver::CrossParty => {
                for a in &tags {
                    for b in tags.iter().filter(|b| b.ack.owner() != a.ack.owner()) {
                        if a.ack.cs + a.ack.cr == b.ack.cs + b.ack.cr {
                            game.rep_replay(a, b);
                        }
                    }
                }
            }
        }
    }
}

pub fn game_replay_framing(n: usize, driver: FrDriver, seed: u64, ck: Checks) -> Outcome {
    let mut game = FramingGame::new(n, seed, ck);
    let mut rng = seeded(seed ^ 0xF4);
    driver.run(&mut game, &mut rng);
    game.outcome()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::Mutation;

    #[test]
    fn honest_chains_are_never_convicted() {
        for seed in 0..40 {
            for d in FrDriver::ALL {
                let out = game_replay_framing(2 + (seed as usize % 3), d, seed, Checks::ALL);
                assert!(!out.win, "{} seed {seed}", d.name());
            }
        }
    }

    #[test]
    fn dropping_the_sum_check_frames_honest_parties() {
        let ck = Checks::without(Mutation::DropSumCheck);
        assert!((0..8).any(|s| game_replay_framing(2, FrDriver::HonestPairs, s, ck).win));
    }
}
