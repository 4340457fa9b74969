//! Outsourced storage against its stateful twin, and the replay judge on
//! deliberate predecessor reuse.

use rand::Rng;

use super::correctness::{play_trace, CorrectnessGame};
use super::framing::{game_replay_framing, FrDriver};
use super::trace::random_trace;
use super::{seeded, Variant};
use crate::checks::Checks;
use crate::crypto::{Commitment, LAMBDA};
use crate::outsourced::OutServerState;

/// Plays one random trace through a stateful and an outsourced game and
/// compares what the two judges make of every delivered entry.
pub fn outsourced_equivalence(n: usize, seed: u64, events: usize) -> bool {
    let mut rng = seeded(seed);
    let trace = random_trace(&mut rng, n, events);
    let mut k_ch = [0u8; LAMBDA];
    rng.fill(&mut k_ch);
    let run = |v: Variant| {
        let mut game = CorrectnessGame::new(v, seed, k_ch, Checks::ALL);
        let got = play_trace(&mut game, &trace, &mut seeded(seed ^ 0xE0), 0.0);
        let judged = if got.is_empty() { None } else { game.judge(&got) };
        let halves = got.chunks(3).map(|c| game.judge(c)).collect::<Vec<_>>();
        (judged, halves, game.truth().clone(), game.outcome().win)
    };
    let a = run(Variant::stateful(n));
    let b = run(Variant::Outsourced(n));
    !a.3 && !b.3 && a == b
}

/// A party's chain forked at a random point: the same predecessor used for
/// two different tagging requests. True if the judge names that party.
pub fn replay_reuse_convicted(n: usize, seed: u64) -> bool {
    let mut rng = seeded(seed);
    let cid = b"conversation";
    let (srv, mut chains) = OutServerState::init(&mut rng, n, cid).expect("n >= 2");
    let mut c_f = || {
        let mut c = [0u8; LAMBDA];
        rng.fill(&mut c);
        Commitment(c)
    };
    let mut steps: usize = seed as usize % 7;
    let mut p = 0;
    while steps > 0 {
        p = (p + 1) % n;
        let q = (p + 1) % n;
        chains[p] = srv.tag_send(cid, p, c_f(), &chains[p]).expect("honest");
        chains[q] = srv.tag_recv(cid, q, p, c_f(), &chains[q]).expect("honest");
        steps -= 1;
    }
    let victim = seed as usize % n;
    let stale = chains[victim].clone();
    let a = srv.tag_send(cid, victim, c_f(), &stale).expect("honest");
    let b = if seed % 2 == 0 {
        srv.tag_send(cid, victim, c_f(), &stale)
    } else {
        srv.tag_recv(cid, victim, (victim + 1) % n, c_f(), &stale)
    }
    .expect("honest");
    a != b && srv.judge_replay(&a, &b) == Some(victim) && srv.judge_replay(&b, &a) == Some(victim)
}

/// Framing wins over `seeds`, cycling drivers and group sizes.
pub fn framing_sweep(seeds: std::ops::Range<u64>, ck: Checks) -> usize {
    seeds
        .map(|s| {
            let d = FrDriver::ALL[(s % 3) as usize];
            game_replay_framing(2 + (s as usize / 3) % 3, d, s, ck).win as usize
        })
        .sum()
}
