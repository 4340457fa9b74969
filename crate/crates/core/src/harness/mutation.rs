//! Runs the adversary suites against each weakened configuration and
//! reports which drivers win.

use super::framing::{game_replay_framing, FrDriver};
use super::integrity::{game_integrity, IntDriver, SUITE_VARIANTS};
use crate::checks::{Checks, Mutation};

/// Names of the drivers that won at least once against `m`, as
/// `game/driver@variant`.
pub fn killers(m: Mutation, seeds: u64) -> Vec<String> {
    let ck = Checks::without(m);
    let mut out = Vec::new();
    for v in SUITE_VARIANTS {
        for d in IntDriver::ALL {
            if (0..seeds).any(|s| game_integrity(v, d, s, ck).win) {
                out.push(format!("integrity/{}@{}", d.name(), v.name()));
            }
        }
    }
    for n in [2, 3] {
        for d in FrDriver::ALL {
            if (0..seeds).any(|s| game_replay_framing(n, d, s, ck).win) {
                out.push(format!("framing/{}@outsourced-{n}", d.name()));
            }
        }
    }
    out
}
