//! Short sweeps of every game, spread over worker threads by seed.

use std::thread;

use serde::Serialize;
use tfrank::checks::Checks;
use tfrank::harness::confidentiality::{advantage, ChannelFlavor, FirstByte, LengthOnly, ReuseProbe};
use tfrank::harness::correctness::{game_correctness, RandomHonest};
use tfrank::harness::framing::{game_replay_framing, FrDriver};
use tfrank::harness::integrity::{game_integrity, IntDriver, SUITE_VARIANTS};
use tfrank::harness::outsourced::outsourced_equivalence;
use tfrank::harness::reportability::{game_reportability, RepDriver};
use tfrank::harness::{run_attack_demo, Outcome, Variant};

#[derive(Debug, Serialize)]
pub struct GameLine {
    pub game: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn variant_for(seed: u64) -> Variant {
    match seed % 4 {
        0 => Variant::TwoParty,
        1 => Variant::Group(3),
        2 => Variant::Group(4),
        _ => Variant::Outsourced(2 + (seed / 4 % 3) as usize),
    }
}

/// Sums `f(seed)` over `0..seeds` as (runs, wins).
fn sweep<F>(seeds: u64, f: F) -> (usize, usize)
where
    F: Fn(u64) -> Vec<Outcome> + Sync,
{
    let workers = thread::available_parallelism().map_or(1, |n| n.get()) as u64;
    let f = &f;
    thread::scope(|s| {
        let hs: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    let mut acc = (0, 0);
                    for seed in (w..seeds).step_by(workers as usize) {
                        for o in f(seed) {
                            acc.0 += 1;
                            acc.1 += o.win as usize;
                        }
                    }
                    acc
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().expect("game panicked")).fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    })
}

fn line(game: &'static str, (runs, wins): (usize, usize)) -> GameLine {
    GameLine { game, pass: wins == 0, detail: format!("{runs} runs, {wins} wins") }
}

pub fn run_all(seeds: u64) -> Vec<GameLine> {
    let mut out = Vec::new();
    out.push(line(
        "correctness",
        sweep(seeds, |s| {
            vec![game_correctness(variant_for(s), &mut RandomHonest { events: 40 }, s, Checks::ALL)]
        }),
    ));
    out.push(line(
        "reportability",
        sweep(seeds, |s| RepDriver::ALL.iter().map(|d| game_reportability(variant_for(s), *d, s, 40)).collect()),
    ));
    out.push(line(
        "integrity",
        sweep(seeds, |s| {
            let mut v = Vec::new();
            for var in SUITE_VARIANTS {
                for d in IntDriver::ALL {
                    v.push(game_integrity(var, d, s, Checks::ALL));
                }
            }
            v
        }),
    ));
    out.push(line(
        "replay-framing",
        sweep(seeds, |s| FrDriver::ALL.iter().map(|d| game_replay_framing(2 + (s % 3) as usize, *d, s, Checks::ALL)).collect()),
    ));
    let diffs = sweep(seeds, |s| {
        vec![Outcome { win: !outsourced_equivalence(2 + (s % 3) as usize, s, 40), ..Outcome::default() }]
    });
    out.push(GameLine {
        game: "outsourced-equivalence",
        pass: diffs.1 == 0,
        detail: format!("{} traces, {} judged differently", diffs.0, diffs.1),
    });
    let trials = seeds.max(100) * 5;
    let adv = [
        advantage(ChannelFlavor::Reference, &LengthOnly, trials, 1),
        advantage(ChannelFlavor::Reference, &FirstByte, trials, 2),
        advantage(ChannelFlavor::KeystreamReuse, &ReuseProbe, trials, 3),
    ];
    out.push(GameLine {
        game: "confidentiality",
        pass: adv[0] < 0.05 && adv[1] < 0.05 && adv[2] > 0.9,
        detail: format!("length {:.4}, first byte {:.4}, reuse mutant {:.4}", adv[0], adv[1], adv[2]),
    });
    let v = run_attack_demo();
    out.push(GameLine {
        game: "attack-demo",
        pass: v.baseline_win && !v.qcc_win,
        detail: format!("baseline_win={} qcc_win={}", v.baseline_win, v.qcc_win),
    });
    out
}
