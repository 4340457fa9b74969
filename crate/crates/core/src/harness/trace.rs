//! Random honest schedules: who sends what, and which copy arrives when.

use rand::Rng;

use crate::Party;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOp {
    Send { from: Party, msg: Vec<u8> },
    /// Deliver the `send`-th send of the trace (0-based) to `to`.
    Deliver { send: usize, to: Party },
}

/// A schedule of at most `events` operations over `n` parties. Deliveries
/// happen in arbitrary order and some copies are never delivered.
pub fn random_trace<R: Rng>(rng: &mut R, n: usize, events: usize) -> Vec<TraceOp> {
    let mut ops = Vec::with_capacity(events);
    let mut pending: Vec<(usize, Party)> = Vec::new();
    let mut sends = 0;
    for _ in 0..events {
        if pending.is_empty() || rng.gen_bool(0.45) {
            let from = rng.gen_range(0..n);
            let len = rng.gen_range(0..24);
            let msg = (0..len).map(|_| rng.gen_range(b'a'..=b'z')).collect();
            ops.push(TraceOp::Send { from, msg });
            pending.extend((0..n).filter(|&q| q != from).map(|q| (sends, q)));
            sends += 1;
        } else {
            let k = rng.gen_range(0..pending.len());
            let (send, to) = pending.swap_remove(k);
            ops.push(TraceOp::Deliver { send, to });
        }
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::seeded;

    #[test]
    fn deliveries_follow_their_send() {
        let mut rng = seeded(3);
        for n in 2..5 {
            let t = random_trace(&mut rng, n, 60);
            let mut senders = Vec::new();
            for op in &t {
                match op {
                    TraceOp::Send { from, .. } => senders.push(*from),
                    TraceOp::Deliver { send, to } => {
                        assert!(*send < senders.len());
                        assert_ne!(senders[*send], *to);
                    }
                }
            }
        }
    }
}
