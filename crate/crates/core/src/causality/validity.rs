//! Deciding whether a graph extends to one built from the empty graph.
//!
//! Structural checks come first. The remaining question is whether the gaps
//! between pinned vertices can be filled with unpinned events so that every
//! reception has a source. Filling is monotone: a send never disables
//! anything, and a reception only consumes from its own party's pool, so
//! running any enabled event whenever one exists finds a schedule if one
//! exists at all.

use std::collections::{BTreeMap, BTreeSet};

use super::{Action, CausalityGraph, Edge, Node, VId};
use crate::Party;

pub(super) fn is_valid(g: &CausalityGraph) -> bool {
    staircase_ok(g) && edges_ok(g) && acyclic(g) && schedulable(g)
}

fn staircase_ok(g: &CausalityGraph) -> bool {
    for part in &g.parts {
        let mut cur = (0u64, 0u64);
        let mut last_pos = None;
        for v in part.keys() {
            if !v.well_formed() {
                return false;
            }
            if last_pos == Some(v.pos()) {
                return false;
            }
            let (sc, sr) = v.start();
            if sc < cur.0 || sr < cur.1 {
                return false;
            }
            cur = (v.cs, v.cr);
            last_pos = Some(v.pos());
        }
    }
    true
}

fn edges_ok(g: &CausalityGraph) -> bool {
    let mut per_receiver = BTreeSet::new();
    let mut inbound = BTreeSet::new();
    for e in &g.edges {
        let (ps, s) = e.from;
        let (pr, r) = e.to;
        if ps == pr || ps >= g.n || pr >= g.n || s.t != Action::S || r.t != Action::R {
            return false;
        }
        let (Some(ms), Some(mr)) = (g.parts[ps].get(&s), g.parts[pr].get(&r)) else {
            return false;
        };
        if let (Some(a), Some(b)) = (ms, mr) {
            if a != b {
                return false;
            }
        }
        if !per_receiver.insert((e.from, pr)) || !inbound.insert(e.to) {
            return false;
        }
    }
    true
}

fn acyclic(g: &CausalityGraph) -> bool {
    let mut indeg: BTreeMap<Node, usize> = BTreeMap::new();
    let mut succ: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
    for (p, part) in g.parts.iter().enumerate() {
        let keys: Vec<&VId> = part.keys().collect();
        for k in &keys {
            indeg.entry((p, **k)).or_insert(0);
        }
        for w in keys.windows(2) {
            succ.entry((p, *w[0])).or_default().push((p, *w[1]));
            *indeg.get_mut(&(p, *w[1])).unwrap() += 1;
        }
    }
    for e in &g.edges {
        succ.entry(e.from).or_default().push(e.to);
        *indeg.entry(e.to).or_insert(0) += 1;
    }
    let mut ready: Vec<Node> = indeg.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut done = 0;
    while let Some(x) = ready.pop() {
        done += 1;
        for y in succ.get(&x).into_iter().flatten() {
            let d = indeg.get_mut(y).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(*y);
            }
        }
    }
    done == indeg.len()
}

enum Step {
    /// Unpinned events in front of the next pinned vertex: sends then receptions.
    Fill { sends: u64, recvs: u64 },
    Send(VId),
    Recv { src: Option<Node> },
}

fn plan(g: &CausalityGraph, inbound: &BTreeMap<Node, Node>) -> Vec<Vec<Step>> {
    let mut plans = Vec::with_capacity(g.n);
    for (p, part) in g.parts.iter().enumerate() {
        let mut steps = Vec::new();
        let mut cur = (0u64, 0u64);
        for v in part.keys() {
            let (sc, sr) = v.start();
            if sc > cur.0 || sr > cur.1 {
                steps.push(Step::Fill { sends: sc - cur.0, recvs: sr - cur.1 });
            }
            steps.push(match v.t {
                Action::S => Step::Send(*v),
                Action::R => Step::Recv { src: inbound.get(&(p, *v)).copied() },
            });
            cur = (v.cs, v.cr);
        }
        plans.push(steps);
    }
    plans
}

fn schedulable(g: &CausalityGraph) -> bool {
    let n = g.n;
    let inbound: BTreeMap<Node, Node> = g.edges.iter().map(|e| (e.to, e.from)).collect();
    let mut reserved: BTreeMap<Node, BTreeSet<Party>> = BTreeMap::new();
    for Edge { from, to } in &g.edges {
        reserved.entry(*from).or_default().insert(to.0);
    }
    let plans = plan(g, &inbound);
    let mut idx = vec![0usize; n];
    // receptions still owed inside the current Fill step
    let mut owed: Vec<Option<u64>> = vec![None; n];
    // unreserved sends by other parties not yet consumed, per receiver
    let mut pool = vec![0u64; n];
    let mut sent: BTreeSet<Node> = BTreeSet::new();

    loop {
        let mut progress = false;
        for p in 0..n {
            while idx[p] < plans[p].len() {
                let free_source = (0..n).any(|q| q != p && idx[q] == plans[q].len());
                let advanced = match &plans[p][idx[p]] {
                    Step::Fill { sends, recvs } => {
                        let left = match owed[p] {
                            Some(l) => l,
                            None => {
                                for (q, slot) in pool.iter_mut().enumerate() {
                                    if q != p {
                                        *slot += sends;
                                    }
                                }
                                *recvs
                            }
                        };
                        let take = if free_source { left } else { left.min(pool[p]) };
                        if !free_source {
                            pool[p] -= take;
                        }
                        if take == left {
                            owed[p] = None;
                            true
                        } else {
                            if take > 0 || owed[p].is_none() {
                                progress = true;
                            }
                            owed[p] = Some(left - take);
                            false
                        }
                    }
                    Step::Send(v) => {
                        let res = reserved.get(&(p, *v));
                        for (q, slot) in pool.iter_mut().enumerate() {
                            if q != p && !res.is_some_and(|r| r.contains(&q)) {
                                *slot += 1;
                            }
                        }
                        sent.insert((p, *v));
                        true
                    }
                    Step::Recv { src: Some(s) } => sent.contains(s),
                    Step::Recv { src: None } => {
                        if free_source {
                            true
                        } else if pool[p] > 0 {
                            pool[p] -= 1;
                            true
                        } else {
                            false
                        }
                    }
                };
                if !advanced {
                    break;
                }
                idx[p] += 1;
                progress = true;
            }
        }
        if (0..n).all(|p| idx[p] == plans[p].len()) {
            return true;
        }
        if !progress {
            return false;
        }
    }
}
