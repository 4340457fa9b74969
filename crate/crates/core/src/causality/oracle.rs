//! Brute-force reference: graphs reachable from the empty graph by explicit
//! construction steps. Slow on purpose; shares nothing with the validity
//! decider beyond the construction operations themselves.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{Action, CausalityGraph, GraphError, Node, VId};
use crate::Party;

/// Largest number of events `enumerate_valid_graphs` will walk.
pub const ENUMERATION_LIMIT: usize = 8;
const PARTY_LIMIT: usize = 4;

enum Op {
    Send(Party),
    Recv(Party, Party, u64),
}

fn legal_ops(g: &CausalityGraph) -> Vec<Op> {
    let n = g.parties();
    let mut ops: Vec<Op> = (0..n).map(Op::Send).collect();
    for ps in 0..n {
        for (v, _) in g.vertices(ps) {
            if v.t != Action::S {
                continue;
            }
            for pr in 0..n {
                if pr == ps {
                    continue;
                }
                let delivered = g.edges().iter().any(|e| e.from == (ps, *v) && e.to.0 == pr);
                if !delivered {
                    ops.push(Op::Recv(ps, pr, v.cs));
                }
            }
        }
    }
    ops
}

fn apply(g: &CausalityGraph, op: &Op) -> (CausalityGraph, Party, VId) {
    let mut h = g.clone();
    match *op {
        Op::Send(p) => {
            let v = h.add_send(p, None).expect("legal send");
            (h, p, v)
        }
        Op::Recv(ps, pr, i) => {
            let v = h.add_recv(ps, pr, i).expect("legal reception");
            (h, pr, v)
        }
    }
}

/// Every graph reachable with at most `max_events` operations, messages
/// excluded.
pub fn enumerate_valid_graphs(
    n: usize,
    max_events: usize,
) -> Result<Vec<CausalityGraph>, GraphError> {
    if max_events > ENUMERATION_LIMIT || n > PARTY_LIMIT {
        return Err(GraphError::BoundTooLarge { parties: n, events: max_events });
    }
    let start = CausalityGraph::new(n)?;
    let mut all = BTreeSet::from([start.clone()]);
    let mut frontier = vec![start];
    for _ in 0..max_events {
        let mut next = Vec::new();
        for g in &frontier {
            for op in legal_ops(g) {
                let (h, _, _) = apply(g, &op);
                if all.insert(h.clone()) {
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    Ok(all.into_iter().collect())
}

struct Target {
    shape: CausalityGraph,
    pinned: Vec<BTreeMap<u64, VId>>,
    max_pos: Vec<u64>,
    inbound: BTreeMap<Node, Node>,
    reserved: BTreeMap<(Node, Party), VId>,
    bound: usize,
}

impl Target {
    fn new(target: &CausalityGraph) -> Self {
        let shape = target.strip_messages();
        let n = shape.parties();
        let mut pinned = vec![BTreeMap::new(); n];
        let mut max_pos = vec![0; n];
        let mut bound = 0u64;
        for (p, slot) in pinned.iter_mut().enumerate() {
            let mut max_cr = 0;
            for (v, _) in shape.vertices(p) {
                slot.insert(v.pos(), *v);
                max_pos[p] = max_pos[p].max(v.pos());
                max_cr = max_cr.max(v.cr);
            }
            bound += max_pos[p] + max_cr;
        }
        let inbound = shape.edges().iter().map(|e| (e.to, e.from)).collect();
        let reserved = shape.edges().iter().map(|e| ((e.from, e.to.0), e.to.1)).collect();
        Target { shape, pinned, max_pos, inbound, reserved, bound: bound as usize }
    }

    fn admits(&self, op: &Op, g: &CausalityGraph, p: Party, v: &VId) -> bool {
        if v.pos() > self.max_pos[p] {
            // past a party's last pinned vertex only extra sends can matter
            return v.t == Action::S;
        }
        if let Some(w) = self.pinned[p].get(&v.pos()) {
            if w != v {
                return false;
            }
        }
        if let Op::Recv(ps, pr, i) = *op {
            let src = (ps, g.send_with_index(ps, i).expect("source exists"));
            if let Some(want) = self.inbound.get(&(pr, *v)) {
                return *want == src;
            }
            if let Some(r) = self.reserved.get(&(src, pr)) {
                return r == v;
            }
        }
        true
    }
}

fn search(
    t: &Target,
    g: &CausalityGraph,
    depth: usize,
    seen: &mut HashSet<CausalityGraph>,
) -> Option<CausalityGraph> {
    if t.shape.is_subgraph(g) {
        return Some(g.clone());
    }
    if depth == t.bound {
        return None;
    }
    for op in legal_ops(g) {
        let (h, p, v) = apply(g, &op);
        if !t.admits(&op, g, p, &v) || !seen.insert(h.clone()) {
            continue;
        }
        if let Some(w) = search(t, &h, depth + 1, seen) {
            return Some(w);
        }
    }
    None
}

/// Search construction sequences for a graph containing the message-stripped
/// `target`. The search depth is bounded by each party's last pinned position
/// plus one extra send per reception, which is always enough.
pub fn brute_force_completion(target: &CausalityGraph) -> Option<CausalityGraph> {
    let t = Target::new(target);
    // a built party holds exactly one vertex per position
    let pinned: usize = t.pinned.iter().map(BTreeMap::len).sum();
    if pinned != t.shape.vertex_count() {
        return None;
    }
    let start = CausalityGraph::new(target.parties()).ok()?;
    let mut seen = HashSet::from([start.clone()]);
    search(&t, &start, 0, &mut seen)
}
