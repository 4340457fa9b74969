//! Causality graphs over N parties.
//!
//! A vertex is identified within its party by `(t, cs, cr)`. The message is a
//! label carried alongside; `None` stands for a message-excluded or redacted
//! vertex.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::Party;

mod oracle;
mod validity;

pub use oracle::{brute_force_completion, enumerate_valid_graphs, ENUMERATION_LIMIT};

pub type Msg = Option<Vec<u8>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    S,
    R,
}

/// Vertex key. Ordered by local position `cs + cr` first.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct VId {
    pub t: Action,
    pub cs: u64,
    pub cr: u64,
}

impl VId {
    pub fn s(cs: u64, cr: u64) -> Self {
        VId { t: Action::S, cs, cr }
    }

    pub fn r(cs: u64, cr: u64) -> Self {
        VId { t: Action::R, cs, cr }
    }

    pub fn pos(&self) -> u64 {
        self.cs + self.cr
    }

    /// Counters just before this event.
    pub fn start(&self) -> (u64, u64) {
        match self.t {
            Action::S => (self.cs.saturating_sub(1), self.cr),
            Action::R => (self.cs, self.cr.saturating_sub(1)),
        }
    }

    fn well_formed(&self) -> bool {
        match self.t {
            Action::S => self.cs >= 1,
            Action::R => self.cr >= 1,
        }
    }
}

impl Ord for VId {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.pos(), self.cs, self.cr, self.t).cmp(&(o.pos(), o.cs, o.cr, o.t))
    }
}

impl PartialOrd for VId {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for VId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{},{})", self.t, self.cs, self.cr)
    }
}

/// A vertex together with the party that owns it.
pub type Node = (Party, VId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapReport {
    pub delta_cs: u64,
    pub delta_cr: u64,
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("need at least two parties, got {0}")]
    TooFewParties(usize),
    #[error("party {party} out of range for {n} parties")]
    BadParty { party: Party, n: usize },
    #[error("party {party} has no send with index {i}")]
    MissingSend { party: Party, i: u64 },
    #[error("send {i} of party {sender} already delivered to party {receiver}")]
    DuplicateDelivery { sender: Party, receiver: Party, i: u64 },
    #[error("party {0} cannot receive its own message")]
    SelfDelivery(Party),
    #[error("vertex {1:?} not found in party {0}")]
    VertexNotFound(Party, VId),
    #[error("vertex {0:?} does not come before {1:?}")]
    NotLocallyOrdered(VId, VId),
    #[error("malformed vertex {0:?}")]
    Malformed(VId),
    #[error("enumeration bound too large: {parties} parties, {events} events")]
    BoundTooLarge { parties: usize, events: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalityGraph {
    n: usize,
    parts: Vec<BTreeMap<VId, Msg>>,
    edges: BTreeSet<Edge>,
    ctrs: Vec<(u64, u64)>,
}

impl fmt::Debug for CausalityGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("CausalityGraph");
        for (p, part) in self.parts.iter().enumerate() {
            let vs: Vec<String> = part
                .iter()
                .map(|(k, m)| match m {
                    Some(m) => format!("{k:?}:{}", String::from_utf8_lossy(m)),
                    None => format!("{k:?}:_"),
                })
                .collect();
            d.field(&format!("V{p}"), &vs);
        }
        d.field("E", &self.edges).finish()
    }
}

impl CausalityGraph {
    pub fn new(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewParties(n));
        }
        Ok(CausalityGraph {
            n,
            parts: vec![BTreeMap::new(); n],
            edges: BTreeSet::new(),
            ctrs: vec![(0, 0); n],
        })
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn counters(&self, p: Party) -> (u64, u64) {
        self.ctrs[p]
    }

    pub fn all_counters(&self) -> &[(u64, u64)] {
        &self.ctrs
    }

    /// Vertices of party `p` in local order.
    pub fn vertices(&self, p: Party) -> impl Iterator<Item = (&VId, &Msg)> + '_ {
        self.parts[p].iter()
    }

    pub fn vertex(&self, p: Party, v: &VId) -> Option<&Msg> {
        self.parts.get(p)?.get(v)
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.parts.iter().map(|p| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0 && self.edges.is_empty()
    }

    fn check_party(&self, p: Party) -> Result<(), GraphError> {
        if p >= self.n {
            return Err(GraphError::BadParty { party: p, n: self.n });
        }
        Ok(())
    }

    pub fn add_send(&mut self, p: Party, m: Msg) -> Result<VId, GraphError> {
        self.check_party(p)?;
        let (cs, cr) = self.ctrs[p];
        let v = VId::s(cs + 1, cr);
        self.ctrs[p] = (cs + 1, cr);
        self.parts[p].insert(v, m);
        Ok(v)
    }

    /// Find the send of party `p` with send index `i`.
    pub fn send_with_index(&self, p: Party, i: u64) -> Option<VId> {
        self.parts
            .get(p)?
            .keys()
            .find(|v| v.t == Action::S && v.cs == i)
            .copied()
    }

    pub fn add_recv(&mut self, ps: Party, pr: Party, i: u64) -> Result<VId, GraphError> {
        self.check_party(ps)?;
        self.check_party(pr)?;
        if ps == pr {
            return Err(GraphError::SelfDelivery(pr));
        }
        let src = self
            .send_with_index(ps, i)
            .ok_or(GraphError::MissingSend { party: ps, i })?;
        if self.edges.iter().any(|e| e.from == (ps, src) && e.to.0 == pr) {
            return Err(GraphError::DuplicateDelivery { sender: ps, receiver: pr, i });
        }
        let m = self.parts[ps][&src].clone();
        let (cs, cr) = self.ctrs[pr];
        let v = VId::r(cs, cr + 1);
        self.ctrs[pr] = (cs, cr + 1);
        self.parts[pr].insert(v, m);
        self.edges.insert(Edge { from: (ps, src), to: (pr, v) });
        Ok(v)
    }

    /// Raw insertion used when assembling report graphs. Counters track the
    /// largest coordinates seen. Returns the message already stored under the
    /// key if one was there.
    pub fn insert_vertex(&mut self, p: Party, v: VId, m: Msg) -> Result<Option<Msg>, GraphError> {
        self.check_party(p)?;
        if !v.well_formed() {
            return Err(GraphError::Malformed(v));
        }
        let c = &mut self.ctrs[p];
        c.0 = c.0.max(v.cs);
        c.1 = c.1.max(v.cr);
        Ok(self.parts[p].insert(v, m))
    }

    pub fn insert_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        for (p, v) in [e.from, e.to] {
            self.check_party(p)?;
            if !self.parts[p].contains_key(&v) {
                return Err(GraphError::VertexNotFound(p, v));
            }
        }
        self.edges.insert(e);
        Ok(())
    }

    /// Remove a vertex and every edge touching it.
    pub fn remove_vertex(&mut self, p: Party, v: &VId) -> Option<Msg> {
        let m = self.parts.get_mut(p)?.remove(v)?;
        self.edges.retain(|e| e.from != (p, *v) && e.to != (p, *v));
        self.ctrs[p] = self.parts[p]
            .keys()
            .fold((0, 0), |(a, b), k| (a.max(k.cs), b.max(k.cr)));
        Some(m)
    }

    pub fn remove_edge(&mut self, e: &Edge) -> bool {
        self.edges.remove(e)
    }

    pub fn strip_messages(&self) -> CausalityGraph {
        let mut g = self.clone();
        for part in &mut g.parts {
            for m in part.values_mut() {
                *m = None;
            }
        }
        g
    }

    /// Replace the message on every vertex, e.g. to project a graph onto
    /// labels of interest.
    pub fn set_message(&mut self, p: Party, v: &VId, m: Msg) -> bool {
        match self.parts.get_mut(p).and_then(|part| part.get_mut(v)) {
            Some(slot) => {
                *slot = m;
                true
            }
            None => false,
        }
    }

    /// `self ⊆ other`: vertex keys and messages match exactly, edges contained.
    pub fn is_subgraph(&self, other: &CausalityGraph) -> bool {
        if self.n != other.n {
            return false;
        }
        let verts = self.parts.iter().zip(&other.parts).all(|(a, b)| {
            a.iter().all(|(k, m)| b.get(k) == Some(m))
        });
        verts && self.edges.is_subset(&other.edges)
    }

    fn successors(&self, (p, v): Node) -> Vec<Node> {
        let mut out = Vec::new();
        if let Some((next, _)) = self.parts[p]
            .range((std::ops::Bound::Excluded(v), std::ops::Bound::Unbounded))
            .next()
        {
            out.push((p, *next));
        }
        for e in self.edges.range(
            Edge { from: (p, v), to: (0, VId { t: Action::S, cs: 0, cr: 0 }) }..,
        ) {
            if e.from != (p, v) {
                break;
            }
            out.push(e.to);
        }
        out
    }

    fn require(&self, (p, v): Node) -> Result<(), GraphError> {
        self.check_party(p)?;
        if !self.parts[p].contains_key(&v) {
            return Err(GraphError::VertexNotFound(p, v));
        }
        Ok(())
    }

    /// Reflexive-transitive closure of local order and edges.
    pub fn happens_before(&self, a: Node, b: Node) -> Result<bool, GraphError> {
        self.require(a)?;
        self.require(b)?;
        let mut seen = BTreeSet::from([a]);
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                return Ok(true);
            }
            for y in self.successors(x) {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(false)
    }

    pub fn gap_between(&self, p: Party, v: &VId, w: &VId) -> Result<GapReport, GraphError> {
        self.require((p, *v))?;
        self.require((p, *w))?;
        if v.pos() >= w.pos() || v.cs > w.cs || v.cr > w.cr {
            return Err(GraphError::NotLocallyOrdered(*v, *w));
        }
        let delta_cs = w.cs - v.cs;
        let delta_cr = w.cr - v.cr;
        Ok(GapReport { delta_cs, delta_cr, contiguous: delta_cs + delta_cr == 1 })
    }

    pub fn is_valid_subgraph(&self) -> bool {
        validity::is_valid(self)
    }

    /// Union of two graphs. `None` when one key carries two different concrete
    /// messages.
    pub fn merge(&self, other: &CausalityGraph) -> Option<CausalityGraph> {
        if self.n != other.n {
            return None;
        }
        let mut g = self.clone();
        for (p, part) in other.parts.iter().enumerate() {
            for (k, m) in part {
                match g.parts[p].get_mut(k) {
                    Some(slot) => match (&*slot, m) {
                        (Some(a), Some(b)) if a != b => return None,
                        (None, Some(_)) => *slot = m.clone(),
                        _ => {}
                    },
                    None => {
                        g.insert_vertex(p, *k, m.clone()).ok()?;
                    }
                }
            }
        }
        g.edges.extend(other.edges.iter().copied());
        Some(g)
    }
}

pub fn are_consistent(a: &CausalityGraph, b: &CausalityGraph) -> bool {
    match a.merge(b) {
        Some(g) => g.is_valid_subgraph(),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Msg {
        Some(s.as_bytes().to_vec())
    }

    /// Alice = 0, Bob = 1, four messages, fully sequential.
    pub(crate) fn two_party_example() -> CausalityGraph {
        let mut g = CausalityGraph::new(2).unwrap();
        g.add_send(0, m("m1")).unwrap();
        g.add_recv(0, 1, 1).unwrap();
        g.add_send(0, m("m2")).unwrap();
        g.add_recv(0, 1, 2).unwrap();
        g.add_send(1, m("m3")).unwrap();
        g.add_recv(1, 0, 1).unwrap();
        g.add_send(0, m("m4")).unwrap();
        g.add_recv(0, 1, 3).unwrap();
        g
    }

    #[test]
    fn new_graph() {
        let g = CausalityGraph::new(2).unwrap();
        assert_eq!(g.all_counters(), &[(0, 0), (0, 0)]);
        assert_eq!(CausalityGraph::new(3).unwrap().parties(), 3);
        assert_eq!(CausalityGraph::new(1), Err(GraphError::TooFewParties(1)));
    }

    #[test]
    fn example_vertices() {
        let g = two_party_example();
        let alice: Vec<_> = g.vertices(0).map(|(k, m)| (*k, m.clone())).collect();
        assert_eq!(
            alice,
            vec![
                (VId::s(1, 0), m("m1")),
                (VId::s(2, 0), m("m2")),
                (VId::r(2, 1), m("m3")),
                (VId::s(3, 1), m("m4")),
            ]
        );
        let bob: Vec<_> = g.vertices(1).map(|(k, m)| (*k, m.clone())).collect();
        assert_eq!(
            bob,
            vec![
                (VId::r(0, 1), m("m1")),
                (VId::r(0, 2), m("m2")),
                (VId::s(1, 2), m("m3")),
                (VId::r(1, 3), m("m4")),
            ]
        );
        assert_eq!(g.edges().len(), 4);
        assert!(g.is_valid_subgraph());
    }

    #[test]
    fn recv_errors() {
        let mut g = CausalityGraph::new(2).unwrap();
        assert_eq!(g.add_recv(0, 1, 1), Err(GraphError::MissingSend { party: 0, i: 1 }));
        g.add_send(0, None).unwrap();
        g.add_recv(0, 1, 1).unwrap();
        assert!(matches!(g.add_recv(0, 1, 1), Err(GraphError::DuplicateDelivery { .. })));
        assert_eq!(g.add_recv(0, 0, 1), Err(GraphError::SelfDelivery(0)));
        assert!(g.add_send(2, None).is_err());
    }

    #[test]
    fn strip_is_projection() {
        let g = two_party_example();
        let s = g.strip_messages();
        assert_eq!(s.all_counters(), g.all_counters());
        assert!(s.vertices(0).all(|(_, m)| m.is_none()));
        assert_eq!(s.strip_messages(), s);
        let e = CausalityGraph::new(2).unwrap();
        assert_eq!(e.strip_messages(), e);
    }

    #[test]
    fn subgraphs() {
        let g = two_party_example();
        assert!(CausalityGraph::new(2).unwrap().is_subgraph(&g));
        let mut one = CausalityGraph::new(2).unwrap();
        one.insert_vertex(0, VId::s(1, 0), m("m1")).unwrap();
        one.insert_vertex(1, VId::r(0, 1), m("m1")).unwrap();
        one.insert_edge(Edge { from: (0, VId::s(1, 0)), to: (1, VId::r(0, 1)) }).unwrap();
        assert!(one.is_subgraph(&g));
        let mut off = CausalityGraph::new(2).unwrap();
        off.insert_vertex(1, VId::r(0, 2), m("m1")).unwrap();
        assert!(!off.is_subgraph(&g));
        // a message-excluded vertex only matches a message-excluded one
        let mut bare = CausalityGraph::new(2).unwrap();
        bare.insert_vertex(0, VId::s(1, 0), None).unwrap();
        assert!(!bare.is_subgraph(&g));
        assert!(bare.is_subgraph(&g.strip_messages()));
    }

    #[test]
    fn ordering() {
        let g = two_party_example();
        assert!(g.happens_before((0, VId::s(1, 0)), (1, VId::r(0, 1))).unwrap());
        assert!(g.happens_before((0, VId::s(1, 0)), (1, VId::s(1, 2))).unwrap());
        // Bob sends m3 before m2 reaches him, so the two sends are concurrent
        let mut g = CausalityGraph::new(2).unwrap();
        g.add_send(0, m("m1")).unwrap();
        g.add_recv(0, 1, 1).unwrap();
        g.add_send(0, m("m2")).unwrap();
        g.add_send(1, m("m3")).unwrap();
        g.add_recv(1, 0, 1).unwrap();
        g.add_recv(0, 1, 2).unwrap();
        let a = (0, VId::s(2, 0));
        let b = (1, VId::s(1, 1));
        assert!(g.is_valid_subgraph());
        assert!(!g.happens_before(a, b).unwrap());
        assert!(!g.happens_before(b, a).unwrap());
        assert!(g.happens_before((0, VId::s(9, 9)), a).is_err());
    }

    #[test]
    fn gaps() {
        let g = two_party_example();
        let r = g.gap_between(0, &VId::s(1, 0), &VId::s(2, 0)).unwrap();
        assert_eq!(r, GapReport { delta_cs: 1, delta_cr: 0, contiguous: true });
        let r = g.gap_between(0, &VId::s(1, 0), &VId::s(3, 1)).unwrap();
        assert_eq!(r, GapReport { delta_cs: 2, delta_cr: 1, contiguous: false });
        let r = g.gap_between(0, &VId::s(2, 0), &VId::r(2, 1)).unwrap();
        assert_eq!(r, GapReport { delta_cs: 0, delta_cr: 1, contiguous: true });
        // one step on each counter still hides an event
        let r = g.gap_between(1, &VId::r(0, 1), &VId::s(1, 2)).unwrap();
        assert_eq!(r, GapReport { delta_cs: 1, delta_cr: 1, contiguous: false });
        assert!(g.gap_between(0, &VId::s(2, 0), &VId::s(1, 0)).is_err());
    }

    #[test]
    fn validity_examples() {
        let mut g = CausalityGraph::new(2).unwrap();
        g.insert_vertex(0, VId::s(1, 0), None).unwrap();
        g.insert_vertex(0, VId::s(1, 1), None).unwrap();
        assert!(!g.is_valid_subgraph());
        let mut g = CausalityGraph::new(2).unwrap();
        g.insert_vertex(0, VId::s(2, 1), None).unwrap();
        g.insert_vertex(0, VId::r(1, 2), None).unwrap();
        assert!(!g.is_valid_subgraph());
    }

    #[test]
    fn consistency_examples() {
        let g = two_party_example();
        assert!(are_consistent(&g, &g));
        // a report of m1 from Alice and one of m3 from Bob
        let mut a = CausalityGraph::new(2).unwrap();
        a.insert_vertex(0, VId::s(1, 0), m("m1")).unwrap();
        a.insert_vertex(1, VId::r(0, 1), m("m1")).unwrap();
        a.insert_edge(Edge { from: (0, VId::s(1, 0)), to: (1, VId::r(0, 1)) }).unwrap();
        let mut b = CausalityGraph::new(2).unwrap();
        b.insert_vertex(1, VId::s(1, 2), m("m3")).unwrap();
        b.insert_vertex(0, VId::r(2, 1), m("m3")).unwrap();
        b.insert_edge(Edge { from: (1, VId::s(1, 2)), to: (0, VId::r(2, 1)) }).unwrap();
        assert!(are_consistent(&a, &b));
        let mut x = CausalityGraph::new(2).unwrap();
        x.insert_vertex(0, VId::s(1, 0), m("a")).unwrap();
        let mut y = CausalityGraph::new(2).unwrap();
        y.insert_vertex(0, VId::s(1, 0), m("b")).unwrap();
        assert!(!are_consistent(&x, &y));
        // a redacted vertex unifies with a concrete one
        let mut z = CausalityGraph::new(2).unwrap();
        z.insert_vertex(0, VId::s(1, 0), None).unwrap();
        assert!(are_consistent(&x, &z));
    }
}
