//! Security games as executable code, with scripted adversaries.
//!
//! Each game owns its server, its ground-truth graph and the bookkeeping sets;
//! drivers only see what the oracle methods return. Everything is
//! deterministic under a 64-bit seed.

pub mod baseline;
pub mod confidentiality;
pub mod correctness;
pub mod framing;
pub mod integrity;
pub mod mutation;
pub mod outsourced;
pub mod reportability;
mod server;
pub mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::causality::{CausalityGraph, Edge, GraphError, VId};
use crate::checks::Checks;
use crate::franking::Layout;
use crate::Party;

pub use baseline::{run_attack_demo, AttackVerdict};

pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Which construction a game runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    TwoParty,
    Group(usize),
    /// Server keeps only its key; clients carry their last tag.
    Outsourced(usize),
}

impl Variant {
    /// Two parties get the two-party scheme, more get the group scheme.
    pub fn stateful(n: usize) -> Variant {
        if n == 2 {
            Variant::TwoParty
        } else {
            Variant::Group(n)
        }
    }

    pub fn parties(self) -> usize {
        match self {
            Variant::TwoParty => 2,
            Variant::Group(n) | Variant::Outsourced(n) => n,
        }
    }

    pub fn name(self) -> String {
        match self {
            Variant::TwoParty => "2p".into(),
            Variant::Group(n) => format!("group-{n}"),
            Variant::Outsourced(n) => format!("outsourced-{n}"),
        }
    }

    pub(crate) fn layout(self) -> Layout {
        if self.parties() == 2 {
            Layout::TwoParty
        } else {
            Layout::Group
        }
    }
}

/// What a finished game reports.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub win: bool,
    pub calls: usize,
    pub mirror_checks: usize,
    /// Only ever non-zero under a mutated configuration.
    pub mirror_breaks: usize,
    /// Winning reports that carried an ack the server never issued.
    pub forged: usize,
}

/// Server/ground-truth agreement. With every check enabled a disagreement is a
/// bug and panics; mutants are expected to drift, so there it is counted.
#[derive(Debug, Clone)]
pub(crate) struct Mirror {
    strict: bool,
    pub checks: usize,
    pub breaks: usize,
}

impl Mirror {
    pub fn new(ck: Checks) -> Self {
        Self::with_strictness(ck.is_full())
    }

    pub fn with_strictness(strict: bool) -> Self {
        Mirror { strict, checks: 0, breaks: 0 }
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            assert!(!self.strict, "mirror invariant broken: {}", what());
            self.breaks += 1;
        }
    }
}

/// Ground-truth reception keyed by the tagged send it answers. A second copy
/// of one send reaching the same receiver cannot come from the construction
/// operations, so it is written in directly.
pub(crate) fn record_reception(
    g: &mut CausalityGraph,
    ps: Party,
    pr: Party,
    i: u64,
) -> Option<VId> {
    match g.add_recv(ps, pr, i) {
        Ok(v) => Some(v),
        Err(GraphError::DuplicateDelivery { .. }) => {
            let src = g.send_with_index(ps, i)?;
            let (cs, cr) = g.counters(pr);
            let v = VId::r(cs, cr + 1);
            g.insert_vertex(pr, v, g.vertex(ps, &src)?.clone()).ok()?;
            g.insert_edge(Edge { from: (ps, src), to: (pr, v) }).ok()?;
            Some(v)
        }
        Err(_) => None,
    }
}
