//! Switches for the individual verification steps of judging and tagging.
//!
//! Production code always runs with [`Checks::ALL`]. The harness turns single
//! checks off to confirm that some adversary notices.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mutation {
    SkipVerC,
    SkipMacVerify,
    DropCid,
    DropCfEquality,
    DropPiCheck,
    DropSumCheck,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::SkipVerC,
        Mutation::SkipMacVerify,
        Mutation::DropCid,
        Mutation::DropCfEquality,
        Mutation::DropPiCheck,
        Mutation::DropSumCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::SkipVerC => "skip-verc",
            Mutation::SkipMacVerify => "skip-mac-verify",
            Mutation::DropCid => "drop-cid",
            Mutation::DropCfEquality => "drop-cf-equality",
            Mutation::DropPiCheck => "drop-pi-check",
            Mutation::DropSumCheck => "drop-sum-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Checks {
    pub verc: bool,
    pub mac: bool,
    pub cid: bool,
    pub cf_equality: bool,
    /// predecessor ownership when tagging against a presented tag
    pub pi: bool,
    /// equal `cs + cr` in replay judging
    pub sum: bool,
}

impl Checks {
    pub const ALL: Checks = Checks { verc: true, mac: true, cid: true, cf_equality: true, pi: true, sum: true };

    pub fn without(m: Mutation) -> Checks {
        let mut c = Checks::ALL;
        match m {
            Mutation::SkipVerC => c.verc = false,
            Mutation::SkipMacVerify => c.mac = false,
            Mutation::DropCid => c.cid = false,
            Mutation::DropCfEquality => c.cf_equality = false,
            Mutation::DropPiCheck => c.pi = false,
            Mutation::DropSumCheck => c.sum = false,
        }
        c
    }

    pub fn is_full(&self) -> bool {
        *self == Checks::ALL
    }
}

impl Default for Checks {
    fn default() -> Self {
        Checks::ALL
    }
}
