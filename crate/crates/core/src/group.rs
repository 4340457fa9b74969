//! N-party variant: one counter pair per party, reception tags naming both
//! sender and receiver.

use rand::{CryptoRng, RngCore};

use crate::ack::{Ack, AckKind, ServerTag};
use crate::causality::CausalityGraph;
use crate::checks::Checks;
use crate::crypto::{Commitment, MacKey};
use crate::franking::{judge_report, CounterTable, FrankingError, Layout, ReportEntry};
use crate::Party;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupServerState {
    k_mac: MacKey,
    table: CounterTable,
}

impl GroupServerState {
    pub fn init<R: RngCore + CryptoRng>(rng: &mut R, n: usize) -> Result<Self, FrankingError> {
        if n < 2 {
            return Err(FrankingError::BadParty { party: n, n: 2 });
        }
        Ok(Self::from_parts(MacKey::random(rng), CounterTable::new(n)))
    }

    pub fn from_parts(k_mac: MacKey, table: CounterTable) -> Self {
        GroupServerState { k_mac, table }
    }

    pub fn parties(&self) -> usize {
        self.table.parties()
    }

    pub fn k_mac(&self) -> &MacKey {
        &self.k_mac
    }

    pub fn table(&self) -> &CounterTable {
        &self.table
    }

    pub fn counters(&self, cid: &[u8]) -> Vec<(u64, u64)> {
        self.table.get(cid)
    }

    pub fn tag_send(&mut self, cid: &[u8], p: Party, c_f: Commitment) -> Result<ServerTag, FrankingError> {
        let (cs, cr) = self.table.bump_send(cid, p)?;
        let ack = Ack { kind: AckKind::S, sender: p, receiver: None, cid: cid.to_vec(), c_f: Some(c_f), cs, cr };
        Ok(ServerTag::issue(&self.k_mac, ack))
    }

    pub fn tag_recv(
        &mut self,
        cid: &[u8],
        p_r: Party,
        p_s: Party,
        c_f: Commitment,
    ) -> Result<ServerTag, FrankingError> {
        if p_s >= self.parties() {
            return Err(FrankingError::BadParty { party: p_s, n: self.parties() });
        }
        if p_r == p_s {
            return Err(FrankingError::SelfReception(p_r));
        }
        let (cs, cr) = self.table.bump_recv(cid, p_r)?;
        let ack = Ack { kind: AckKind::R, sender: p_s, receiver: Some(p_r), cid: cid.to_vec(), c_f: Some(c_f), cs, cr };
        Ok(ServerTag::issue(&self.k_mac, ack))
    }

    pub fn judge(&self, cid: &[u8], report: &[ReportEntry]) -> Option<CausalityGraph> {
        self.judge_with(cid, report, Checks::ALL)
    }

    pub fn judge_with(&self, cid: &[u8], report: &[ReportEntry], ck: Checks) -> Option<CausalityGraph> {
        judge_report(&self.k_mac, cid, self.parties(), Layout::Group, report, ck)
    }
}
