//! MAC, franking commitment, PRF and the reference channel.
//!
//! Everything is HMAC-SHA-256 underneath. Keys, tags and commitments are all
//! 32 bytes.

use std::collections::BTreeSet;
use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::Party;

pub const LAMBDA: usize = 32;

type HmacSha256 = Hmac<Sha256>;

macro_rules! bytes32 {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; LAMBDA]);

        impl $name {
            pub fn from_slice(b: &[u8]) -> Option<Self> {
                <[u8; LAMBDA]>::try_from(b).ok().map(Self)
            }

            pub fn as_bytes(&self) -> &[u8; LAMBDA] {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(", stringify!($name))?;
                for b in &self.0[..4] {
                    write!(f, "{b:02x}")?;
                }
                write!(f, "..)")
            }
        }
    };
}

bytes32!(
    /// Server MAC key.
    MacKey
);
bytes32!(MacTagBytes);
bytes32!(
    /// Franking tag `c_f`.
    Commitment
);
bytes32!(
    /// Opening key `k_f`.
    OpeningKey
);

impl MacKey {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; LAMBDA];
        rng.fill_bytes(&mut k);
        MacKey(k)
    }
}

fn hmac_parts(key: &[u8], parts: &[&[u8]]) -> [u8; LAMBDA] {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().into()
}

pub fn mac_tag(key: &MacKey, msg: &[u8]) -> MacTagBytes {
    MacTagBytes(hmac_parts(&key.0, &[msg]))
}

pub fn mac_verify(key: &MacKey, msg: &[u8], t: &MacTagBytes) -> bool {
    let mut mac = HmacSha256::new_from_slice(&key.0).expect("hmac accepts any key length");
    mac.update(msg);
    mac.verify_slice(&t.0).is_ok()
}

/// HMAC-SHA-256 used as a PRF.
pub fn prf(key: &[u8; LAMBDA], input: &[u8]) -> [u8; LAMBDA] {
    hmac_parts(key, &[input])
}

pub fn commit<R: RngCore + CryptoRng>(rng: &mut R, m: &[u8]) -> (OpeningKey, Commitment) {
    let mut k = [0u8; LAMBDA];
    rng.fill_bytes(&mut k);
    let c = hmac_parts(&k, &[m]);
    (OpeningKey(k), Commitment(c))
}

pub fn commit_verify(m: &[u8], k_f: &OpeningKey, c_f: &Commitment) -> bool {
    let mut mac = HmacSha256::new_from_slice(&k_f.0).expect("hmac accepts any key length");
    mac.update(m);
    mac.verify_slice(&c_f.0).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("party index {party} out of range for {n} parties")]
    BadParty { party: Party, n: usize },
    #[error("need at least two parties, got {0}")]
    TooFewParties(usize),
}

#[derive(Clone, PartialEq, Eq)]
pub struct ChannelState {
    party: Party,
    n: usize,
    channel_key: [u8; LAMBDA],
    send_ctr: u64,
    seen: Vec<BTreeSet<u64>>,
}

impl fmt::Debug for ChannelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelState")
            .field("party", &self.party)
            .field("n", &self.n)
            .field("send_ctr", &self.send_ctr)
            .field("seen", &self.seen)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelCiphertext {
    pub sender: Party,
    pub i: u64,
    pub body: Vec<u8>,
    pub body_mac: MacTagBytes,
}

pub fn channel_init(party: Party, k: [u8; LAMBDA], n: usize) -> Result<ChannelState, ChannelError> {
    if n < 2 {
        return Err(ChannelError::TooFewParties(n));
    }
    if party >= n {
        return Err(ChannelError::BadParty { party, n });
    }
    Ok(ChannelState {
        party,
        n,
        channel_key: k,
        send_ctr: 0,
        seen: vec![BTreeSet::new(); n],
    })
}

fn header(sender: Party, i: u64) -> [u8; 12] {
    let mut h = [0u8; 12];
    h[..4].copy_from_slice(&(sender as u32).to_be_bytes());
    h[4..].copy_from_slice(&i.to_be_bytes());
    h
}

/// Keystream for message `(sender, i)`, truncated to `len` bytes.
pub fn keystream(channel_key: &[u8; LAMBDA], sender: Party, i: u64, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + LAMBDA);
    let hdr = header(sender, i);
    let mut j: u32 = 0;
    while out.len() < len {
        let block = hmac_parts(channel_key, &[&[0x01], &hdr, &j.to_be_bytes()]);
        out.extend_from_slice(&block);
        j += 1;
    }
    out.truncate(len);
    out
}

pub fn direction_key(channel_key: &[u8; LAMBDA], sender: Party) -> MacKey {
    MacKey(hmac_parts(channel_key, &[&[0x02], &(sender as u32).to_be_bytes()]))
}

fn body_mac(channel_key: &[u8; LAMBDA], sender: Party, i: u64, body: &[u8]) -> MacTagBytes {
    let dk = direction_key(channel_key, sender);
    MacTagBytes(hmac_parts(&dk.0, &[&header(sender, i), body]))
}

impl ChannelState {
    pub fn party(&self) -> Party {
        self.party
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn send_ctr(&self) -> u64 {
        self.send_ctr
    }

    pub fn seen(&self, peer: Party) -> &BTreeSet<u64> {
        &self.seen[peer]
    }

    /// Rebuild a state from its persisted parts.
    pub fn from_parts(
        party: Party,
        n: usize,
        channel_key: [u8; LAMBDA],
        send_ctr: u64,
        seen: Vec<BTreeSet<u64>>,
    ) -> Result<Self, ChannelError> {
        let mut st = channel_init(party, channel_key, n)?;
        if seen.len() != n {
            return Err(ChannelError::TooFewParties(seen.len()));
        }
        st.send_ctr = send_ctr;
        st.seen = seen;
        Ok(st)
    }

    pub fn channel_key(&self) -> &[u8; LAMBDA] {
        &self.channel_key
    }
}

pub fn channel_send(st: &mut ChannelState, payload: &[u8]) -> ChannelCiphertext {
    st.send_ctr += 1;
    let i = st.send_ctr;
    let ks = keystream(&st.channel_key, st.party, i, payload.len());
    let body: Vec<u8> = payload.iter().zip(ks).map(|(a, b)| a ^ b).collect();
    let body_mac = body_mac(&st.channel_key, st.party, i, &body);
    ChannelCiphertext { sender: st.party, i, body, body_mac }
}

/// Returns `None` on tamper, replay, or a sender that does not match.
pub fn channel_recv(
    st: &mut ChannelState,
    sender: Party,
    c: &ChannelCiphertext,
) -> Option<(Vec<u8>, u64)> {
    if sender == st.party || sender >= st.n || c.sender != sender || c.i == 0 {
        return None;
    }
    let authed = [&header(sender, c.i)[..], &c.body].concat();
    if !mac_verify(&direction_key(&st.channel_key, sender), &authed, &c.body_mac) {
        return None;
    }
    if st.seen[sender].contains(&c.i) {
        return None;
    }
    st.seen[sender].insert(c.i);
    let ks = keystream(&st.channel_key, sender, c.i, c.body.len());
    let payload = c.body.iter().zip(ks).map(|(a, b)| a ^ b).collect();
    Some((payload, c.i))
}
