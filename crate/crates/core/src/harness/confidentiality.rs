//! Real-or-random smoke test for the channel. The challenger either returns
//! the real franked ciphertext of the challenge message or uniform bytes of
//! the same length; distinguishers see only the opaque bytes.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;

use super::seeded;
use crate::crypto::{keystream, LAMBDA};
use crate::franking::{clen, ClientState, FrankedCiphertext};
use crate::Party;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelFlavor {
    Reference,
    /// Every message is encrypted under the first keystream block. Broken on
    /// purpose.
    KeystreamReuse,
}

pub struct ConfGame {
    b: bool,
    flavor: ChannelFlavor,
    k_ch: [u8; LAMBDA],
    clients: Vec<ClientState>,
    rng: ChaCha20Rng,
    challenged: bool,
}

impl ConfGame {
    pub fn new(seed: u64, b: bool, flavor: ChannelFlavor) -> Self {
        let mut rng = seeded(seed);
        let mut k_ch = [0u8; LAMBDA];
        rng.fill(&mut k_ch);
        let clients = (0..2).map(|p| ClientState::init(p, k_ch).expect("two parties")).collect();
        ConfGame { b, flavor, k_ch, clients, rng, challenged: false }
    }

    fn encrypt(&mut self, p: Party, m: &[u8]) -> FrankedCiphertext {
        let mut c = self.clients[p].snd(&mut self.rng, m);
        if self.flavor == ChannelFlavor::KeystreamReuse {
            let fresh = keystream(&self.k_ch, p, c.i, m.len());
            let first = keystream(&self.k_ch, p, 1, m.len());
            for ((x, a), b) in c.c_e.body.iter_mut().zip(fresh).zip(first) {
                *x ^= a ^ b;
            }
        }
        c
    }

    /// Honest encryption, returned in full.
    pub fn send(&mut self, p: Party, m: &[u8]) -> Option<Vec<u8>> {
        if p > 1 {
            return None;
        }
        Some(self.encrypt(p, m).opaque_bytes())
    }

    /// Real opaque bytes when b = 1, uniform bytes of the same length when
    /// b = 0. One challenge per game.
    pub fn chal_send(&mut self, p: Party, m: &[u8]) -> Option<Vec<u8>> {
        if p > 1 || self.challenged {
            return None;
        }
        self.challenged = true;
        let real = self.encrypt(p, m).opaque_bytes();
        if self.b {
            return Some(real);
        }
        let mut fake = vec![0u8; clen(m.len())];
        self.rng.fill_bytes(&mut fake);
        Some(fake)
    }
}

pub trait Distinguisher {
    fn name(&self) -> &'static str;
    /// Guess for b.
    fn guess(&self, game: &mut ConfGame) -> bool;
}

/// Looks only at the length, which matches in both worlds.
pub struct LengthOnly;

impl Distinguisher for LengthOnly {
    fn name(&self) -> &'static str {
        "length-only"
    }

    fn guess(&self, game: &mut ConfGame) -> bool {
        let c = game.chal_send(0, &[0u8; 16]).expect("first challenge");
        c.len() != clen(16)
    }
}

/// Encrypts zeros and bets on the first body byte being small.
pub struct FirstByte;

impl Distinguisher for FirstByte {
    fn name(&self) -> &'static str {
        "first-byte"
    }

    fn guess(&self, game: &mut ConfGame) -> bool {
        let c = game.chal_send(0, &[0u8; 16]).expect("first challenge");
        c[0] < 128
    }
}

/// Encrypts zeros twice and compares the bodies.
pub struct ReuseProbe;

impl Distinguisher for ReuseProbe {
    fn name(&self) -> &'static str {
        "reuse-probe"
    }

    fn guess(&self, game: &mut ConfGame) -> bool {
        let zeros = [0u8; 32];
        let first = game.send(0, &zeros).expect("valid party");
        let chal = game.chal_send(0, &zeros).expect("first challenge");
        chal[..32] == first[..32]
    }
}

/// |P[guess = 1 | b = 1] - P[guess = 1 | b = 0]| over `trials` games per bit.
pub fn advantage(flavor: ChannelFlavor, d: &dyn Distinguisher, trials: u64, seed: u64) -> f64 {
    let mut ones = [0u64; 2];
    for (slot, b) in [false, true].into_iter().enumerate() {
        for t in 0..trials {
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (t << 1) ^ slot as u64;
            let mut game = ConfGame::new(s, b, flavor);
            ones[slot] += d.guess(&mut game) as u64;
        }
    }
    (ones[1] as f64 - ones[0] as f64).abs() / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_challenge_per_game() {
        let mut g = ConfGame::new(1, true, ChannelFlavor::Reference);
        assert_eq!(g.chal_send(0, b"abc").unwrap().len(), clen(3));
        assert!(g.chal_send(0, b"abc").is_none());
    }

    #[test]
    fn reuse_mutant_is_visible() {
        assert!(advantage(ChannelFlavor::KeystreamReuse, &ReuseProbe, 200, 5) > 0.9);
        assert!(advantage(ChannelFlavor::Reference, &ReuseProbe, 200, 5) < 0.1);
    }
}
