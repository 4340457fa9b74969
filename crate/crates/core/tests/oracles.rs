//! Byte-level checks against an HMAC built here from SHA-256 alone, so a
//! mistake in how the library drives the hmac crate shows up.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use tfrank::ack::{Ack, AckKind, ServerTag};
use tfrank::crypto::*;
use tfrank::franking::{clen, ClientState};

fn oracle_hmac(key: &[u8], msg: &[u8]) -> [u8; 32] {
    let mut k = [0u8; 64];
    if key.len() > 64 {
        k[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        k[..key.len()].copy_from_slice(key);
    }
    let ipad: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    let opad: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();
    let inner = Sha256::new().chain_update(&ipad).chain_update(msg).finalize();
    Sha256::new().chain_update(&opad).chain_update(inner).finalize().into()
}

fn oracle_keystream(key: &[u8; 32], sender: u32, i: u64, len: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut j = 0u32;
    while out.len() < len {
        let mut input = vec![0x01];
        input.extend_from_slice(&sender.to_be_bytes());
        input.extend_from_slice(&i.to_be_bytes());
        input.extend_from_slice(&j.to_be_bytes());
        out.extend_from_slice(&oracle_hmac(key, &input));
        j += 1;
    }
    out.truncate(len);
    out
}

#[test]
fn rfc4231_case_1() {
    let key = [0x0b; 20];
    let want = hex::decode("b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7").unwrap();
    assert_eq!(oracle_hmac(&key, b"Hi There").to_vec(), want);
    // the library only takes 32-byte keys; pad with zeros, which HMAC does anyway
    let mut k32 = [0u8; 32];
    k32[..20].copy_from_slice(&key);
    assert_eq!(mac_tag(&MacKey(k32), b"Hi There").0.to_vec(), want);
    assert_eq!(prf(&k32, b"Hi There").to_vec(), want);
}

#[test]
fn rfc4231_case_2() {
    let want = hex::decode("5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843").unwrap();
    assert_eq!(oracle_hmac(b"Jefe", b"what do ya want for nothing?").to_vec(), want);
    let mut k32 = [0u8; 32];
    k32[..4].copy_from_slice(b"Jefe");
    assert_eq!(mac_tag(&MacKey(k32), b"what do ya want for nothing?").0.to_vec(), want);
}

#[test]
fn trailing_zero_changes_the_tag() {
    let k = MacKey([9; 32]);
    let a = mac_tag(&k, b"abc");
    let b = mac_tag(&k, b"abc\0");
    assert_ne!(a, b);
    assert_eq!(b.0, oracle_hmac(&k.0, b"abc\0"));
}

#[test]
fn zero_tag_and_foreign_key_rejected() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..50 {
        let k = MacKey::random(&mut rng);
        let k2 = MacKey::random(&mut rng);
        assert!(!mac_verify(&k, b"m", &MacTagBytes([0; 32])));
        assert!(!mac_verify(&k2, b"m", &MacTagBytes(oracle_hmac(&k.0, b"m"))));
    }
}

#[test]
fn ack_bytes_by_hand() {
    let ack = Ack { kind: AckKind::R, sender: 0, receiver: Some(1), cid: b"c1".to_vec(), c_f: Some(Commitment([7; 32])), cs: 0, cr: 1 };
    let mut want = vec![0x52, 0, 0, 0, 0, 0, 0, 0, 1, 0, 2, b'c', b'1', 1];
    want.extend_from_slice(&[7; 32]);
    want.extend_from_slice(&0u64.to_be_bytes());
    want.extend_from_slice(&1u64.to_be_bytes());
    assert_eq!(ack.encode(), want);
    let init = Ack::init(2, b"");
    let mut want = vec![0x49, 0, 0, 0, 2, 0xff, 0xff, 0xff, 0xff, 0, 0, 0];
    want.extend_from_slice(&[0; 16]);
    assert_eq!(init.encode(), want);
    let k = MacKey([3; 32]);
    assert_eq!(ServerTag::issue(&k, ack.clone()).mac.0, oracle_hmac(&k.0, &ack.encode()));
}

#[test]
fn channel_bytes_by_hand() {
    let key = [5u8; 32];
    let mut st = channel_init(1, key, 3).unwrap();
    let c = channel_send(&mut st, b"hello world");
    assert_eq!(c.i, 1);
    let ks = oracle_keystream(&key, 1, 1, 11);
    let body: Vec<u8> = b"hello world".iter().zip(&ks).map(|(a, b)| a ^ b).collect();
    assert_eq!(c.body, body);
    let dk = oracle_hmac(&key, &[&[0x02][..], &1u32.to_be_bytes()].concat());
    let mut authed = 1u32.to_be_bytes().to_vec();
    authed.extend_from_slice(&1u64.to_be_bytes());
    authed.extend_from_slice(&body);
    assert_eq!(c.body_mac.0, oracle_hmac(&dk, &authed));
    // same payload again: next index, different body
    let c2 = channel_send(&mut st, b"hello world");
    assert_ne!(c.body, c2.body);
    let mut flipped = c2.clone();
    flipped.body[0] ^= 1;
    let mut rx = channel_init(0, key, 3).unwrap();
    assert!(channel_recv(&mut rx, 1, &flipped).is_none());
    assert_eq!(channel_recv(&mut rx, 1, &c2).unwrap(), (b"hello world".to_vec(), 2));
}

#[test]
fn franked_ciphertext_layout() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut a = ClientState::init(0, [1; 32]).unwrap();
    let c = a.snd(&mut rng, b"hey");
    let entry = &a.outbox()[&c.i];
    assert_eq!(c.c_f.0, oracle_hmac(&entry.k_f.0, b"hey"));
    assert_eq!(c.opaque_bytes().len(), clen(3));
    let ks = oracle_keystream(&[1; 32], 0, c.i, c.c_e.body.len());
    let plain: Vec<u8> = c.c_e.body.iter().zip(ks).map(|(a, b)| a ^ b).collect();
    assert_eq!(&plain[..3], b"hey");
    assert_eq!(&plain[3..], &entry.k_f.0);
}

#[test]
fn commitments_by_hand() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (k, c) = commit(&mut rng, b"msg");
    assert_eq!(c.0, oracle_hmac(&k.0, b"msg"));
    assert!(commit_verify(b"msg", &k, &c));
    assert!(!commit_verify(b"msh", &k, &c));
}

proptest! {
    #[test]
    fn mac_matches_oracle(key in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..200)) {
        let t = mac_tag(&MacKey(key), &msg);
        prop_assert_eq!(t.0, oracle_hmac(&key, &msg));
        prop_assert!(mac_verify(&MacKey(key), &msg, &t));
        let mut bad = t;
        bad.0[msg.len() % 32] ^= 0x80;
        prop_assert!(!mac_verify(&MacKey(key), &msg, &bad));
    }

    #[test]
    fn keystream_matches_oracle(key in any::<[u8; 32]>(), sender in 0usize..8, i in 1u64..1000, len in 0usize..150) {
        prop_assert_eq!(keystream(&key, sender, i, len), oracle_keystream(&key, sender as u32, i, len));
    }
}
