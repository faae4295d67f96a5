//! Authenticated encryption bound to the SKG pipeline.
//!
//! Alice encrypts under the first key half with AES-128 in counter mode
//! and tags with HMAC-SHA256 under the second half. The tag covers the
//! wire-encoded syndrome, the ciphertext, the associated data and the
//! message sequence number, so flipping any transmitted bit — including
//! one in the plaintext syndrome — fails verification. Bob re-derives the
//! key from the received syndrome and his own observation before he can
//! verify anything; a tampered syndrome therefore fails either at
//! reconciliation or at the integrity check, and no plaintext is released
//! on any failure path.

use aes::Aes128;
use ctr::cipher::{KeyIvInit, StreamCipher};
use hmac::{Hmac, KeyInit, Mac};
use num_complex::Complex64;
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::skg::{
    decode_syndrome_wire, encode_syndrome_wire, skg_receive, AmplificationBudget, BlockCode,
    KeyMaterial,
};

type Aes128Ctr = ctr::Ctr128BE<Aes128>;
type HmacSha256 = Hmac<Sha256>;

pub const TAG_LEN: usize = 32;

/// The extended ciphertext [s_A ‖ c ‖ t]. `assoc_data` (e.g. the 0-RTT
/// look-up identifier and headers) is authenticated but not transmitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedCiphertext {
    pub syndrome: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
    pub assoc_data: Vec<u8>,
}

fn keystream_apply(k_e: &[u8], seq: u64, data: &mut [u8]) -> Result<()> {
    if k_e.len() != 16 {
        return Err(Error::KeyLength);
    }
    // 96-bit nonce = 4 zero bytes ‖ sequence counter, low 32 bits count blocks.
    let mut iv = [0u8; 16];
    iv[4..12].copy_from_slice(&seq.to_be_bytes());
    let mut cipher = Aes128Ctr::new(k_e.into(), (&iv).into());
    cipher.apply_keystream(data);
    Ok(())
}

fn transcript(syndrome_wire: &[u8], ciphertext: &[u8], assoc: &[u8], seq: u64) -> Vec<u8> {
    let mut t = Vec::with_capacity(12 + syndrome_wire.len() + ciphertext.len() + assoc.len() + 8);
    t.extend_from_slice(&(syndrome_wire.len() as u32).to_be_bytes());
    t.extend_from_slice(syndrome_wire);
    t.extend_from_slice(&(ciphertext.len() as u32).to_be_bytes());
    t.extend_from_slice(ciphertext);
    t.extend_from_slice(&(assoc.len() as u32).to_be_bytes());
    t.extend_from_slice(assoc);
    t.extend_from_slice(&seq.to_be_bytes());
    t
}

/// Deterministic MAC over `data`.
pub fn sign(key_i: &[u8], data: &[u8]) -> [u8; TAG_LEN] {
    let mut mac = HmacSha256::new_from_slice(key_i).expect("hmac accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

/// Constant-time verification.
pub fn verify(key_i: &[u8], data: &[u8], tag: &[u8; TAG_LEN]) -> bool {
    let mut mac = HmacSha256::new_from_slice(key_i).expect("hmac accepts any key length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}

/// Seals the first message of a session (sequence 0).
pub fn seal(
    key: &KeyMaterial,
    message: &[u8],
    syndrome_bits: &[u8],
    assoc_data: &[u8],
) -> Result<ExtendedCiphertext> {
    seal_at(key, 0, message, syndrome_bits, assoc_data)
}

/// Seals message number `seq` under the session key. The nonce is the
/// per-key counter, so every message of one session needs a distinct
/// sequence number; keys are single-session, which rules out cross-session
/// reuse.
pub fn seal_at(
    key: &KeyMaterial,
    seq: u64,
    message: &[u8],
    syndrome_bits: &[u8],
    assoc_data: &[u8],
) -> Result<ExtendedCiphertext> {
    let syndrome = encode_syndrome_wire(syndrome_bits);
    let mut ciphertext = message.to_vec();
    keystream_apply(&key.k_e, seq, &mut ciphertext)?;
    let tag = sign(&key.k_i, &transcript(&syndrome, &ciphertext, assoc_data, seq));
    Ok(ExtendedCiphertext { syndrome, ciphertext, tag, assoc_data: assoc_data.to_vec() })
}

/// Opens the first message of a session (sequence 0).
pub fn open(
    receiver_observation: &[Complex64],
    code: &BlockCode,
    budget: &AmplificationBudget,
    ext: &ExtendedCiphertext,
    key_len_bits: usize,
) -> Result<Vec<u8>> {
    open_at(receiver_observation, code, budget, ext, key_len_bits, 0)
}

/// Receiver pipeline: reconcile from the transmitted syndrome, derive the
/// key, verify the tag, then (and only then) decrypt.
pub fn open_at(
    receiver_observation: &[Complex64],
    code: &BlockCode,
    budget: &AmplificationBudget,
    ext: &ExtendedCiphertext,
    key_len_bits: usize,
    seq: u64,
) -> Result<Vec<u8>> {
    let syndrome_bits = decode_syndrome_wire(&ext.syndrome)?;
    let key = skg_receive(receiver_observation, &syndrome_bits, code, budget, key_len_bits)?;
    open_with_key(&key, ext, seq)
}

/// Opens when the receiver already holds the key (resumed sessions derive
/// it through the resumption pipeline first).
pub fn open_with_key(key: &KeyMaterial, ext: &ExtendedCiphertext, seq: u64) -> Result<Vec<u8>> {
    let data = transcript(&ext.syndrome, &ext.ciphertext, &ext.assoc_data, seq);
    if !verify(&key.k_i, &data, &ext.tag) {
        return Err(Error::IntegrityFailure);
    }
    let mut message = ext.ciphertext.clone();
    keystream_apply(&key.k_e, seq, &mut message)?;
    Ok(message)
}

/// Wire format: [u32 len s][s][u32 len c][c][32-byte t], lengths
/// big-endian. Associated data travels out of band.
pub fn encode_extended(ext: &ExtendedCiphertext) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + ext.syndrome.len() + ext.ciphertext.len() + TAG_LEN);
    out.extend_from_slice(&(ext.syndrome.len() as u32).to_be_bytes());
    out.extend_from_slice(&ext.syndrome);
    out.extend_from_slice(&(ext.ciphertext.len() as u32).to_be_bytes());
    out.extend_from_slice(&ext.ciphertext);
    out.extend_from_slice(&ext.tag);
    out
}

/// Strict decode; trailing bytes or short fields are rejected.
pub fn decode_extended(wire: &[u8], assoc_data: &[u8]) -> Result<ExtendedCiphertext> {
    let take_u32 = |at: usize| -> Result<usize> {
        wire.get(at..at + 4)
            .map(|b| u32::from_be_bytes(b.try_into().unwrap()) as usize)
            .ok_or(Error::DecodeFailure)
    };
    let ls = take_u32(0)?;
    let syndrome = wire.get(4..4 + ls).ok_or(Error::DecodeFailure)?.to_vec();
    let lc_at = 4 + ls;
    let lc = take_u32(lc_at)?;
    let ciphertext = wire.get(lc_at + 4..lc_at + 4 + lc).ok_or(Error::DecodeFailure)?.to_vec();
    let tag_at = lc_at + 4 + lc;
    let tag: [u8; TAG_LEN] = wire
        .get(tag_at..tag_at + TAG_LEN)
        .ok_or(Error::DecodeFailure)?
        .try_into()
        .unwrap();
    if wire.len() != tag_at + TAG_LEN {
        return Err(Error::DecodeFailure);
    }
    Ok(ExtendedCiphertext { syndrome, ciphertext, tag, assoc_data: assoc_data.to_vec() })
}
