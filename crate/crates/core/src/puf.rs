//! Simulated PUF enrolment and single-use challenge-response
//! authentication.
//!
//! A device is modelled as a keyed map from challenges to stable latent
//! complex vectors; each measurement adds fresh Gaussian noise. The
//! verifier's fuzzy extractor is exactly the SKG pipeline: sign
//! quantization, syndrome helper data, and a hashed key digest. A CRP is
//! removed from the database the moment it is picked, so replays find
//! nothing to match against.
//!
//! Authentication is chained to the subsequent key-establishment session
//! only temporally; no transcript binding between the two is modelled
//! here.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::material_rng;
use crate::skg::{
    decode_syndrome_wire, encode_syndrome_wire, privacy_amplify, quantize, reconcile_bits,
    syndrome_over_bits, AmplificationBudget, BlockCode, KeyMaterial,
};

/// One simulated device. The latent response to a challenge is a
/// deterministic function of the device secret; measurements never repeat
/// exactly because of `noise_sigma`.
#[derive(Debug, Clone)]
pub struct PufDevice {
    pub device_id: Vec<u8>,
    secret: [u8; 32],
    pub noise_sigma: f64,
    pub n_cells: usize,
}

impl PufDevice {
    pub fn new(device_id: impl Into<Vec<u8>>, secret_seed: u64, noise_sigma: f64, n_cells: usize) -> Self {
        let mut h = Sha256::new();
        h.update(b"puf:secret:v1");
        h.update(secret_seed.to_be_bytes());
        Self {
            device_id: device_id.into(),
            secret: h.finalize().into(),
            noise_sigma,
            n_cells,
        }
    }

    /// Stable latent vector for a challenge, CN(0, 1) per cell.
    fn latent(&self, challenge: &[u8]) -> Vec<Complex64> {
        let mut rng = material_rng(&[b"puf:latent:v1", &self.secret, challenge]);
        (0..self.n_cells)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re / 2f64.sqrt(), im / 2f64.sqrt())
            })
            .collect()
    }

    /// Noisy measurement: latent + CN(0, noise_sigma²).
    pub fn measure(&self, challenge: &[u8], rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let s = self.noise_sigma / 2f64.sqrt();
        self.latent(challenge)
            .into_iter()
            .map(|x| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x + Complex64::new(s * re, s * im)
            })
            .collect()
    }
}

/// One stored challenge-response pair: the challenge, the public helper
/// data (wire-encoded syndrome of the enrolment bits) and the digest of
/// the extracted key. Single use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpRecord {
    pub challenge: Vec<u8>,
    pub helper_data: Vec<u8>,
    pub key_digest: [u8; 32],
    pub used: bool,
}

/// Verifier-side store, one record list per device.
#[derive(Debug, Default)]
pub struct CrpDatabase {
    records: HashMap<Vec<u8>, Vec<CrpRecord>>,
}

impl CrpDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, device_id: &[u8], records: Vec<CrpRecord>) {
        self.records.entry(device_id.to_vec()).or_default().extend(records);
    }

    pub fn remaining(&self, device_id: &[u8]) -> usize {
        self.records.get(device_id).map_or(0, |r| r.len())
    }

    fn pop_random(&mut self, device_id: &[u8], rng: &mut ChaCha8Rng) -> Result<CrpRecord> {
        let list = self.records.get_mut(device_id).ok_or(Error::UnknownDevice)?;
        if list.is_empty() {
            return Err(Error::EnrolmentExhausted);
        }
        let idx = rng.random_range(0..list.len());
        let mut record = list.swap_remove(idx);
        record.used = true;
        Ok(record)
    }
}

fn extract_key(bits: &[u8], syndrome_bits: usize) -> Result<KeyMaterial> {
    // Idealized device entropy: one bit per raw bit, less the helper leakage.
    let budget = AmplificationBudget::new(bits.len() as f64, 0.0, syndrome_bits as f64, 0.0)?;
    let available = bits.len() - syndrome_bits;
    let key_len = (available.min(256) / 2) * 2;
    privacy_amplify(bits, &budget, key_len, syndrome_bits)
}

fn digest_key(key: &KeyMaterial) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"puf:digest:v1");
    h.update(&key.k_e);
    h.update(&key.k_i);
    h.finalize().into()
}

/// Enrolment: run `n_challenges` fresh challenges against the noiseless
/// latent responses, store helper data and key digests.
pub fn enroll(
    device: &PufDevice,
    n_challenges: usize,
    code: &BlockCode,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CrpRecord>> {
    if n_challenges == 0 {
        return Err(Error::InvalidConfig("need at least one challenge".into()));
    }
    let mut out = Vec::with_capacity(n_challenges);
    for _ in 0..n_challenges {
        let mut challenge = vec![0u8; 16];
        rng.fill(&mut challenge[..]);
        let bits = quantize(&device.latent(&challenge), 0.0).bits;
        let syndrome = syndrome_over_bits(&bits, code);
        let key = extract_key(&bits, syndrome.len())?;
        out.push(CrpRecord {
            challenge,
            helper_data: encode_syndrome_wire(&syndrome),
            key_digest: digest_key(&key),
            used: false,
        });
    }
    Ok(out)
}

/// One authentication round. A random unused CRP is consumed whatever the
/// outcome; the device's noisy response is reconciled toward the enrolment
/// bits via the helper data and the digests compared.
pub fn authenticate(device: &PufDevice, db: &mut CrpDatabase, code: &BlockCode, rng: &mut ChaCha8Rng) -> Result<bool> {
    let record = db.pop_random(&device.device_id, rng)?;
    let response = device.measure(&record.challenge, rng);
    let bits = quantize(&response, 0.0).bits;
    let syndrome = match decode_syndrome_wire(&record.helper_data) {
        Ok(s) => s,
        Err(_) => return Ok(false),
    };
    let reconciled = match reconcile_bits(&bits, &syndrome, code) {
        Ok(b) => b,
        Err(_) => return Ok(false),
    };
    let key = match extract_key(&reconciled, syndrome.len()) {
        Ok(k) => k,
        Err(_) => return Ok(false),
    };
    Ok(digest_key(&key) == record.key_digest)
}
