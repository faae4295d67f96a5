//! Deterministic stream derivation.
//!
//! One master seed keys a ChaCha8 generator; every Monte Carlo trial gets
//! its own counter-addressed stream via [`trial_rng`]. Streams are
//! independent of each other and of execution order, so trials can run on
//! any number of worker threads and still reproduce bit-identically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// RNG for one trial: `master_seed` selects the key, `trial_index` the
/// stream. Same pair, same draws, on every platform.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Derives a sub-seed for an independent purpose (e.g. "puf", "demo") so
/// unrelated consumers never share a stream with the channel trials.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"skg:seed:v1");
    h.update(master_seed.to_be_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().unwrap())
}

/// RNG keyed by arbitrary byte material (hashed down to a 32-byte seed).
pub fn material_rng(parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"skg:material:v1");
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}
