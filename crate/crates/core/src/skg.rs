//! The secret-key pipeline: sign quantization, syndrome-based information
//! reconciliation over a binary linear block code, and privacy
//! amplification — plus the XOR-with-resumption-secret variant used for
//! 0-RTT re-authentication.
//!
//! Alice runs [`skg_generate`] on her observation and obtains the key and
//! her syndrome in one step; Bob feeds that syndrome to [`skg_receive`],
//! which corrects his quantized bits toward hers before hashing. Both
//! sides of a session must use the same code, budget and key length.

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Quantizer output: one sign bit for the real then the imaginary part of
/// every sample. `mask` flags samples whose magnitude fell inside the
/// guard band; the mask is local to the observer and never transmitted, so
/// two-party sessions run with guard band 0 (empty mask) to stay aligned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVector {
    pub bits: Vec<u8>,
    pub mask: Vec<bool>,
}

impl QuantizedVector {
    /// Bits that survive the erasure mask.
    pub fn retained(&self) -> Vec<u8> {
        self.bits
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| !m)
            .map(|(&b, _)| b)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// 2-bit sign quantization: component ≥ 0 maps to 0, < 0 maps to 1.
/// Components with |value| < guard_band are flagged for erasure.
pub fn quantize(observation: &[Complex64], guard_band: f64) -> QuantizedVector {
    assert!(guard_band >= 0.0);
    let mut bits = Vec::with_capacity(2 * observation.len());
    let mut mask = Vec::with_capacity(2 * observation.len());
    for x in observation {
        for comp in [x.re, x.im] {
            bits.push(if comp < 0.0 { 1 } else { 0 });
            mask.push(comp.abs() < guard_band);
        }
    }
    QuantizedVector { bits, mask }
}

/// Binary linear block code used for syndrome (Slepian-Wolf) decoding.
///
/// Holds the (n−k)×n parity-check matrix and a coset-leader table mapping
/// each syndrome to its minimum-weight error pattern of weight ≤ t;
/// syndromes not covered decode to "uncorrectable".
#[derive(Debug, Clone)]
pub struct BlockCode {
    pub n_code: usize,
    pub k_code: usize,
    parity: Vec<Vec<u8>>,
    decode_table: Vec<Option<Vec<u8>>>,
}

impl BlockCode {
    /// Builds a code from its parity-check matrix, validating full row
    /// rank and unambiguous coset leaders up to weight `t`.
    pub fn new(parity: Vec<Vec<u8>>, k_code: usize, t: usize) -> Result<Self> {
        let rows = parity.len();
        let n_code = parity.first().map(|r| r.len()).unwrap_or(0);
        if n_code == 0 || rows == 0 || k_code + rows != n_code {
            return Err(Error::InvalidConfig("bad parity-check dimensions".into()));
        }
        if parity.iter().any(|r| r.len() != n_code || r.iter().any(|&b| b > 1)) {
            return Err(Error::InvalidConfig("parity rows must be 0/1 of equal length".into()));
        }
        if gf2_rank(&parity) != rows {
            return Err(Error::InvalidConfig("parity-check matrix is rank deficient".into()));
        }

        let mut table: Vec<Option<Vec<u8>>> = vec![None; 1 << rows];
        table[0] = Some(vec![0u8; n_code]);
        let mut frontier: Vec<Vec<u8>> = vec![vec![0u8; n_code]];
        for _weight in 1..=t {
            let mut next = Vec::new();
            for pat in &frontier {
                let start = pat.iter().rposition(|&b| b == 1).map_or(0, |p| p + 1);
                for pos in start..n_code {
                    let mut e = pat.clone();
                    e[pos] = 1;
                    let s = syndrome_of(&parity, &e);
                    match &table[s] {
                        None => {
                            table[s] = Some(e.clone());
                            next.push(e);
                        }
                        Some(existing) => {
                            let w_new: u8 = e.iter().sum();
                            let w_old: u8 = existing.iter().sum();
                            if w_new == w_old && *existing != e {
                                return Err(Error::InvalidConfig(
                                    "code cannot correct the requested weight".into(),
                                ));
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(Self { n_code, k_code, parity, decode_table: table })
    }

    /// Hamming(7,4): corrects one error per block, κ = 7/4. Columns of the
    /// parity-check matrix are the binary numbers 1..7.
    pub fn hamming_7_4() -> Self {
        let parity = vec![
            vec![1, 0, 1, 0, 1, 0, 1],
            vec![0, 1, 1, 0, 0, 1, 1],
            vec![0, 0, 0, 1, 1, 1, 1],
        ];
        Self::new(parity, 4, 1).expect("static code")
    }

    /// Extended Hamming(8,4): corrects one error and detects two, κ = 2.
    pub fn extended_hamming_8_4() -> Self {
        let parity = vec![
            vec![1, 0, 1, 0, 1, 0, 1, 0],
            vec![0, 1, 1, 0, 0, 1, 1, 0],
            vec![0, 0, 0, 1, 1, 1, 1, 0],
            vec![1, 1, 1, 1, 1, 1, 1, 1],
        ];
        Self::new(parity, 4, 1).expect("static code")
    }

    /// Hamming(15,11): corrects one error per block, κ = 15/11. The low
    /// syndrome overhead suits compact extended ciphertexts.
    pub fn hamming_15_11() -> Self {
        let parity: Vec<Vec<u8>> = (0..4)
            .map(|r| (1u8..=15).map(|c| c >> r & 1).collect())
            .collect();
        Self::new(parity, 11, 1).expect("static code")
    }

    /// Inverse code rate κ = n/k.
    pub fn kappa(&self) -> f64 {
        self.n_code as f64 / self.k_code as f64
    }

    pub fn syndrome_len(&self) -> usize {
        self.n_code - self.k_code
    }

    /// Syndrome bits for a bit string of `bit_len` input bits (zero-padded
    /// to a whole number of blocks).
    pub fn syndrome_bits_for(&self, bit_len: usize) -> usize {
        bit_len.div_ceil(self.n_code) * self.syndrome_len()
    }

    fn block_syndrome(&self, block: &[u8]) -> usize {
        let mut s = 0usize;
        for (r, row) in self.parity.iter().enumerate() {
            let bit: u8 = row.iter().zip(block.iter()).map(|(&h, &b)| h & b).fold(0, |a, x| a ^ x);
            s |= (bit as usize) << r;
        }
        s
    }

    fn decode_error(&self, syndrome: usize) -> Option<&Vec<u8>> {
        self.decode_table[syndrome].as_ref()
    }
}

fn syndrome_of(parity: &[Vec<u8>], word: &[u8]) -> usize {
    let mut s = 0usize;
    for (r, row) in parity.iter().enumerate() {
        let bit: u8 = row.iter().zip(word.iter()).map(|(&h, &b)| h & b).fold(0, |a, x| a ^ x);
        s |= (bit as usize) << r;
    }
    s
}

fn gf2_rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        if let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] == 1) {
            m.swap(rank, pivot);
            for r in 0..m.len() {
                if r != rank && m[r][col] == 1 {
                    let (a, b) = if r < rank {
                        let (lo, hi) = m.split_at_mut(rank);
                        (&mut lo[r], &hi[0])
                    } else {
                        let (lo, hi) = m.split_at_mut(r);
                        (&mut hi[0], &lo[rank])
                    };
                    for c in 0..ncols {
                        a[c] ^= b[c];
                    }
                }
            }
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
    }
    rank
}

fn padded_blocks(bits: &[u8], n_code: usize) -> Vec<Vec<u8>> {
    let blocks = bits.len().div_ceil(n_code);
    (0..blocks)
        .map(|b| {
            let mut block = vec![0u8; n_code];
            let start = b * n_code;
            let end = (start + n_code).min(bits.len());
            block[..end - start].copy_from_slice(&bits[start..end]);
            block
        })
        .collect()
}

/// Per-block syndromes s = H·rᵀ over GF(2), concatenated. Masked positions
/// are dropped first; the remainder is zero-padded to a block boundary.
pub fn compute_syndrome(quantized: &QuantizedVector, code: &BlockCode) -> Vec<u8> {
    syndrome_over_bits(&quantized.retained(), code)
}

pub(crate) fn syndrome_over_bits(bits: &[u8], code: &BlockCode) -> Vec<u8> {
    let mut out = Vec::with_capacity(code.syndrome_bits_for(bits.len()));
    for block in padded_blocks(bits, code.n_code) {
        let s = code.block_syndrome(&block);
        for r in 0..code.syndrome_len() {
            out.push((s >> r & 1) as u8);
        }
    }
    out
}

/// Reconciles the local bits toward the remote party's: per block, the
/// XOR of the two syndromes is decoded to the discrepancy pattern and the
/// local bits flipped accordingly. Detected uncorrectable blocks abort
/// the whole vector — no partial key material is released.
pub fn reconcile(
    local: &QuantizedVector,
    remote_syndrome: &[u8],
    code: &BlockCode,
) -> Result<Vec<u8>> {
    reconcile_bits(&local.retained(), remote_syndrome, code)
}

pub(crate) fn reconcile_bits(
    local_bits: &[u8],
    remote_syndrome: &[u8],
    code: &BlockCode,
) -> Result<Vec<u8>> {
    let s_len = code.syndrome_len();
    if remote_syndrome.len() != code.syndrome_bits_for(local_bits.len()) {
        return Err(Error::LengthMismatch);
    }
    let mut out = Vec::with_capacity(local_bits.len());
    for (bi, mut block) in padded_blocks(local_bits, code.n_code).into_iter().enumerate() {
        let s_local = code.block_syndrome(&block);
        let mut s_remote = 0usize;
        for r in 0..s_len {
            s_remote |= (remote_syndrome[bi * s_len + r] as usize) << r;
        }
        let diff = s_local ^ s_remote;
        match code.decode_error(diff) {
            None => return Err(Error::ReconcileFailure),
            Some(pattern) => {
                for (b, &e) in block.iter_mut().zip(pattern.iter()) {
                    *b ^= e;
                }
            }
        }
        out.extend_from_slice(&block);
    }
    out.truncate(local_bits.len());
    Ok(out)
}

/// Entropy accounting for privacy amplification (all quantities in bits,
/// supplied from the channel model rather than estimated from data):
/// |k| ≤ H(x_A) − I(x_A;x_E) − H(x_A|x_B) − r₀.
#[derive(Debug, Clone, Copy)]
pub struct AmplificationBudget {
    pub h_xa: f64,
    pub i_xa_xe: f64,
    pub h_xa_given_xb: f64,
    pub r0: f64,
}

impl AmplificationBudget {
    pub fn new(h_xa: f64, i_xa_xe: f64, h_xa_given_xb: f64, r0: f64) -> Result<Self> {
        let b = Self { h_xa, i_xa_xe, h_xa_given_xb, r0 };
        if !(b.max_key_bits() >= 0.0) || !(r0 >= 0.0) {
            return Err(Error::InvalidConfig("amplification budget is negative".into()));
        }
        Ok(b)
    }

    pub fn max_key_bits(&self) -> f64 {
        self.h_xa - self.i_xa_xe - self.h_xa_given_xb - self.r0
    }
}

/// The derived key, split into an encryption half and an integrity half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub k_e: Vec<u8>,
    pub k_i: Vec<u8>,
    pub total_len_bits: usize,
}

pub(crate) fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= b << (7 - i % 8);
    }
    out
}

pub(crate) fn unpack_bits(bytes: &[u8], bit_len: usize) -> Vec<u8> {
    (0..bit_len).map(|i| bytes[i / 8] >> (7 - i % 8) & 1).collect()
}

/// Compresses the reconciled bits to `key_len_bits` through SHA-256 with a
/// domain-separation prefix. The request must fit both the entropy budget
/// and the leakage cap |bits| − |syndrome|.
pub fn privacy_amplify(
    bits: &[u8],
    budget: &AmplificationBudget,
    key_len_bits: usize,
    syndrome_bits: usize,
) -> Result<KeyMaterial> {
    if key_len_bits == 0 || key_len_bits % 2 != 0 || key_len_bits > 256 {
        return Err(Error::KeyLength);
    }
    if (key_len_bits as f64) > budget.max_key_bits() {
        return Err(Error::AmplificationBudgetExceeded);
    }
    if key_len_bits + syndrome_bits > bits.len() {
        return Err(Error::AmplificationBudgetExceeded);
    }
    let mut h = Sha256::new();
    h.update(b"skg:pa:v1");
    h.update((bits.len() as u64).to_be_bytes());
    h.update(pack_bits(bits));
    let digest = h.finalize();

    let key_bits = unpack_bits(&digest, key_len_bits);
    let half = key_len_bits / 2;
    Ok(KeyMaterial {
        k_e: pack_bits(&key_bits[..half]),
        k_i: pack_bits(&key_bits[half..]),
        total_len_bits: key_len_bits,
    })
}

/// Sender-side pipeline G: observation → (key, syndrome). Alice can run
/// this unilaterally and already encrypt under the result.
pub fn skg_generate(
    observation: &[Complex64],
    code: &BlockCode,
    budget: &AmplificationBudget,
    key_len_bits: usize,
) -> Result<(KeyMaterial, Vec<u8>)> {
    let bits = quantize(observation, 0.0).retained();
    let syndrome = syndrome_over_bits(&bits, code);
    let key = privacy_amplify(&bits, budget, key_len_bits, syndrome.len())?;
    Ok((key, syndrome))
}

/// Receiver-side pipeline: reconcile toward the sender's bits using her
/// syndrome, then amplify. Fails without releasing anything if a block is
/// uncorrectable.
pub fn skg_receive(
    observation: &[Complex64],
    remote_syndrome: &[u8],
    code: &BlockCode,
    budget: &AmplificationBudget,
    key_len_bits: usize,
) -> Result<KeyMaterial> {
    let bits = quantize(observation, 0.0).retained();
    let reconciled = reconcile_bits(&bits, remote_syndrome, code)?;
    privacy_amplify(&reconciled, budget, key_len_bits, remote_syndrome.len())
}

/// Session-cache entry for 0-RTT resumption: a public look-up identifier
/// and the secret bit vector XORed into the next session's observations.
/// Single use; both parties hold their own copy.
#[derive(Debug, Clone)]
pub struct ResumptionState {
    pub lookup_id: Vec<u8>,
    resumption_secret: Vec<u8>,
    used: bool,
}

impl ResumptionState {
    /// Derives (k_l, r_s) from an established session key. `bit_len` must
    /// equal the quantized-vector length of the sessions it will resume.
    pub fn derive(key: &KeyMaterial, bit_len: usize) -> Self {
        let mut lk = Sha256::new();
        lk.update(b"skg:kl:v1");
        lk.update(&key.k_e);
        lk.update(&key.k_i);
        let lookup_id = lk.finalize()[..16].to_vec();

        let mut secret = Vec::with_capacity(bit_len);
        let mut counter: u32 = 0;
        while secret.len() < bit_len {
            let mut h = Sha256::new();
            h.update(b"skg:rs:v1");
            h.update(&key.k_e);
            h.update(&key.k_i);
            h.update(counter.to_be_bytes());
            let d = h.finalize();
            let take = (bit_len - secret.len()).min(256);
            secret.extend(unpack_bits(&d, take));
            counter += 1;
        }
        Self { lookup_id, resumption_secret: secret, used: false }
    }

    /// All-zero secret: resumed sessions collapse to plain SKG.
    pub fn zero(bit_len: usize) -> Self {
        Self { lookup_id: vec![0; 16], resumption_secret: vec![0; bit_len], used: false }
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    pub fn secret_bits(&self) -> &[u8] {
        &self.resumption_secret
    }

    fn consume(&mut self) -> Result<&[u8]> {
        if self.used {
            return Err(Error::ResumptionConsumed);
        }
        self.used = true;
        Ok(&self.resumption_secret)
    }
}

fn xor_bits(bits: &[u8], secret: &[u8]) -> Result<Vec<u8>> {
    if bits.len() != secret.len() {
        return Err(Error::LengthMismatch);
    }
    Ok(bits.iter().zip(secret.iter()).map(|(a, b)| a ^ b).collect())
}

/// Resumption variant of [`skg_generate`]: quantized bits are XORed with
/// the resumption secret before syndrome computation and hashing, so the
/// final key depends on both the fresh channel randomness and r_s. The
/// state is consumed.
pub fn resumption_generate(
    observation: &[Complex64],
    code: &BlockCode,
    budget: &AmplificationBudget,
    key_len_bits: usize,
    state: &mut ResumptionState,
) -> Result<(KeyMaterial, Vec<u8>)> {
    let bits = quantize(observation, 0.0).retained();
    let masked = xor_bits(&bits, state.consume()?)?;
    let syndrome = syndrome_over_bits(&masked, code);
    let key = privacy_amplify(&masked, budget, key_len_bits, syndrome.len())?;
    Ok((key, syndrome))
}

/// Receiver side of a resumed session; reconciliation recovers
/// r_A ⊕ r_s, which both parties hash. The state is consumed.
pub fn resumption_receive(
    observation: &[Complex64],
    remote_syndrome: &[u8],
    code: &BlockCode,
    budget: &AmplificationBudget,
    key_len_bits: usize,
    state: &mut ResumptionState,
) -> Result<KeyMaterial> {
    let bits = quantize(observation, 0.0).retained();
    let masked = xor_bits(&bits, state.consume()?)?;
    let reconciled = reconcile_bits(&masked, remote_syndrome, code)?;
    privacy_amplify(&reconciled, budget, key_len_bits, remote_syndrome.len())
}

/// Wire encoding of a syndrome: 4-byte big-endian bit length, then the
/// bits packed MSB-first and zero-padded to a byte boundary.
pub fn encode_syndrome_wire(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + bits.len().div_ceil(8));
    out.extend_from_slice(&(bits.len() as u32).to_be_bytes());
    out.extend_from_slice(&pack_bits(bits));
    out
}

/// Strict inverse of [`encode_syndrome_wire`]: length must match exactly
/// and padding bits must be zero.
pub fn decode_syndrome_wire(wire: &[u8]) -> Result<Vec<u8>> {
    if wire.len() < 4 {
        return Err(Error::DecodeFailure);
    }
    let bit_len = u32::from_be_bytes(wire[..4].try_into().unwrap()) as usize;
    let body = &wire[4..];
    if body.len() != bit_len.div_ceil(8) {
        return Err(Error::DecodeFailure);
    }
    let bits = unpack_bits(body, bit_len);
    // Reject nonzero padding.
    if bit_len % 8 != 0 {
        let last = body[body.len() - 1];
        let pad_mask = (1u8 << (8 - bit_len % 8)) - 1;
        if last & pad_mask != 0 {
            return Err(Error::DecodeFailure);
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quantize_sign_mapping() {
        assert_eq!(quantize(&[c(1.0, 1.0)], 0.0).bits, vec![0, 0]);
        assert_eq!(quantize(&[c(-1.0, 1.0)], 0.0).bits, vec![1, 0]);
        assert_eq!(quantize(&[c(0.5, -2.0)], 0.0).bits, vec![0, 1]);
    }

    #[test]
    fn quantize_is_deterministic_and_symmetric() {
        let obs = vec![c(0.3, -1.2), c(-0.7, 0.1)];
        assert_eq!(quantize(&obs, 0.0), quantize(&obs, 0.0));
        let neg: Vec<Complex64> = obs.iter().map(|x| -x).collect();
        let q = quantize(&obs, 0.0);
        let qn = quantize(&neg, 0.0);
        for (a, b) in q.bits.iter().zip(qn.bits.iter()) {
            assert_eq!(a ^ b, 1);
        }
    }

    #[test]
    fn quantize_guard_band_masks_small_components() {
        let q = quantize(&[c(0.05, -3.0), c(-0.5, 0.01)], 0.1);
        assert_eq!(q.mask, vec![true, false, false, true]);
        assert_eq!(q.retained(), vec![1, 1]);
    }

    #[test]
    fn code_constructors_are_sane() {
        let h = BlockCode::hamming_7_4();
        assert_eq!((h.n_code, h.k_code, h.syndrome_len()), (7, 4, 3));
        assert!((h.kappa() - 1.75).abs() < 1e-15);
        let e = BlockCode::extended_hamming_8_4();
        assert_eq!((e.n_code, e.k_code, e.syndrome_len()), (8, 4, 4));
        assert!((e.kappa() - 2.0).abs() < 1e-15);
        let w = BlockCode::hamming_15_11();
        assert_eq!((w.n_code, w.k_code, w.syndrome_len()), (15, 11, 4));
    }

    #[test]
    fn hamming_15_11_corrects_single_errors() {
        let code = BlockCode::hamming_15_11();
        let mut rng = crate::rng::trial_rng(44, 0);
        use rand::Rng;
        for _ in 0..50 {
            let r_a: Vec<u8> = (0..15).map(|_| rng.random_range(0..2u8)).collect();
            let syn = syndrome_over_bits(&r_a, &code);
            for pos in 0..15 {
                let mut r_b = r_a.clone();
                r_b[pos] ^= 1;
                assert_eq!(reconcile_bits(&r_b, &syn, &code).unwrap(), r_a);
            }
        }
    }

    #[test]
    fn rank_deficient_parity_rejected() {
        let bad = vec![vec![1, 0, 1], vec![1, 0, 1]];
        assert!(BlockCode::new(bad, 1, 0).is_err());
    }

    #[test]
    fn zero_bits_zero_syndrome() {
        let code = BlockCode::hamming_7_4();
        let q = QuantizedVector { bits: vec![0; 14], mask: vec![false; 14] };
        assert!(compute_syndrome(&q, &code).iter().all(|&b| b == 0));
    }

    #[test]
    fn codewords_have_zero_syndrome() {
        let code = BlockCode::hamming_7_4();
        let mut count = 0;
        for word in 0u32..128 {
            let bits: Vec<u8> = (0..7).map(|i| (word >> i & 1) as u8).collect();
            if syndrome_over_bits(&bits, &code).iter().all(|&b| b == 0) {
                count += 1;
            }
        }
        assert_eq!(count, 16); // 2^k codewords
    }

    #[test]
    fn syndrome_linearity() {
        let code = BlockCode::extended_hamming_8_4();
        let mut rng = crate::rng::trial_rng(40, 0);
        use rand::Rng;
        for _ in 0..200 {
            let r: Vec<u8> = (0..24).map(|_| rng.random_range(0..2u8)).collect();
            let e: Vec<u8> = (0..24).map(|_| rng.random_range(0..2u8)).collect();
            let rx: Vec<u8> = r.iter().zip(e.iter()).map(|(a, b)| a ^ b).collect();
            let sr = syndrome_over_bits(&r, &code);
            let se = syndrome_over_bits(&e, &code);
            let sx = syndrome_over_bits(&rx, &code);
            let xor: Vec<u8> = sr.iter().zip(se.iter()).map(|(a, b)| a ^ b).collect();
            assert_eq!(sx, xor);
        }
    }

    #[test]
    fn weight_one_error_shifts_syndrome_by_column() {
        let code = BlockCode::hamming_7_4();
        let mut rng = crate::rng::trial_rng(41, 0);
        use rand::Rng;
        for pos in 0..7 {
            let r: Vec<u8> = (0..7).map(|_| rng.random_range(0..2u8)).collect();
            let mut rx = r.clone();
            rx[pos] ^= 1;
            let mut e = vec![0u8; 7];
            e[pos] = 1;
            let expected: Vec<u8> = syndrome_over_bits(&r, &code)
                .iter()
                .zip(syndrome_over_bits(&e, &code).iter())
                .map(|(a, b)| a ^ b)
                .collect();
            assert_eq!(syndrome_over_bits(&rx, &code), expected);
        }
    }

    #[test]
    fn reconcile_identity_when_equal() {
        let code = BlockCode::hamming_7_4();
        let bits: Vec<u8> = vec![1, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 0];
        let q = QuantizedVector { bits: bits.clone(), mask: vec![false; 14] };
        let syn = compute_syndrome(&q, &code);
        assert_eq!(reconcile(&q, &syn, &code).unwrap(), bits);
    }

    #[test]
    fn reconcile_corrects_every_single_bit_error() {
        // Exhaustive over all 128 sender words × 8 error patterns (incl. none).
        let code = BlockCode::hamming_7_4();
        for word in 0u32..128 {
            let r_a: Vec<u8> = (0..7).map(|i| (word >> i & 1) as u8).collect();
            let syn = syndrome_over_bits(&r_a, &code);
            for err in 0..8usize {
                let mut r_b = r_a.clone();
                if err < 7 {
                    r_b[err] ^= 1;
                }
                let rec = reconcile_bits(&r_b, &syn, &code).unwrap();
                assert_eq!(rec, r_a, "word {word} err {err}");
            }
        }
    }

    #[test]
    fn reconcile_two_bit_errors_never_silently_correct() {
        // Hamming(7,4) is perfect: double errors decode to the wrong word.
        let code = BlockCode::hamming_7_4();
        let mut wrong = 0;
        let mut total = 0;
        for word in [0u32, 0b1011001, 0b0110011] {
            let r_a: Vec<u8> = (0..7).map(|i| (word >> i & 1) as u8).collect();
            let syn = syndrome_over_bits(&r_a, &code);
            for e1 in 0..7 {
                for e2 in (e1 + 1)..7 {
                    let mut r_b = r_a.clone();
                    r_b[e1] ^= 1;
                    r_b[e2] ^= 1;
                    total += 1;
                    match reconcile_bits(&r_b, &syn, &code) {
                        Err(Error::ReconcileFailure) => {}
                        Ok(rec) => {
                            assert_ne!(rec, r_a, "double error decoded correctly?!");
                            wrong += 1;
                        }
                        Err(e) => panic!("unexpected {e:?}"),
                    }
                }
            }
        }
        assert_eq!(wrong, total); // all silently wrong; Ver catches them downstream
    }

    #[test]
    fn extended_code_detects_double_errors() {
        let code = BlockCode::extended_hamming_8_4();
        let r_a = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let syn = syndrome_over_bits(&r_a, &code);
        for e1 in 0..8 {
            for e2 in (e1 + 1)..8 {
                let mut r_b = r_a.clone();
                r_b[e1] ^= 1;
                r_b[e2] ^= 1;
                assert_eq!(
                    reconcile_bits(&r_b, &syn, &code),
                    Err(Error::ReconcileFailure),
                    "{e1},{e2}"
                );
            }
        }
    }

    fn budget_for(bits: usize, syndrome: usize) -> AmplificationBudget {
        AmplificationBudget::new(bits as f64, 0.0, syndrome as f64, 0.0).unwrap()
    }

    #[test]
    fn amplify_determinism_and_sensitivity() {
        let bits: Vec<u8> = (0..64).map(|i| (i % 3 == 0) as u8).collect();
        let budget = budget_for(64, 24);
        let k1 = privacy_amplify(&bits, &budget, 32, 24).unwrap();
        let k2 = privacy_amplify(&bits, &budget, 32, 24).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(k1.k_e.len() * 8 + k1.k_i.len() * 8, 32);

        let mut flipped = bits.clone();
        flipped[5] ^= 1;
        let k3 = privacy_amplify(&flipped, &budget, 32, 24).unwrap();
        assert_ne!(k1, k3);
    }

    #[test]
    fn amplify_budget_enforcement() {
        let bits = vec![0u8; 64];
        let zero = AmplificationBudget::new(10.0, 5.0, 5.0, 0.0).unwrap();
        assert_eq!(zero.max_key_bits(), 0.0);
        assert_eq!(
            privacy_amplify(&bits, &zero, 2, 0),
            Err(Error::AmplificationBudgetExceeded)
        );
        // Leakage cap: key + syndrome must fit in the raw bits.
        let wide = budget_for(64, 0);
        assert_eq!(
            privacy_amplify(&bits, &wide, 48, 24),
            Err(Error::AmplificationBudgetExceeded)
        );
        assert!(privacy_amplify(&bits, &wide, 40, 24).is_ok());
        assert!(AmplificationBudget::new(4.0, 3.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn amplify_rejects_odd_or_oversized_lengths() {
        let bits = vec![1u8; 600];
        let b = budget_for(600, 0);
        assert_eq!(privacy_amplify(&bits, &b, 33, 0), Err(Error::KeyLength));
        assert_eq!(privacy_amplify(&bits, &b, 0, 0), Err(Error::KeyLength));
        assert_eq!(privacy_amplify(&bits, &b, 258, 0), Err(Error::KeyLength));
    }

    #[test]
    fn generate_and_receive_agree_on_clean_channel() {
        let code = BlockCode::extended_hamming_8_4();
        let mut rng = crate::rng::trial_rng(42, 0);
        use rand::Rng;
        let obs: Vec<Complex64> =
            (0..64).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let budget = budget_for(128, 64);
        let (ka, syn) = skg_generate(&obs, &code, &budget, 64).unwrap();
        let kb = skg_receive(&obs, &syn, &code, &budget, 64).unwrap();
        assert_eq!(ka, kb);
    }

    #[test]
    fn leakage_accounting_holds_on_pipeline() {
        let code = BlockCode::extended_hamming_8_4();
        let obs: Vec<Complex64> = (0..64).map(|i| c(i as f64 - 31.5, -(i as f64) + 10.0)).collect();
        let budget = budget_for(128, 64);
        let (key, syn) = skg_generate(&obs, &code, &budget, 64).unwrap();
        assert!(key.total_len_bits + syn.len() <= 128);
    }

    #[test]
    fn resumption_zero_secret_equals_plain() {
        let code = BlockCode::extended_hamming_8_4();
        let obs: Vec<Complex64> = (0..64).map(|i| c((i as f64).sin(), (i as f64).cos())).collect();
        let budget = budget_for(128, 64);
        let (plain, syn_plain) = skg_generate(&obs, &code, &budget, 64).unwrap();
        let mut state = ResumptionState::zero(128);
        let (resumed, syn_res) = resumption_generate(&obs, &code, &budget, 64, &mut state).unwrap();
        assert_eq!(plain, resumed);
        assert_eq!(syn_plain, syn_res);
    }

    #[test]
    fn resumption_state_single_use() {
        let code = BlockCode::extended_hamming_8_4();
        let obs: Vec<Complex64> = (0..64).map(|i| c((i as f64).sin(), (i as f64).cos())).collect();
        let budget = budget_for(128, 64);
        let mut state = ResumptionState::zero(128);
        assert!(!state.is_used());
        resumption_generate(&obs, &code, &budget, 64, &mut state).unwrap();
        assert!(state.is_used());
        assert_eq!(
            resumption_generate(&obs, &code, &budget, 64, &mut state).unwrap_err(),
            Error::ResumptionConsumed
        );
    }

    #[test]
    fn resumption_secret_length_mismatch() {
        let code = BlockCode::extended_hamming_8_4();
        let obs: Vec<Complex64> = (0..8).map(|i| c(i as f64 + 1.0, -1.0)).collect();
        let budget = budget_for(16, 8);
        let mut state = ResumptionState::zero(99);
        assert_eq!(
            resumption_generate(&obs, &code, &budget, 8, &mut state).unwrap_err(),
            Error::LengthMismatch
        );
    }

    #[test]
    fn derived_resumption_states_match_across_parties() {
        let key = KeyMaterial { k_e: vec![1; 16], k_i: vec![2; 16], total_len_bits: 256 };
        let a = ResumptionState::derive(&key, 500);
        let b = ResumptionState::derive(&key, 500);
        assert_eq!(a.lookup_id, b.lookup_id);
        assert_eq!(a.secret_bits(), b.secret_bits());
        assert_eq!(a.secret_bits().len(), 500);
        assert!(a.secret_bits().iter().any(|&x| x == 1));
    }

    #[test]
    fn syndrome_wire_roundtrip_and_strictness() {
        let bits: Vec<u8> = vec![1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let wire = encode_syndrome_wire(&bits);
        assert_eq!(wire.len(), 4 + 2);
        assert_eq!(u32::from_be_bytes(wire[..4].try_into().unwrap()), 11);
        assert_eq!(decode_syndrome_wire(&wire).unwrap(), bits);

        let mut truncated = wire.clone();
        truncated.pop();
        assert_eq!(decode_syndrome_wire(&truncated), Err(Error::DecodeFailure));

        let mut padded = wire.clone();
        padded[5] |= 1; // nonzero padding bit
        assert_eq!(decode_syndrome_wire(&padded), Err(Error::DecodeFailure));

        assert_eq!(decode_syndrome_wire(&[0, 0]), Err(Error::DecodeFailure));
    }

    #[test]
    fn pack_unpack_roundtrip() {
        use rand::Rng;
        let mut rng = crate::rng::trial_rng(43, 0);
        for len in [0usize, 1, 7, 8, 9, 63, 64, 65] {
            let bits: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
            assert_eq!(unpack_bits(&pack_bits(&bits), len), bits);
        }
    }
}
