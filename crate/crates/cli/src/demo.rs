//! End-to-end protocol walkthrough: PUF authentication, one pipelined
//! SKG + AE exchange, then a 0-RTT resumption session. Prints every
//! message with its size and each verification outcome.

use skg_core::ae::{decode_extended, encode_extended, open, open_with_key, seal};
use skg_core::channel::{sample_channel, ChannelConfig, Complex64};
use skg_core::puf::{authenticate, enroll, CrpDatabase, PufDevice};
use skg_core::rng::{derive_seed, trial_rng};
use skg_core::skg::{
    resumption_generate, resumption_receive, skg_generate, AmplificationBudget, BlockCode,
    ResumptionState,
};
use skg_core::Error;

const N: usize = 12;
const BLOCKS: usize = 22;
const RAW_BITS: usize = 2 * N * BLOCKS;
const KEY_BITS: usize = 256;
/// 50 dB advantage-distillation SNR keeps the session abort rate under 1%
/// with the (8,4) code.
const PILOT_POWER: f64 = 1e5;
const PUF_CELLS: usize = 64;
const PUF_NOISE_SIGMA: f64 = 0.006;

pub struct DemoOutcome {
    pub transcript: String,
    pub ok: bool,
}

struct Transcript {
    lines: Vec<String>,
    ok: bool,
}

impl Transcript {
    fn say(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn verify(&mut self, what: &str, pass: bool) {
        self.lines.push(format!("{what}: {}", if pass { "ok" } else { "FAILED" }));
        self.ok &= pass;
    }
}

fn gather(cfg: &ChannelConfig, first_trial: u64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut alice = Vec::with_capacity(N * BLOCKS);
    let mut bob = Vec::with_capacity(N * BLOCKS);
    for b in 0..BLOCKS as u64 {
        let r = sample_channel(cfg, first_trial + b);
        alice.extend_from_slice(&r.obs_alice);
        bob.extend_from_slice(&r.obs_bob);
    }
    (alice, bob)
}

pub fn run_demo(seed: u64, tamper_bit: Option<usize>, exhaust_crps: bool) -> DemoOutcome {
    let mut t = Transcript { lines: Vec::new(), ok: true };
    match run_demo_inner(&mut t, seed, tamper_bit, exhaust_crps) {
        Ok(()) => {}
        Err(e) => {
            t.say(format!("protocol error: {e}"));
            t.ok = false;
        }
    }
    t.say(format!("RESULT: {}", if t.ok { "PASS" } else { "FAIL" }));
    DemoOutcome { transcript: t.lines.join("\n") + "\n", ok: t.ok }
}

fn run_demo_inner(
    t: &mut Transcript,
    seed: u64,
    tamper_bit: Option<usize>,
    exhaust_crps: bool,
) -> Result<(), Error> {
    let code = BlockCode::extended_hamming_8_4();
    let syndrome_bits = code.syndrome_bits_for(RAW_BITS);
    let budget = AmplificationBudget::new(
        RAW_BITS as f64,
        0.0,
        syndrome_bits as f64,
        (RAW_BITS - syndrome_bits - KEY_BITS) as f64,
    )?;

    // --- PUF enrolment and authentication -------------------------------
    t.say("== PUF enrolment ==");
    let device = PufDevice::new("node-a", derive_seed(seed, "puf-device"), PUF_NOISE_SIGMA, PUF_CELLS);
    let mut verifier_rng = trial_rng(derive_seed(seed, "verifier"), 0);
    let n_crps = if exhaust_crps { 3 } else { 8 };
    let records = enroll(&device, n_crps, &code, &mut verifier_rng)?;
    t.say(format!(
        "enrolled {} CRPs for device {:?} ({} B helper data, 32 B digest each)",
        records.len(),
        String::from_utf8_lossy(&device.device_id),
        records[0].helper_data.len(),
    ));
    let mut db = CrpDatabase::new();
    db.insert(&device.device_id, records);

    t.say("== PUF authentication ==");
    let accepted = authenticate(&device, &mut db, &code, &mut verifier_rng)?;
    t.verify("initial authentication", accepted);

    if exhaust_crps {
        while db.remaining(&device.device_id) > 0 {
            let pass = authenticate(&device, &mut db, &code, &mut verifier_rng)?;
            t.say(format!(
                "re-authentication via PUF: {} ({} CRPs left)",
                if pass { "ok" } else { "FAILED" },
                db.remaining(&device.device_id)
            ));
        }
        match authenticate(&device, &mut db, &code, &mut verifier_rng) {
            Err(Error::EnrolmentExhausted) => {
                t.say("re-authentication via PUF: enrolment exhausted (switching to 0-RTT resumption)")
            }
            other => {
                t.verify("expected exhaustion", false);
                t.say(format!("unexpected outcome: {other:?}"));
            }
        }
    }

    // --- Initial pipelined SKG + AE session ------------------------------
    t.say("== pipelined SKG + encrypted transfer ==");
    let channel = ChannelConfig::new(N, PILOT_POWER, 1.0, 0.0, derive_seed(seed, "channel"))?;
    let (alice_obs, bob_obs) = gather(&channel, 0);
    t.say(format!(
        "advantage distillation: {BLOCKS} coherence blocks x {N} subcarriers -> {RAW_BITS} raw bits/party"
    ));
    let (alice_key, syndrome) = skg_generate(&alice_obs, &code, &budget, KEY_BITS)?;
    t.say(format!(
        "alice key: {} bits (k_e {} B, k_i {} B); syndrome: {} bits",
        alice_key.total_len_bits,
        alice_key.k_e.len(),
        alice_key.k_i.len(),
        syndrome.len()
    ));

    let resumption_alice = ResumptionState::derive(&alice_key, RAW_BITS);
    let message = b"low-latency frame payload (demo)".to_vec();
    let ext = seal(&alice_key, &message, &syndrome, &resumption_alice.lookup_id)?;
    let mut wire = encode_extended(&ext);
    t.say(format!(
        "extended ciphertext [s||c||t]: {} + {} + 32 = {} B on the wire",
        ext.syndrome.len(),
        ext.ciphertext.len(),
        wire.len()
    ));

    if let Some(bit) = tamper_bit {
        let bit = bit % (wire.len() * 8);
        wire[bit / 8] ^= 1 << (bit % 8);
        t.say(format!("adversary flips wire bit {bit}"));
    }

    match decode_extended(&wire, &resumption_alice.lookup_id)
        .and_then(|ext| open(&bob_obs, &code, &budget, &ext, KEY_BITS))
    {
        Ok(m) => {
            t.verify("bob reconciles, verifies and decrypts", m == message);
            t.say(format!("bob received {} B of plaintext", m.len()));
        }
        Err(e) => {
            t.verify(&format!("bob open ({e})"), false);
            return Ok(()); // failure already recorded; demo ends here
        }
    }

    // --- 0-RTT resumption session ----------------------------------------
    t.say("== 0-RTT resumption ==");
    let bob_key = skg_core::skg::skg_receive(&bob_obs, &syndrome, &code, &budget, KEY_BITS)?;
    let mut rs_alice = resumption_alice;
    let mut rs_bob = ResumptionState::derive(&bob_key, RAW_BITS);
    t.verify("look-up identifiers match", rs_alice.lookup_id == rs_bob.lookup_id);
    t.say(format!(
        "resumption secret: {RAW_BITS} bits, look-up id {} B, single use",
        rs_alice.lookup_id.len()
    ));

    let (alice_obs2, bob_obs2) = gather(&channel, BLOCKS as u64);
    let (key2, syndrome2) =
        resumption_generate(&alice_obs2, &code, &budget, KEY_BITS, &mut rs_alice)?;
    let message2 = b"resumed session payload".to_vec();
    let ext2 = seal(&key2, &message2, &syndrome2, &rs_alice.lookup_id)?;
    let wire2 = encode_extended(&ext2);
    t.say(format!("resumed extended ciphertext: {} B on the wire", wire2.len()));

    let received = decode_extended(&wire2, &rs_bob.lookup_id).and_then(|ext| {
        let key = resumption_receive(&bob_obs2, &syndrome2, &code, &budget, KEY_BITS, &mut rs_bob)?;
        open_with_key(&key, &ext, 0)
    });
    match received {
        Ok(m) => t.verify("bob opens resumed session", m == message2),
        Err(e) => t.verify(&format!("bob opens resumed session ({e})"), false),
    }
    t.verify(
        "resumption states consumed",
        rs_alice.is_used() && rs_bob.is_used(),
    );
    Ok(())
}
