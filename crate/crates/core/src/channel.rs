//! Rayleigh BF-AWGN channel model with imperfect CSI.
//!
//! Each coherence block draws i.i.d. fading coefficients h_j ~ CN(0, σ²)
//! on N orthogonal subcarriers. Pilots of power P give Alice and Bob the
//! reciprocal observations
//!
//!   x_A = √P·h + z_A,   x_B = √P·h + z_B,   z ~ CN(0, I),
//!
//! while Eve observes an independent channel h_E. Alice's CSI estimate is
//! ĥ = h + h̃ with h̃ ~ CN(0, σ_e²); the estimated gains
//! ĝ_j = |ĥ_j|² / (σ_e²P + 1) are returned sorted in descending order
//! together with the sorting permutation.
//!
//! Noise variance is fixed at one on every link, so SNR enters purely
//! through P and σ².

pub use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Static parameters of the multicarrier channel.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    /// Number of orthogonal subcarriers N.
    pub n_subcarriers: usize,
    /// Pilot (and total per-subcarrier average) power P; linear, noise is unit.
    pub pilot_power: f64,
    /// Fading coefficient variance σ².
    pub gain_variance: f64,
    /// CSI estimation error variance σ_e².
    pub est_error_variance: f64,
    /// Master seed for the per-trial streams.
    pub master_seed: u64,
}

impl ChannelConfig {
    pub fn new(
        n_subcarriers: usize,
        pilot_power: f64,
        gain_variance: f64,
        est_error_variance: f64,
        master_seed: u64,
    ) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidConfig("need at least one subcarrier".into()));
        }
        if !(pilot_power > 0.0) || !pilot_power.is_finite() {
            return Err(Error::InvalidConfig("pilot power must be positive".into()));
        }
        if !(gain_variance > 0.0) || !gain_variance.is_finite() {
            return Err(Error::InvalidConfig("gain variance must be positive".into()));
        }
        if !(est_error_variance >= 0.0) || !est_error_variance.is_finite() {
            return Err(Error::InvalidConfig(
                "estimation error variance must be non-negative".into(),
            ));
        }
        Ok(Self {
            n_subcarriers,
            pilot_power,
            gain_variance,
            est_error_variance,
            master_seed,
        })
    }
}

/// One coherence-block draw.
///
/// `h`, `h_hat` and the observation vectors are in natural subcarrier
/// order; `g_hat` is sorted descending and `perm[i]` is the natural index
/// of the i-th strongest estimated gain.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub h_hat: Vec<Complex64>,
    pub g_hat: Vec<f64>,
    pub obs_alice: Vec<Complex64>,
    pub obs_bob: Vec<Complex64>,
    pub obs_eve: Vec<Complex64>,
    pub perm: Vec<usize>,
}

impl ChannelRealization {
    /// Estimated gains back in natural subcarrier order.
    pub fn g_hat_unsorted(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.g_hat.len()];
        for (rank, &j) in self.perm.iter().enumerate() {
            g[j] = self.g_hat[rank];
        }
        g
    }
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws one coherence block. Deterministic given (master_seed, trial_index).
///
/// The draw order — h, z_A, z_B, h_E, z_E, h̃, each vector-major — is part
/// of the determinism contract; draws are consumed even when a variance is
/// zero so streams stay aligned across configurations.
pub fn sample_channel(cfg: &ChannelConfig, trial_index: u64) -> ChannelRealization {
    let n = cfg.n_subcarriers;
    let mut rng = trial_rng(cfg.master_seed, trial_index);

    let h: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, cfg.gain_variance)).collect();
    let z_a: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let z_b: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let h_e: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, cfg.gain_variance)).collect();
    let z_e: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let h_tilde: Vec<Complex64> =
        (0..n).map(|_| complex_normal(&mut rng, cfg.est_error_variance)).collect();

    let sqrt_p = cfg.pilot_power.sqrt();
    let obs_alice: Vec<Complex64> = (0..n).map(|j| sqrt_p * h[j] + z_a[j]).collect();
    let obs_bob: Vec<Complex64> = (0..n).map(|j| sqrt_p * h[j] + z_b[j]).collect();
    let obs_eve: Vec<Complex64> = (0..n).map(|j| sqrt_p * h_e[j] + z_e[j]).collect();

    let h_hat: Vec<Complex64> = (0..n).map(|j| h[j] + h_tilde[j]).collect();
    let denom = cfg.est_error_variance * cfg.pilot_power + 1.0;
    let g_unsorted: Vec<f64> = h_hat.iter().map(|c| c.norm_sqr() / denom).collect();

    // Descending sort, ties broken by natural index for determinism.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| g_unsorted[b].total_cmp(&g_unsorted[a]).then(a.cmp(&b)));
    let g_hat: Vec<f64> = perm.iter().map(|&j| g_unsorted[j]).collect();

    ChannelRealization {
        h,
        h_hat,
        g_hat,
        obs_alice,
        obs_bob,
        obs_eve,
        perm,
    }
}

/// Per-rank variances of the descending-ordered gains:
/// σ_j² = σ² Σ_{q=j}^{N} 1/q², j = 1..N.
pub fn ordered_variance(n: usize, sigma2: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig("sigma2 must be positive".into()));
    }
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for j in (1..=n).rev() {
        acc += 1.0 / (j as f64 * j as f64);
        out[j - 1] = sigma2 * acc;
    }
    Ok(out)
}

/// Density of the j-th largest of n i.i.d. exponential(σ²) gains,
///
///   f(g) = N! / (σ² (N−j)! (j−1)!) · (1 − e^{−g/σ²})^{N−j} · (e^{−g/σ²})^{j}.
///
/// Validation/plotting aid only; nothing load-bearing evaluates it.
pub fn order_stat_pdf(n: usize, j: usize, sigma2: f64, g: f64) -> Result<f64> {
    if n == 0 || j == 0 || j > n {
        return Err(Error::InvalidConfig("rank out of range".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig("sigma2 must be positive".into()));
    }
    if !(g >= 0.0) {
        return Err(Error::InvalidConfig("gain must be non-negative".into()));
    }
    // ln N!/((N-j)!(j-1)!) keeps the coefficient finite for any sane n.
    let ln_coef = ln_factorial(n) - ln_factorial(n - j) - ln_factorial(j - 1);
    let u = (-g / sigma2).exp();
    let density = (ln_coef.exp() / sigma2) * (1.0 - u).powi((n - j) as i32) * u.powi(j as i32);
    Ok(density)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Sum SKG rate over the given ranks:
/// C_SKG = Σ log2(1 + P σ_j² / (2 + 1/(P σ_j²))).
///
/// For the sequential scheme (all subcarriers, no ordering) pass the flat
/// variance for every rank.
pub fn skg_rate(power: f64, rank_variances: &[f64], skg_ranks: &[usize]) -> f64 {
    debug_assert!(power > 0.0);
    skg_ranks
        .iter()
        .map(|&j| {
            let pv = power * rank_variances[j];
            (1.0 + pv / (2.0 + 1.0 / pv)).log2()
        })
        .sum()
}

/// Per-rank order-statistics summary for a given (N, σ²).
#[derive(Debug, Clone)]
pub struct OrderStatsModel {
    pub n: usize,
    pub sigma2: f64,
    pub per_rank_variance: Vec<f64>,
}

impl OrderStatsModel {
    pub fn new(n: usize, sigma2: f64) -> Result<Self> {
        Ok(Self {
            n,
            sigma2,
            per_rank_variance: ordered_variance(n, sigma2)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, p: f64, s2: f64, se2: f64, seed: u64) -> ChannelConfig {
        ChannelConfig::new(n, p, s2, se2, seed).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig::new(0, 1.0, 1.0, 0.0, 1).is_err());
        assert!(ChannelConfig::new(4, 0.0, 1.0, 0.0, 1).is_err());
        assert!(ChannelConfig::new(4, 1.0, -1.0, 0.0, 1).is_err());
        assert!(ChannelConfig::new(4, 1.0, 1.0, -0.1, 1).is_err());
    }

    #[test]
    fn zero_estimation_error_gives_exact_estimates() {
        let r = sample_channel(&cfg(16, 10.0, 1.0, 0.0, 3), 0);
        for (a, b) in r.h.iter().zip(r.h_hat.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = cfg(8, 10.0, 1.0, 0.3, 99);
        let a = sample_channel(&c, 5);
        let b = sample_channel(&c, 5);
        for (x, y) in a.obs_alice.iter().zip(b.obs_alice.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        let other = sample_channel(&c, 6);
        assert_ne!(a.obs_alice[0], other.obs_alice[0]);
    }

    #[test]
    fn gains_sorted_and_permutation_inverts() {
        let r = sample_channel(&cfg(32, 10.0, 1.0, 0.2, 7), 1);
        for w in r.g_hat.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let unsorted = r.g_hat_unsorted();
        let denom = 0.2 * 10.0 + 1.0;
        for j in 0..32 {
            assert!((unsorted[j] - r.h_hat[j].norm_sqr() / denom).abs() < 1e-15);
        }
    }

    #[test]
    fn fading_moment_matches_declared_variance() {
        // 10^4 gain samples: empirical E|h|² within 2% of σ².
        let c = cfg(10_000, 1.0, 2.5, 0.0, 11);
        let r = sample_channel(&c, 0);
        let mean: f64 = r.h.iter().map(|c| c.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!((mean - 2.5).abs() / 2.5 < 0.02, "mean {mean}");
    }

    #[test]
    fn reciprocity_noise_variance_is_two() {
        // x_A − x_B = z_A − z_B: zero mean, complex variance 2.
        let c = cfg(500, 10.0, 1.0, 0.0, 21);
        let mut acc = 0.0;
        let mut count = 0usize;
        for t in 0..200 {
            let r = sample_channel(&c, t);
            for j in 0..500 {
                acc += (r.obs_alice[j] - r.obs_bob[j]).norm_sqr();
                count += 1;
            }
        }
        let var = acc / count as f64;
        assert!((var - 2.0).abs() / 2.0 < 0.03, "var {var}");
    }

    #[test]
    fn eve_channel_uncorrelated() {
        let c = cfg(1000, 10.0, 1.0, 0.0, 31);
        let mut dot = Complex64::new(0.0, 0.0);
        let mut na = 0.0;
        let mut nb = 0.0;
        for t in 0..100 {
            let r = sample_channel(&c, t);
            for j in 0..1000 {
                dot += r.h[j] * r.obs_eve[j].conj();
                na += r.h[j].norm_sqr();
                nb += r.obs_eve[j].norm_sqr();
            }
        }
        let corr = dot.norm() / (na.sqrt() * nb.sqrt());
        assert!(corr < 0.01, "corr {corr}");
    }

    #[test]
    fn ordered_variance_small_cases() {
        assert_eq!(ordered_variance(2, 1.0).unwrap(), vec![1.25, 0.25]);
        assert_eq!(ordered_variance(1, 3.0).unwrap(), vec![3.0]);
        assert!(ordered_variance(0, 1.0).is_err());
    }

    #[test]
    fn ordered_variance_telescopes() {
        let v = ordered_variance(24, 1.7).unwrap();
        for j in 1..24 {
            let step = v[j - 1] - v[j];
            let expect = 1.7 / (j as f64 * j as f64);
            assert!((step - expect).abs() < 1e-12);
        }
        assert!((v[23] - 1.7 / (24.0 * 24.0)).abs() < 1e-15);
    }

    #[test]
    fn ordered_variance_matches_monte_carlo() {
        // Empirical variance of the j-th largest of 24 exp(1) draws.
        use rand::Rng;
        let n = 24;
        let draws = 100_000;
        let mut rng = trial_rng(77, 0);
        let mut sums = vec![0.0; n];
        let mut sq = vec![0.0; n];
        let mut g = vec![0.0; n];
        for _ in 0..draws {
            for x in g.iter_mut() {
                let u: f64 = rng.random::<f64>();
                *x = -(1.0 - u).ln();
            }
            g.sort_by(|a, b| b.total_cmp(a));
            for j in 0..n {
                sums[j] += g[j];
                sq[j] += g[j] * g[j];
            }
        }
        let analytic = ordered_variance(n, 1.0).unwrap();
        for j in 0..n {
            let m = sums[j] / draws as f64;
            let var = sq[j] / draws as f64 - m * m;
            let rel = (var - analytic[j]).abs() / analytic[j];
            assert!(rel < 0.03, "rank {j}: {var} vs {}", analytic[j]);
        }
    }

    #[test]
    fn pdf_single_sample_is_exponential() {
        for g in [0.0, 0.3, 1.0, 4.0] {
            let f = order_stat_pdf(1, 1, 1.0, g).unwrap();
            assert!((f - (-g).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        // Simpson over [0, 40σ²] leaves < 1e-12 in the tail.
        for (n, j) in [(1, 1), (2, 1), (2, 2), (8, 3), (24, 12)] {
            let sigma2 = 1.3;
            let upper = 40.0 * sigma2;
            let steps = 40_000;
            let h = upper / steps as f64;
            let mut integral = order_stat_pdf(n, j, sigma2, 0.0).unwrap()
                + order_stat_pdf(n, j, sigma2, upper).unwrap();
            for k in 1..steps {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                integral += w * order_stat_pdf(n, j, sigma2, h * k as f64).unwrap();
            }
            integral *= h / 3.0;
            assert!((integral - 1.0).abs() < 1e-4, "n={n} j={j}: {integral}");
        }
    }

    #[test]
    fn pdf_matches_max_of_two_histogram() {
        // Bin probabilities of max(exp, exp) vs. the pdf integrated per bin.
        use rand::Rng;
        let mut rng = trial_rng(5, 0);
        let draws = 1_000_000;
        let nbins = 25;
        let width = 0.2;
        let mut hist = vec![0usize; nbins];
        for _ in 0..draws {
            let a: f64 = -(1.0 - rng.random::<f64>()).ln();
            let b: f64 = -(1.0 - rng.random::<f64>()).ln();
            let m = a.max(b);
            let bin = (m / width) as usize;
            if bin < nbins {
                hist[bin] += 1;
            }
        }
        for bin in 0..nbins {
            // Simpson on the bin.
            let (a, b) = (bin as f64 * width, (bin + 1) as f64 * width);
            let mid = 0.5 * (a + b);
            let p = (width / 6.0)
                * (order_stat_pdf(2, 1, 1.0, a).unwrap()
                    + 4.0 * order_stat_pdf(2, 1, 1.0, mid).unwrap()
                    + order_stat_pdf(2, 1, 1.0, b).unwrap());
            if p > 0.01 {
                let emp = hist[bin] as f64 / draws as f64;
                assert!((emp - p).abs() / p < 0.03, "bin {bin}: {emp} vs {p}");
            }
        }
    }

    #[test]
    fn pdf_rejects_bad_arguments() {
        assert!(order_stat_pdf(4, 0, 1.0, 0.5).is_err());
        assert!(order_stat_pdf(4, 5, 1.0, 0.5).is_err());
        assert!(order_stat_pdf(4, 2, 1.0, -0.5).is_err());
    }

    #[test]
    fn skg_rate_direct_substitution() {
        let r = skg_rate(10.0, &[1.0], &[0]);
        assert!((r - (1.0f64 + 10.0 / 2.1).log2()).abs() < 1e-12);
        assert!((r - 2.5264).abs() < 1e-3);
    }

    #[test]
    fn skg_rate_vanishes_with_power() {
        let r = skg_rate(1e-12, &[1.0], &[0]);
        assert!(r < 1e-11);
        assert_eq!(skg_rate(10.0, &[1.0], &[]), 0.0);
    }

    #[test]
    fn skg_rate_sequential_is_n_times_single() {
        let n = 24;
        let flat = vec![1.0; n];
        let ranks: Vec<usize> = (0..n).collect();
        let total = skg_rate(10.0, &flat, &ranks);
        let single = skg_rate(10.0, &flat, &[0]);
        assert!((total - n as f64 * single).abs() < 1e-9);
    }

    #[test]
    fn skg_rate_monotone_in_power_and_variance() {
        let v = [0.5, 1.0];
        let ranks = [0, 1];
        let base = skg_rate(5.0, &v, &ranks);
        assert!(skg_rate(6.0, &v, &ranks) > base);
        assert!(skg_rate(5.0, &[0.6, 1.0], &ranks) > base);
    }
}
