//! Scalar performance metrics aggregated over Monte Carlo trials.
//!
//! The effective rate of a subcarrier set D at delay exponent α is the
//! per-subcarrier-expectation form
//!
//!   E_C(θ) = −(1/α) Σ_{i∈D} log2( E[ (1 + p_i ĝ_i)^{−α/F} ] ),
//!
//! valid for i.i.d. gains, with the frame size F decoupled from |D| so the
//! same routine covers the parallel scheme (F = |D|), the syndrome side
//! (F = N − |D|) and the sequential scheme (F = N(L+M)/L, fractional).
//! α → 0 recovers the mean rate E[(1/F) Σ R_i].

use crate::error::{Error, Result};
use crate::power::effective_power_allocation;
use crate::scheduler::Allocation;

/// Statistical delay constraint: θ and the frame-bandwidth product map to
/// the working exponent α = θ·T_f·B / ln 2.
#[derive(Debug, Clone, Copy)]
pub struct DelayConfig {
    pub theta: f64,
    pub frame_duration_bandwidth: f64,
    pub alpha: f64,
}

impl DelayConfig {
    pub fn new(theta: f64, frame_duration_bandwidth: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidConfig("theta must be non-negative".into()));
        }
        if !(frame_duration_bandwidth > 0.0) {
            return Err(Error::InvalidConfig("T_f·B must be positive".into()));
        }
        Ok(Self {
            theta,
            frame_duration_bandwidth,
            alpha: theta * frame_duration_bandwidth / std::f64::consts::LN_2,
        })
    }
}

/// Frame counts of the sequential scheme: M reconciliation frames per L
/// data frames, efficiency η = L/(L+M).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequentialAccounting {
    pub m_frames: u64,
    pub l_frames: u64,
}

impl SequentialAccounting {
    pub fn eta(&self) -> f64 {
        if self.l_frames == 0 {
            0.0
        } else {
            self.l_frames as f64 / (self.l_frames + self.m_frames) as f64
        }
    }
}

/// η_parallel = E[Σ_{j∈D} R_j] / E[C], a ratio of sample means.
pub fn parallel_efficiency(trials: &[(Allocation, f64)]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let achieved: f64 = trials.iter().map(|(a, _)| a.achieved).sum();
    let cap: f64 = trials.iter().map(|(_, c)| c).sum();
    if cap == 0.0 {
        return Err(Error::ZeroCapacity);
    }
    Ok(achieved / cap)
}

/// M = ⌈κ C_SKG / E[C_R]⌉ and L = ⌊C_SKG / (β E[C])⌋, as printed; M is
/// clamped to at least one frame.
pub fn sequential_accounting(
    c_skg: f64,
    mean_recon_rate: f64,
    mean_capacity: f64,
    params: &crate::scheduler::SecurityParams,
) -> Result<SequentialAccounting> {
    if !(mean_recon_rate > 0.0) || !(mean_capacity > 0.0) {
        return Err(Error::ZeroCapacity);
    }
    if !(c_skg >= 0.0) {
        return Err(Error::InvalidConfig("C_SKG must be non-negative".into()));
    }
    let m = ((params.kappa * c_skg / mean_recon_rate).ceil() as u64).max(1);
    let l = (c_skg / (params.beta * mean_capacity)).floor() as u64;
    Ok(SequentialAccounting { m_frames: m, l_frames: l })
}

/// Equivalent frame count for the sequential effective rate,
/// F = N(L+M)/L. Fractional in general.
pub fn sequential_equivalent_frames(n: usize, acct: &SequentialAccounting) -> Result<f64> {
    if acct.l_frames == 0 {
        return Err(Error::ZeroDataFrames);
    }
    Ok(n as f64 * (acct.l_frames + acct.m_frames) as f64 / acct.l_frames as f64)
}

/// One per-rank effective-rate term, −(1/α)·log2 E[2^{−αR/F}], evaluated
/// with the worst-case rate factored out so the moment cannot underflow
/// for large α: the shifted summands lie in (0, 1] with at least one
/// equal to one.
fn effective_term(column: impl Iterator<Item = f64> + Clone, alpha: f64, frame: f64) -> f64 {
    let min = column.clone().fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in column {
        sum += (-alpha * (r - min) / frame).exp2();
        count += 1;
    }
    min / frame - (sum / count as f64).log2() / alpha
}

/// Effective rate of the rates in `rates_per_trial` (trials × members) at
/// frame size `frame` and exponent `alpha`. Empty member set gives 0.
pub fn effective_rate(rates_per_trial: &[Vec<f64>], frame: f64, alpha: f64) -> f64 {
    assert!(alpha >= 0.0);
    if rates_per_trial.is_empty() || rates_per_trial[0].is_empty() {
        return 0.0;
    }
    assert!(frame >= 1.0);
    let trials = rates_per_trial.len() as f64;
    let members = rates_per_trial[0].len();
    if alpha == 0.0 {
        let sum: f64 = rates_per_trial.iter().flat_map(|r| r.iter()).sum();
        return sum / (frame * trials);
    }
    (0..members)
        .map(|i| effective_term(rates_per_trial.iter().map(|r| r[i]), alpha, frame))
        .sum()
}

/// Rate samples under a fixed power policy, one row per trial and one
/// column per subcarrier; the shared pool behind every effective-rate
/// evaluation so that candidate partitions are compared on common random
/// numbers. Columns should be identically distributed (natural subcarrier
/// order) when the factorized i.i.d. expectation is relied upon.
#[derive(Debug, Clone)]
pub struct EffectiveRatePool {
    rates: Vec<Vec<f64>>,
    n: usize,
}

impl EffectiveRatePool {
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.first().map(|r| r.len()).unwrap_or(0);
        if n == 0 || rates.is_empty() {
            return Err(Error::InvalidConfig("empty rate pool".into()));
        }
        if rates.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("ragged rate pool".into()));
        }
        Ok(Self { rates, n })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n
    }

    pub fn n_trials(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    /// Mean rate per rank.
    pub fn mean_rates(&self) -> Vec<f64> {
        let t = self.rates.len() as f64;
        (0..self.n)
            .map(|i| self.rates.iter().map(|r| r[i]).sum::<f64>() / t)
            .collect()
    }

    /// Effective rate of the ranks in `set` at frame size `frame`.
    pub fn effective_sum(&self, set: &[usize], frame: f64, alpha: f64) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        assert!(frame >= 1.0);
        let trials = self.rates.len() as f64;
        if alpha == 0.0 {
            let sum: f64 = set
                .iter()
                .map(|&i| self.rates.iter().map(|r| r[i]).sum::<f64>())
                .sum();
            return sum / (frame * trials);
        }
        set.iter()
            .map(|&i| effective_term(self.rates.iter().map(|r| r[i]), alpha, frame))
            .sum()
    }

    /// terms[f-1][i] = −(1/α)·log2 E[(1 + p_i ĝ_i)^{−α/f}] for every
    /// integer frame size; lets partition searches re-evaluate candidates
    /// in O(1) per rank instead of re-reducing the trial axis.
    pub fn term_table(&self, alpha: f64) -> Vec<Vec<f64>> {
        assert!(alpha > 0.0);
        (1..=self.n)
            .map(|f| {
                (0..self.n)
                    .map(|i| effective_term(self.rates.iter().map(|r| r[i]), alpha, f as f64))
                    .collect()
            })
            .collect()
    }
}

/// Maximum achievable effective capacity over all N subcarriers: the
/// per-trial optimal policy p_i* is inserted into the effective rate at
/// full frame size F = N.
pub fn optimal_effective_capacity(
    g_hat_trials: &[Vec<f64>],
    total_power: f64,
    alpha: f64,
) -> Result<f64> {
    if g_hat_trials.is_empty() {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let n = g_hat_trials[0].len();
    let mut rates = Vec::with_capacity(g_hat_trials.len());
    for g in g_hat_trials {
        let policy = effective_power_allocation(g, total_power, alpha)?;
        rates.push(
            g.iter()
                .zip(policy.powers.iter())
                .map(|(&gi, &pi)| (1.0 + gi * pi).log2())
                .collect::<Vec<f64>>(),
        );
    }
    Ok(effective_rate(&rates, n as f64, alpha))
}

/// Delay-outage approximation Pr[Delay > D_max] ≈ Pr[Q(∞) > 0]·e^{−θζD_max}.
pub fn delay_outage(theta: f64, arrival_rate: f64, d_max: f64, p_nonempty: f64) -> f64 {
    assert!(theta >= 0.0 && arrival_rate >= 0.0 && d_max >= 0.0);
    assert!((0.0..=1.0).contains(&p_nonempty));
    p_nonempty * (-theta * arrival_rate * d_max).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::SecurityParams;
    use rand::Rng;

    fn alloc(rates: Vec<f64>, data: Vec<usize>, budget: f64) -> Allocation {
        Allocation::from_data_set(rates, data, budget)
    }

    #[test]
    fn delay_config_alpha() {
        let d = DelayConfig::new(100.0, 1.0).unwrap();
        assert!((d.alpha - 100.0 / std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(DelayConfig::new(0.0, 1.0).unwrap().alpha, 0.0);
        assert!(DelayConfig::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn parallel_efficiency_bounds() {
        let r = vec![2.0, 1.0];
        let full = alloc(r.clone(), vec![0, 1], 10.0);
        let empty = alloc(r.clone(), vec![], 10.0);
        let trials = vec![(full, 3.0)];
        assert_eq!(parallel_efficiency(&trials).unwrap(), 1.0);
        let trials = vec![(empty, 3.0)];
        assert_eq!(parallel_efficiency(&trials).unwrap(), 0.0);
        assert!(parallel_efficiency(&[]).is_err());
    }

    #[test]
    fn parallel_efficiency_zero_capacity_errors() {
        let a = alloc(vec![0.0], vec![], 0.0);
        assert_eq!(parallel_efficiency(&[(a, 0.0)]), Err(Error::ZeroCapacity));
    }

    #[test]
    fn sequential_accounting_examples() {
        let params = SecurityParams::new(2.0, 0.1).unwrap();
        let acct = sequential_accounting(10.0, 7.0, 12.0, &params).unwrap();
        assert_eq!(acct.m_frames, 3); // ⌈20/7⌉
        assert_eq!(acct.l_frames, 8); // ⌊10/1.2⌋
        assert!((acct.eta() - 8.0 / 11.0).abs() < 1e-15);

        // κ C_SKG ≤ E[C_R] → one frame suffices.
        let p1 = SecurityParams::new(1.0, 0.5).unwrap();
        assert_eq!(sequential_accounting(5.0, 5.0, 10.0, &p1).unwrap().m_frames, 1);
        assert_eq!(sequential_accounting(3.0, 5.0, 10.0, &p1).unwrap().m_frames, 1);
    }

    #[test]
    fn sequential_accounting_zero_data_frames() {
        let params = SecurityParams::new(2.0, 1.0).unwrap();
        let acct = sequential_accounting(5.0, 10.0, 10.0, &params).unwrap();
        assert_eq!(acct.l_frames, 0);
        assert_eq!(acct.eta(), 0.0);
    }

    #[test]
    fn equivalent_frames_examples() {
        let a = SequentialAccounting { m_frames: 3, l_frames: 8 };
        assert!((sequential_equivalent_frames(12, &a).unwrap() - 16.5).abs() < 1e-12);
        let b = SequentialAccounting { m_frames: 0, l_frames: 4 };
        assert_eq!(sequential_equivalent_frames(7, &b).unwrap(), 7.0);
        let c = SequentialAccounting { m_frames: 5, l_frames: 5 };
        assert_eq!(sequential_equivalent_frames(9, &c).unwrap(), 18.0);
        let z = SequentialAccounting { m_frames: 2, l_frames: 0 };
        assert_eq!(sequential_equivalent_frames(9, &z), Err(Error::ZeroDataFrames));
    }

    #[test]
    fn eta_decreases_in_m() {
        let mut last = 1.0;
        for m in 1..10 {
            let eta = SequentialAccounting { m_frames: m, l_frames: 8 }.eta();
            assert!(eta > 0.0 && eta < 1.0);
            assert!(eta < last);
            last = eta;
        }
    }

    #[test]
    fn effective_rate_deterministic_channel() {
        // Identical trials with R̃ = 2 give E_C = 2 for every α.
        let rates = vec![vec![3.0, 1.0]; 7];
        for alpha in [0.0, 1e-3, 1.0, 50.0] {
            let e = effective_rate(&rates, 2.0, alpha);
            assert!((e - 2.0).abs() < 1e-9, "alpha {alpha}: {e}");
        }
    }

    #[test]
    fn effective_rate_small_alpha_approaches_mean() {
        let mut rng = crate::rng::trial_rng(8, 0);
        let rates: Vec<Vec<f64>> =
            (0..500).map(|_| (0..4).map(|_| rng.random::<f64>() * 5.0).collect()).collect();
        let mean = effective_rate(&rates, 4.0, 0.0);
        let small = effective_rate(&rates, 4.0, 1e-7);
        assert!((mean - small).abs() < 1e-5);
    }

    #[test]
    fn effective_rate_jensen_and_monotone_in_alpha() {
        let mut rng = crate::rng::trial_rng(9, 0);
        for _ in 0..100 {
            let n = rng.random_range(1..6);
            let rates: Vec<Vec<f64>> =
                (0..64).map(|_| (0..n).map(|_| rng.random::<f64>() * 6.0).collect()).collect();
            let mean = effective_rate(&rates, n as f64, 0.0);
            let mut last = mean;
            for alpha in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let e = effective_rate(&rates, n as f64, alpha);
                assert!(e <= mean + 1e-9, "jensen violated");
                assert!(e <= last + 1e-9, "not monotone in alpha");
                last = e;
            }
        }
    }

    #[test]
    fn effective_rate_empty_set() {
        assert_eq!(effective_rate(&[], 1.0, 1.0), 0.0);
        assert_eq!(effective_rate(&[vec![]], 1.0, 1.0), 0.0);
    }

    #[test]
    fn pool_partition_sums_to_optimum_at_full_frame() {
        // With a common frame size N the data and syndrome sides split the
        // total exactly: E_{C,D} + E_{C,D̆} = E_C over all ranks.
        let mut rng = crate::rng::trial_rng(10, 0);
        let n = 6;
        let rates: Vec<Vec<f64>> =
            (0..128).map(|_| (0..n).map(|_| rng.random::<f64>() * 5.0).collect()).collect();
        let pool = EffectiveRatePool::new(rates).unwrap();
        for alpha in [1e-4, 1.0, 30.0] {
            let d: Vec<usize> = vec![0, 2, 5];
            let dbreve: Vec<usize> = vec![1, 3, 4];
            let all: Vec<usize> = (0..n).collect();
            let lhs = pool.effective_sum(&d, n as f64, alpha)
                + pool.effective_sum(&dbreve, n as f64, alpha);
            let rhs = pool.effective_sum(&all, n as f64, alpha);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn optimal_effective_capacity_equal_gains() {
        // ĝ = 1, P = 1 on every subcarrier: rate 1 per subcarrier, F = N,
        // normalized value 1.0 for any α.
        let trials = vec![vec![1.0; 5]; 3];
        for alpha in [1e-3, 1.0, 100.0] {
            let e = optimal_effective_capacity(&trials, 5.0, alpha).unwrap();
            assert!((e - 1.0).abs() < 1e-9, "alpha {alpha}: {e}");
        }
    }

    #[test]
    fn optimal_effective_capacity_limits() {
        use crate::power::{capacity, waterfilling};
        let mut rng = crate::rng::trial_rng(11, 0);
        let n = 8;
        let trials: Vec<Vec<f64>> =
            (0..300).map(|_| (0..n).map(|_| 0.05 + rng.random::<f64>() * 3.0).collect()).collect();
        let tp = n as f64 * 2.0;

        // α → 0: ergodic waterfilling capacity per subcarrier.
        let e0 = optimal_effective_capacity(&trials, tp, 1e-7).unwrap();
        let wf_mean: f64 = trials
            .iter()
            .map(|g| capacity(g, &waterfilling(g, tp).unwrap()))
            .sum::<f64>()
            / trials.len() as f64;
        assert!((e0 - wf_mean / n as f64).abs() / (wf_mean / n as f64) < 1e-3);

        // α huge: worst-case of the channel-inversion rates, rank by rank.
        // Each soft-min term sits in [min/N, min/N + log2(trials)/α].
        let alpha = 1e6;
        let e_inf = optimal_effective_capacity(&trials, tp, alpha).unwrap();
        let mut floor_sum = 0.0;
        for i in 0..n {
            let min_rate = trials
                .iter()
                .map(|g| {
                    let p = effective_power_allocation(g, tp, alpha).unwrap();
                    (1.0 + g[i] * p.powers[i]).log2()
                })
                .fold(f64::INFINITY, f64::min);
            floor_sum += min_rate / n as f64;
        }
        assert!(e_inf >= floor_sum - 1e-9);
        assert!(e_inf <= floor_sum + n as f64 * (300f64).log2() / alpha + 1e-9);
    }

    #[test]
    fn delay_outage_examples() {
        assert_eq!(delay_outage(0.0, 3.0, 10.0, 0.7), 0.7);
        assert_eq!(delay_outage(1.0, 1.0, 1.0, 0.0), 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((delay_outage(ln2, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
    }
}
