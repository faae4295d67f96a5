//! Power allocation under a short-term sum-power constraint Σ p_j = N·P.
//!
//! Two regimes:
//!
//! * waterfilling, p_j = [1/λ − 1/ĝ_j]⁺, which maximizes the long-term
//!   rate Σ log2(1 + ĝ_j p_j);
//! * the delay-constrained optimum p_i* = 1/(g₀^{N/(α+N)} ĝ_i^{α/(α+N)}) − 1/ĝ_i
//!   with cutoff g₀, which maximizes the effective capacity at delay
//!   exponent α. As α → 0 it collapses to waterfilling, as α → ∞ to total
//!   channel inversion.
//!
//! Both multipliers are located by bisection on a bracketing interval and
//! then snapped to the exact closed form on the discovered active set, so
//! the power constraint holds to machine precision.

use crate::error::{Error, Result};

/// Which optimizer produced a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Waterfilling,
    EffectiveCapacity { alpha: f64 },
}

/// Per-subcarrier powers plus the multiplier that generated them
/// (λ for waterfilling, g₀ for the effective-capacity policy).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy {
    pub powers: Vec<f64>,
    pub multiplier: f64,
    pub regime: Regime,
}

const BISECT_ITERS: usize = 200;

/// Waterfilling over the given gains. Gains may contain zeros (those
/// subcarriers get no power); errors only when no gain is positive.
pub fn waterfilling(g_hat: &[f64], total_power: f64) -> Result<PowerPolicy> {
    if !(total_power > 0.0) {
        return Err(Error::InvalidConfig("total power must be positive".into()));
    }
    if g_hat.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidConfig("gains must be finite and non-negative".into()));
    }
    let usable: Vec<usize> = (0..g_hat.len()).filter(|&j| g_hat[j] > 0.0).collect();
    if usable.is_empty() {
        return Err(Error::NoUsableSubcarrier);
    }

    // Σ_j [w − 1/g_j]⁺ is continuous, piecewise linear and increasing in
    // the water level w; bracket and bisect.
    let spill = |w: f64| -> f64 {
        usable.iter().map(|&j| (w - 1.0 / g_hat[j]).max(0.0)).sum()
    };
    let mut lo = 0.0;
    let mut hi = total_power + usable.iter().map(|&j| 1.0 / g_hat[j]).fold(0.0, f64::max);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if spill(mid) < total_power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = 0.5 * (lo + hi);

    // Exact water level on the active set found by bisection.
    let active: Vec<usize> = usable.iter().copied().filter(|&j| w > 1.0 / g_hat[j]).collect();
    if !active.is_empty() {
        let inv_sum: f64 = active.iter().map(|&j| 1.0 / g_hat[j]).sum();
        let w_exact = (total_power + inv_sum) / active.len() as f64;
        let consistent = active.iter().all(|&j| w_exact > 1.0 / g_hat[j])
            && usable
                .iter()
                .filter(|j| !active.contains(j))
                .all(|&j| w_exact <= 1.0 / g_hat[j] * (1.0 + 1e-12));
        if consistent {
            w = w_exact;
        }
    }

    let powers: Vec<f64> = g_hat
        .iter()
        .map(|&g| if g > 0.0 { (w - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    Ok(PowerPolicy {
        powers,
        multiplier: 1.0 / w,
        regime: Regime::Waterfilling,
    })
}

/// Delay-constrained optimal allocation for delay exponent α > 0.
///
/// Internally the root search runs on u = g₀^{N/(α+N)} rather than g₀
/// itself: u stays well scaled for any α while g₀ under/overflows once
/// α/N is large. A subcarrier is active exactly when ĝ_i^{N/(α+N)} > u,
/// so clamping negative unclamped powers to zero and re-solving on the
/// active set is equivalent to the clamped-sum root.
pub fn effective_power_allocation(g_hat: &[f64], total_power: f64, alpha: f64) -> Result<PowerPolicy> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig("alpha must be positive".into()));
    }
    if !(total_power > 0.0) {
        return Err(Error::InvalidConfig("total power must be positive".into()));
    }
    if g_hat.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidConfig("gains must be finite and non-negative".into()));
    }
    let n = g_hat.len() as f64;
    let usable: Vec<usize> = (0..g_hat.len()).filter(|&j| g_hat[j] > 0.0).collect();
    if usable.is_empty() {
        return Err(Error::NoUsableSubcarrier);
    }

    let e_gain = alpha / (alpha + n); // exponent on ĝ_i
    let e_root = n / (alpha + n); // exponent mapping g₀ → u
    let unclamped = |u: f64, g: f64| 1.0 / (u * g.powf(e_gain)) - 1.0 / g;
    let spent = |u: f64| -> f64 {
        usable.iter().map(|&j| unclamped(u, g_hat[j]).max(0.0)).sum()
    };

    // Active iff u < g^{N/(α+N)}; spent(u) decreases from ∞ to 0 on (0, u_max).
    let u_max = usable.iter().map(|&j| g_hat[j].powf(e_root)).fold(0.0, f64::max);
    let mut hi = u_max;
    let mut lo = u_max * 0.5;
    let mut guard = 0;
    while spent(lo) < total_power {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 || lo == 0.0 {
            return Err(Error::InfeasiblePower);
        }
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let s = mid;
        // Monotone root: the clamped sum must not increase with u.
        debug_assert!(spent(lo) >= spent(hi));
        if spent(s) > total_power {
            lo = s;
        } else {
            hi = s;
        }
    }
    let mut u = 0.5 * (lo + hi);

    // Exact cutoff on the discovered active set:
    // Σ_active 1/(u ĝ^{e}) = total + Σ_active 1/ĝ.
    let active: Vec<usize> = usable
        .iter()
        .copied()
        .filter(|&j| unclamped(u, g_hat[j]) > 0.0)
        .collect();
    if !active.is_empty() {
        let num: f64 = active.iter().map(|&j| g_hat[j].powf(-e_gain)).sum();
        let den = total_power + active.iter().map(|&j| 1.0 / g_hat[j]).sum::<f64>();
        let u_exact = num / den;
        let consistent = active.iter().all(|&j| unclamped(u_exact, g_hat[j]) > 0.0)
            && usable
                .iter()
                .filter(|j| !active.contains(j))
                .all(|&j| unclamped(u_exact, g_hat[j]) <= 0.0);
        if consistent {
            u = u_exact;
        }
    }

    let powers: Vec<f64> = g_hat
        .iter()
        .map(|&g| if g > 0.0 { unclamped(u, g).max(0.0) } else { 0.0 })
        .collect();
    Ok(PowerPolicy {
        powers,
        multiplier: u.powf(1.0 / e_root), // g₀; may underflow to 0 for huge α
        regime: Regime::EffectiveCapacity { alpha },
    })
}

/// Sum rate Σ log2(1 + ĝ_j p_j) in bits/s/Hz.
pub fn capacity(g_hat: &[f64], policy: &PowerPolicy) -> f64 {
    assert_eq!(g_hat.len(), policy.powers.len());
    g_hat
        .iter()
        .zip(policy.powers.iter())
        .map(|(&g, &p)| (1.0 + g * p).log2())
        .sum()
}
