//! Subcarrier partitioning between encrypted data (set D) and
//! reconciliation (set D̆).
//!
//! In the long-term-rate regime the combined power/security constraint
//! reduces to a subset-sum 0-1 knapsack: maximize Σ_{j∈D} R_j subject to
//! Σ_{j∈D} R_j ≤ C/(1+κβ). Solvers: exact dynamic programming on a
//! fixed-point grid, the linear-time greedy scan, and exhaustive
//! enumeration as an oracle.
//!
//! In the effective-rate regime the constraint couples both sides of the
//! partition, E_{C,D} ≤ E_{C,D̆}/(κβ), and the frame normalizations
//! F = |D| and F̆ = N−|D| move with the partition, so every candidate is
//! re-evaluated on the shared Monte Carlo pool.

use crate::error::{Error, Result};
use crate::metrics::EffectiveRatePool;

/// Security parameters: κ = n/k is the inverse encoder rate (reconciliation
/// plus 0-RTT transmission per key bit), β the required key-to-data ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub kappa: f64,
    pub beta: f64,
}

impl SecurityParams {
    pub fn new(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidConfig("kappa must be at least 1".into()));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidConfig("beta must lie in (0, 1]".into()));
        }
        Ok(Self { kappa, beta })
    }
}

/// A partition of subcarriers: D carries data, D̆ reconciliation.
/// `achieved` is Σ_{j∈D} R_j summed in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub data_set: Vec<usize>,
    pub recon_set: Vec<usize>,
    pub rates: Vec<f64>,
    pub budget: f64,
    pub achieved: f64,
    pub feasible: bool,
}

impl Allocation {
    /// Builds the allocation from a data set, deriving the complement and
    /// the achieved sum.
    pub fn from_data_set(rates: Vec<f64>, mut data_set: Vec<usize>, budget: f64) -> Self {
        data_set.sort_unstable();
        let in_d: Vec<bool> = {
            let mut v = vec![false; rates.len()];
            for &j in &data_set {
                v[j] = true;
            }
            v
        };
        let recon_set: Vec<usize> = (0..rates.len()).filter(|&j| !in_d[j]).collect();
        let achieved: f64 = data_set.iter().map(|&j| rates[j]).sum();
        Allocation { data_set, recon_set, rates, budget, achieved, feasible: true }
    }

    pub fn data_size(&self) -> usize {
        self.data_set.len()
    }

    /// Reconciliation-side rate sum Σ_{j∈D̆} R_j.
    pub fn recon_sum(&self) -> f64 {
        self.recon_set.iter().map(|&j| self.rates[j]).sum()
    }
}

/// Combined long-term constraint as a single knapsack capacity:
/// Σ_{j∈D} R_j ≤ C/(1+κβ).
pub fn knapsack_budget(capacity: f64, params: &SecurityParams) -> f64 {
    debug_assert!(capacity >= 0.0);
    capacity / (1.0 + params.kappa * params.beta)
}

/// Exact subset-sum solver on a fixed-point grid.
///
/// Item weights are rounded up to the grid and the budget down, so the
/// returned set can never violate the true budget. Reachable sums are
/// tracked in a bitset with word-level shift-or, and each newly reached
/// sum records the item that first produced it for reconstruction.
pub fn solve_dp(rates: &[f64], budget: f64, resolution: f64) -> Result<Allocation> {
    solve_dp_multi(rates, &[budget], resolution).map(|mut v| v.pop().unwrap())
}

/// [`solve_dp`] for several budgets over the same items: the reachability
/// pass runs once up to the largest budget, each budget then only pays
/// for its own reconstruction. Used when sweeping a β grid per trial.
pub fn solve_dp_multi(rates: &[f64], budgets: &[f64], resolution: f64) -> Result<Vec<Allocation>> {
    if budgets.iter().any(|&b| b < 0.0) {
        return Err(Error::NegativeBudget);
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig("resolution must be positive".into()));
    }
    if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidConfig("rates must be finite and non-negative".into()));
    }
    if rates.len() >= u16::MAX as usize {
        return Err(Error::InvalidConfig("too many items".into()));
    }

    // 1e-9 guards absorb representation noise of values that are exact
    // multiples of the grid; they never round a strictly-over item down.
    let weights: Vec<u64> = rates
        .iter()
        .map(|&r| if r == 0.0 { 0 } else { ((r / resolution - 1e-9).ceil() as u64).max(1) })
        .collect();
    let caps: Vec<u64> =
        budgets.iter().map(|&b| (b / resolution + 1e-9).floor() as u64).collect();
    let cap = caps.iter().copied().max().unwrap_or(0);

    let words = (cap / 64 + 1) as usize;
    let mut reach = vec![0u64; words];
    reach[0] = 1;
    let mut from: Vec<u16> = vec![u16::MAX; cap as usize + 1];
    let mut shifted = vec![0u64; words];

    for (j, &w) in weights.iter().enumerate() {
        if w == 0 || w > cap {
            continue;
        }
        // shifted = reach << w, truncated at cap.
        let word_shift = (w / 64) as usize;
        let bit_shift = (w % 64) as u32;
        for i in (0..words).rev() {
            let mut v = 0u64;
            if i >= word_shift {
                v = reach[i - word_shift] << bit_shift;
                if bit_shift > 0 && i > word_shift {
                    v |= reach[i - word_shift - 1] >> (64 - bit_shift);
                }
            }
            shifted[i] = v;
        }
        // Record first-reach item for every newly reachable sum.
        for i in 0..words {
            let mut new_bits = shifted[i] & !reach[i];
            reach[i] |= shifted[i];
            while new_bits != 0 {
                let b = new_bits.trailing_zeros() as u64;
                let sum = i as u64 * 64 + b;
                if sum <= cap {
                    from[sum as usize] = j as u16;
                }
                new_bits &= new_bits - 1;
            }
        }
    }
    // Bits beyond the largest cap in the last word are garbage.
    let last_valid = (cap % 64) as u32;
    let mask = if last_valid == 63 { u64::MAX } else { (1u64 << (last_valid + 1)) - 1 };
    reach[words - 1] &= mask;

    let best_reachable = |cap_b: u64| -> u64 {
        let top_word = (cap_b / 64) as usize;
        for i in (0..=top_word).rev() {
            let mut w = reach[i];
            if i == top_word {
                let hi = (cap_b % 64) as u32;
                let m = if hi == 63 { u64::MAX } else { (1u64 << (hi + 1)) - 1 };
                w &= m;
            }
            if w != 0 {
                return i as u64 * 64 + (63 - w.leading_zeros() as u64);
            }
        }
        0
    };

    // Zero-rate subcarriers carry no data; they stay on the
    // reconciliation side rather than padding |D|.
    Ok(budgets
        .iter()
        .zip(caps.iter())
        .map(|(&budget, &cap_b)| {
            let mut data_set: Vec<usize> = Vec::new();
            let mut w = best_reachable(cap_b);
            while w != 0 {
                let j = from[w as usize] as usize;
                data_set.push(j);
                w -= weights[j];
            }
            Allocation::from_data_set(rates.to_vec(), data_set, budget)
        })
        .collect())
}

/// Linear greedy scan over rates sorted in non-increasing order: each item
/// is kept iff the running sum stays within the budget; a rejected item is
/// skipped and the scan continues through the last index. Zero-rate items
/// carry no data and are left to the reconciliation side.
pub fn solve_greedy(rates: &[f64], budget: f64) -> Allocation {
    debug_assert!(
        rates.windows(2).all(|w| w[0] >= w[1] - 1e-12),
        "rates must be sorted non-increasing"
    );
    let mut data_set = Vec::new();
    let mut sum = 0.0;
    for (j, &r) in rates.iter().enumerate() {
        if r > 0.0 && sum + r <= budget {
            data_set.push(j);
            sum += r;
        }
    }
    Allocation::from_data_set(rates.to_vec(), data_set, budget)
}

/// Exhaustive oracle, N ≤ 20. Ties resolve to the lexicographically first
/// subset so the result is deterministic.
pub fn solve_bruteforce(rates: &[f64], budget: f64) -> Result<Allocation> {
    let n = rates.len();
    if n > 20 {
        return Err(Error::OracleSizeLimit);
    }
    if budget < 0.0 {
        return Err(Error::NegativeBudget);
    }
    let mut best_mask = 0u32;
    let mut best_sum = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut sum = 0.0;
        for j in 0..n {
            if mask >> j & 1 == 1 {
                sum += rates[j];
            }
        }
        if sum <= budget && sum > best_sum {
            best_sum = sum;
            best_mask = mask;
        }
    }
    let data_set: Vec<usize> = (0..n).filter(|&j| best_mask >> j & 1 == 1).collect();
    Ok(Allocation::from_data_set(rates.to_vec(), data_set, budget))
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut in_set = vec![false; n];
    for &j in set {
        in_set[j] = true;
    }
    (0..n).filter(|&j| !in_set[j]).collect()
}

fn effective_from_terms(terms: &[Vec<f64>], set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let row = &terms[set.len() - 1];
    set.iter().map(|&i| row[i]).sum()
}

/// Evaluates a candidate partition under the effective-rate constraint
/// E_{C,D} ≤ E_{C,D̆}/(κβ), with F = |D| and F̆ = N−|D|.
fn effective_feasible(terms: &[Vec<f64>], n: usize, d: &[usize], kb: f64) -> (f64, f64) {
    let ed = effective_from_terms(terms, d);
    let er = effective_from_terms(terms, &complement(n, d));
    (ed, er / kb)
}

/// Greedy scan in the effective-rate regime: columns are tried in scan
/// order (best-first when the pool is gain-sorted) and a candidate is
/// kept iff the constraint holds for the tentative partition, with both
/// effective rates recomputed at the candidate's own frame sizes. Powers
/// are already fixed in the pool (cutoff policy).
///
/// If even D = ∅ violated the constraint the allocation would come back
/// with `feasible` unset; with non-negative rates that cannot happen.
pub fn solve_greedy_effective(
    pool: &EffectiveRatePool,
    params: &SecurityParams,
    alpha: f64,
) -> Allocation {
    assert!(alpha > 0.0, "delay exponent must be positive");
    let n = pool.n_subcarriers();
    let kb = params.kappa * params.beta;
    let terms = pool.term_table(alpha);

    let mut d: Vec<usize> = Vec::new();
    for j in 0..n {
        let mut candidate = d.clone();
        candidate.push(j);
        let (ed, budget) = effective_feasible(&terms, n, &candidate, kb);
        if ed <= budget {
            d = candidate;
        }
    }
    let (achieved, budget) = effective_feasible(&terms, n, &d, kb);
    let feasible = achieved <= budget + 1e-12;
    let mut alloc = Allocation::from_data_set(pool.mean_rates(), d, budget);
    alloc.achieved = achieved;
    alloc.feasible = feasible;
    alloc
}

/// Exhaustive effective-rate oracle over all 2^N partitions (N ≤ 20):
/// the feasible partition maximizing E_{C,D}.
pub fn solve_effective_exhaustive(
    pool: &EffectiveRatePool,
    params: &SecurityParams,
    alpha: f64,
) -> Result<Allocation> {
    assert!(alpha > 0.0);
    let n = pool.n_subcarriers();
    if n > 20 {
        return Err(Error::OracleSizeLimit);
    }
    let kb = params.kappa * params.beta;
    let terms = pool.term_table(alpha);

    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << n) {
        let d: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let (ed, budget) = effective_feasible(&terms, n, &d, kb);
        if ed <= budget && best.as_ref().map_or(true, |(b, _, _)| ed > *b) {
            best = Some((ed, budget, d));
        }
    }
    let (achieved, budget, d) = best.expect("empty set is always feasible");
    let mut alloc = Allocation::from_data_set(pool.mean_rates(), d, budget);
    alloc.achieved = achieved;
    alloc.feasible = true;
    Ok(alloc)
}

/// Cardinality sweep used where exhaustion is out of reach: evaluates
/// every scan-order prefix plus the greedy partition and returns the
/// feasible candidate with the largest effective data rate. Columns are
/// exchangeable in the i.i.d. channel model, so a prefix represents its
/// cardinality class; sweeping arbitrary subsets would only pick whichever
/// columns drew lucky Monte Carlo noise.
pub fn solve_effective_scan(
    pool: &EffectiveRatePool,
    params: &SecurityParams,
    alpha: f64,
) -> Allocation {
    assert!(alpha > 0.0);
    let n = pool.n_subcarriers();
    let kb = params.kappa * params.beta;
    let terms = pool.term_table(alpha);

    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n + 2);
    for d in 0..=n {
        candidates.push((0..d).collect());
    }
    candidates.push(solve_greedy_effective(pool, params, alpha).data_set);

    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for d in candidates {
        let (ed, budget) = effective_feasible(&terms, n, &d, kb);
        if ed <= budget && best.as_ref().map_or(true, |(b, _, _)| ed > *b) {
            best = Some((ed, budget, d));
        }
    }
    let (achieved, budget, d) = best.expect("empty set is always feasible");
    let mut alloc = Allocation::from_data_set(pool.mean_rates(), d, budget);
    alloc.achieved = achieved;
    alloc.feasible = true;
    alloc
}
