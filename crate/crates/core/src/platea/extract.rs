use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Subset spaces up to this size are sampled by rank without replacement.
const RANK_SAMPLING_LIMIT: u128 = 1_000_000;

/// Number of combinations drawn for a target count `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "k")]
pub enum CombBudget {
    /// Exactly `n`.
    #[default]
    Linear,
    /// A constant `k` regardless of `n`.
    Fixed(usize),
    /// `k * n`.
    Multiple(usize),
}

impl CombBudget {
    pub fn budget(self, n: usize) -> usize {
        match self {
            CombBudget::Linear => n,
            CombBudget::Fixed(k) => k,
            CombBudget::Multiple(k) => k.saturating_mul(n),
        }
        .max(1)
    }
}

/// `C(m, n)`, saturating at `u128::MAX`.
pub fn binomial(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    let n = n.min(m - n);
    let mut c: u128 = 1;
    for i in 0..n {
        // c * (m - i) is divisible by (i + 1) at every step
        match c.checked_mul((m - i) as u128) {
            Some(v) => c = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    c
}

/// The `rank`-th size-`n` subset of `0..m` in lexicographic order.
fn unrank(mut rank: u128, m: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    for i in 0..n {
        let mut c = next;
        loop {
            let count = binomial(m - c - 1, n - i - 1);
            if rank < count {
                break;
            }
            rank -= count;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

/// Draws `min(budget, C(|pool|, n))` distinct size-`n` subsets of `pool`.
/// Each subset is returned as ascending site ids. An `n` of zero or above
/// the pool size yields no subsets.
pub fn extract_sites<R: Rng>(pool: &[usize], n: usize, budget: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let m = pool.len();
    if n == 0 || n > m || budget == 0 {
        return Vec::new();
    }
    let total = binomial(m, n);
    let want = (budget as u128).min(total) as usize;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| pool[i]).collect::<Vec<_>>();
    if total <= RANK_SAMPLING_LIMIT {
        index::sample(rng, total as usize, want).into_iter().map(|r| pick(unrank(r as u128, m, n))).collect()
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(want);
        while out.len() < want {
            let mut idx = index::sample(rng, m, n).into_vec();
            idx.sort_unstable();
            if seen.insert(idx.clone()) {
                out.push(pick(idx));
            }
        }
        out
    }
}
