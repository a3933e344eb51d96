//! Fast random subset sums for sign-flip and swap randomization tests.
//!
//! The values are cut into chunks of eight; for each chunk all 256 subset
//! sums are tabulated once, so one random subset costs one table lookup per
//! chunk and one random byte.

use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

#[derive(Debug, Clone)]
pub struct SubsetSums {
    tables: Vec<[f64; 256]>,
    len: usize,
    abs_total: f64,
}

impl SubsetSums {
    pub fn new(values: &[f64]) -> Self {
        let mut tables = Vec::with_capacity(values.len().div_ceil(8));
        for chunk in values.chunks(8) {
            let mut t = [0.0f64; 256];
            for mask in 1usize..256 {
                let low = mask.trailing_zeros() as usize;
                let v = chunk.get(low).copied().unwrap_or(0.0);
                t[mask] = t[mask & (mask - 1)] + v;
            }
            tables.push(t);
        }
        Self {
            tables,
            len: values.len(),
            abs_total: values.iter().map(|v| v.abs()).sum(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of absolute values, the natural scale for comparison tolerances.
    pub fn abs_total(&self) -> f64 {
        self.abs_total
    }

    /// Sum over a uniformly random subset (each item included with
    /// probability 1/2).
    pub fn random_sum<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        let mut bits = 0u64;
        for (i, t) in self.tables.iter().enumerate() {
            if i % 8 == 0 {
                bits = rng.next_u64();
            }
            sum += t[(bits & 0xff) as usize];
            bits >>= 8;
        }
        sum
    }

    /// Sum over the subset encoded by `mask` (bit `i` selects item `i`).
    /// Only for instances of at most 64 items; used by exhaustive checks.
    pub fn masked_sum(&self, mask: u64) -> f64 {
        debug_assert!(self.len <= 64);
        let mut sum = 0.0;
        let mut bits = mask;
        for t in &self.tables {
            sum += t[(bits & 0xff) as usize];
            bits >>= 8;
        }
        sum
    }
}

/// Relative tolerance used when comparing a randomized statistic against the
/// observed one: ties that are exact in real arithmetic must count as ties
/// even though the two sums were accumulated in a different order.
pub const TIE_REL_TOL: f64 = 1e-9;

/// Count how many of `r` random subsets give a statistic at least as extreme
/// as `observed`, where `stat(subset_sum)` maps the subset sum to the
/// randomized statistic and `scale` sets the tie tolerance.
pub fn count_extreme<R, F>(sums: &SubsetSums, r: u64, rng: &mut R, observed: f64, scale: f64, stat: F) -> u64
where
    R: RngCore + ?Sized,
    F: Fn(f64) -> f64,
{
    let thresh = observed.abs() - TIE_REL_TOL * scale;
    let mut count = 0;
    for _ in 0..r {
        if stat(sums.random_sum(rng)).abs() >= thresh {
            count += 1;
        }
    }
    count
}

/// All `2^len` subset sums in mask order (for exhaustive oracles).
pub fn all_subset_sums(values: &[f64]) -> Vec<f64> {
    assert!(values.len() <= 24, "exhaustive enumeration limited to 24 items");
    let n = values.len();
    let mut out = vec![0.0; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] + values[low];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn masked_sum_matches_direct_sum() {
        let v: Vec<f64> = (0..19).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = SubsetSums::new(&v);
        for mask in [0u64, 1, 0b1011, 0x7ffff, 0x5a5a5] {
            let direct: f64 = (0..19).filter(|i| mask >> i & 1 == 1).map(|i| v[i]).sum();
            assert!((s.masked_sum(mask) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sum_has_half_mean() {
        let v = vec![1.0; 100];
        let s = SubsetSums::new(&v);
        let mut rng = stream(3, 0);
        let m: f64 = (0..20_000).map(|_| s.random_sum(&mut rng)).sum::<f64>() / 20_000.0;
        assert!((m - 50.0).abs() < 0.2, "{m}");
    }
}
