use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::Serialize;

use super::LikertParams;
use crate::rng::normal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `x = -1/2`
    Baseline,
    /// `x = +1/2`
    Treatment,
}

impl Condition {
    pub fn x(self) -> f64 {
        match self {
            Condition::Baseline => -0.5,
            Condition::Treatment => 0.5,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Condition::Baseline => Condition::Treatment,
            Condition::Treatment => Condition::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rating {
    pub worker: u32,
    pub item: u32,
    pub condition: Condition,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingsTable {
    rows: Vec<Rating>,
}

impl RatingsTable {
    pub fn new(rows: Vec<Rating>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (idx, r) in rows.iter().enumerate() {
            if !r.rating.is_finite() {
                return Err(Error::Misaligned {
                    index: idx,
                    reason: format!("rating {} is not finite", r.rating),
                });
            }
            if !seen.insert((r.worker, r.item, r.condition)) {
                return Err(Error::Misaligned {
                    index: idx,
                    reason: format!(
                        "duplicate (worker {}, item {}, {:?}) rating",
                        r.worker, r.item, r.condition
                    ),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Rating] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted distinct worker ids.
    pub fn workers(&self) -> Vec<u32> {
        let s: BTreeSet<u32> = self.rows.iter().map(|r| r.worker).collect();
        s.into_iter().collect()
    }

    /// Sorted distinct item ids.
    pub fn items(&self) -> Vec<u32> {
        let s: BTreeSet<u32> = self.rows.iter().map(|r| r.item).collect();
        s.into_iter().collect()
    }

    /// Mean rating under treatment minus mean rating under baseline.
    pub fn condition_difference(&self) -> f64 {
        let (mut s, mut c) = ([0.0f64; 2], [0usize; 2]);
        for r in &self.rows {
            let k = (r.condition == Condition::Treatment) as usize;
            s[k] += r.rating;
            c[k] += 1;
        }
        s[1] / c[1].max(1) as f64 - s[0] / c[0].max(1) as f64
    }
}

/// Fully crossed simulation: every worker rates every item under both
/// conditions. Worker effects are drawn first (intercept then slope per
/// worker), then item effects, then residuals in row order. Ratings are not
/// clamped to `[0, 1]`.
pub fn simulate_ratings<R: Rng + ?Sized>(
    params: &LikertParams,
    n_workers: usize,
    n_items: usize,
    rng: &mut R,
) -> Result<RatingsTable> {
    params.validate()?;
    if n_workers < 2 || n_items < 2 {
        return Err(Error::param("design", "need at least 2 workers and 2 items"));
    }
    let mut w = Vec::with_capacity(n_workers);
    for _ in 0..n_workers {
        let w0 = normal(rng, 0.0, params.sigma_w0);
        let w1 = normal(rng, 0.0, params.sigma_w1);
        w.push((w0, w1));
    }
    let mut it = Vec::with_capacity(n_items);
    for _ in 0..n_items {
        let i0 = normal(rng, 0.0, params.sigma_i0);
        let i1 = normal(rng, 0.0, params.sigma_i1);
        it.push((i0, i1));
    }
    let mut rows = Vec::with_capacity(2 * n_workers * n_items);
    for (wi, &(w0, w1)) in w.iter().enumerate() {
        for (ii, &(i0, i1)) in it.iter().enumerate() {
            for cond in [Condition::Baseline, Condition::Treatment] {
                let x = cond.x();
                let y = params.beta0 + w0 + i0 + (params.beta1 + w1 + i1) * x + normal(rng, 0.0, params.sigma_e);
                rows.push(Rating {
                    worker: wi as u32,
                    item: ii as u32,
                    condition: cond,
                    rating: y,
                });
            }
        }
    }
    Ok(RatingsTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likert::Preset;
    use crate::rng::stream;

    #[test]
    fn deterministic_model_without_noise() {
        let p = LikertParams {
            beta0: 0.5,
            beta1: 0.2,
            sigma_w0: 0.0,
            sigma_w1: 0.0,
            sigma_i0: 0.0,
            sigma_i1: 0.0,
            sigma_e: 0.0,
        };
        let t = simulate_ratings(&p, 3, 4, &mut stream(1, 0)).unwrap();
        assert_eq!(t.len(), 24);
        for r in t.rows() {
            let want = if r.condition == Condition::Treatment { 0.6 } else { 0.4 };
            assert!((r.rating - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_duplicates_and_tiny_designs() {
        let r = Rating {
            worker: 1,
            item: 1,
            condition: Condition::Baseline,
            rating: 0.5,
        };
        assert!(RatingsTable::new(alloc::vec![r, r]).is_err());
        let p = Preset::LowVariance.params(0.5, 0.1);
        assert!(simulate_ratings(&p, 1, 10, &mut stream(1, 0)).is_err());
    }
}
