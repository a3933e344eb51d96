use alloc::vec::Vec;
use rand::Rng;
use serde::Serialize;

use super::ContingencySpec;
use crate::rng::uniform;
use crate::{Error, Result};

/// Per-instance correctness of two classifiers on the same items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedPredictions {
    pairs: Vec<(bool, bool)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellCounts {
    pub both_correct: u64,
    pub only_m1: u64,
    pub only_m2: u64,
    pub both_incorrect: u64,
}

impl PairedPredictions {
    pub fn from_pairs(pairs: Vec<(bool, bool)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("paired predictions"));
        }
        Ok(Self { pairs })
    }

    pub fn from_correctness(m1: &[bool], m2: &[bool]) -> Result<Self> {
        if m1.len() != m2.len() {
            return Err(Error::LengthMismatch {
                what: "correctness flags",
                left: m1.len(),
                right: m2.len(),
            });
        }
        Self::from_pairs(m1.iter().copied().zip(m2.iter().copied()).collect())
    }

    /// Correctness from predicted labels compared against gold labels.
    pub fn from_labels<T: PartialEq>(m1: &[T], m2: &[T], gold: &[T]) -> Result<Self> {
        if m1.len() != gold.len() {
            return Err(Error::LengthMismatch {
                what: "predictions of model 1 vs gold",
                left: m1.len(),
                right: gold.len(),
            });
        }
        if m2.len() != gold.len() {
            return Err(Error::LengthMismatch {
                what: "predictions of model 2 vs gold",
                left: m2.len(),
                right: gold.len(),
            });
        }
        Self::from_pairs(
            m1.iter()
                .zip(m2)
                .zip(gold)
                .map(|((a, b), g)| (a == g, b == g))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(bool, bool)] {
        &self.pairs
    }

    pub fn counts(&self) -> CellCounts {
        let mut c = CellCounts {
            both_correct: 0,
            only_m1: 0,
            only_m2: 0,
            both_incorrect: 0,
        };
        for &(a, b) in &self.pairs {
            match (a, b) {
                (true, true) => c.both_correct += 1,
                (true, false) => c.only_m1 += 1,
                (false, true) => c.only_m2 += 1,
                (false, false) => c.both_incorrect += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamEstimate {
    pub agreement: f64,
    pub delta_acc: f64,
    pub n: u64,
    pub counts: CellCounts,
    pub spec: ContingencySpec,
}

/// Empirical agreement rate, accuracy difference and contingency table.
pub fn estimate_params(preds: &PairedPredictions) -> Result<ParamEstimate> {
    let c = preds.counts();
    let n = preds.n() as f64;
    let spec = ContingencySpec {
        p_both_correct: c.both_correct as f64 / n,
        p_only_m1: c.only_m1 as f64 / n,
        p_only_m2: c.only_m2 as f64 / n,
        p_both_incorrect: c.both_incorrect as f64 / n,
    };
    Ok(ParamEstimate {
        agreement: (c.both_correct + c.both_incorrect) as f64 / n,
        delta_acc: (c.only_m2 as f64 - c.only_m1 as f64) / n,
        n: preds.n() as u64,
        counts: c,
        spec,
    })
}

/// Draws `n` instances independently from the four cells of `spec`.
pub fn simulate_pairs<R: Rng + ?Sized>(spec: &ContingencySpec, n: usize, rng: &mut R) -> Result<PairedPredictions> {
    spec.validate()?;
    let [bc, o1, o2, _] = spec.cells();
    let pairs = (0..n)
        .map(|_| {
            let u = uniform(rng);
            if u < bc {
                (true, true)
            } else if u < bc + o1 {
                (true, false)
            } else if u < bc + o1 + o2 {
                (false, true)
            } else {
                (false, false)
            }
        })
        .collect();
    PairedPredictions::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_predictions() {
        let labels = ["a", "b", "a", "c"];
        let gold = ["a", "a", "a", "c"];
        let e = estimate_params(&PairedPredictions::from_labels(&labels, &labels, &gold).unwrap()).unwrap();
        assert_eq!(e.agreement, 1.0);
        assert_eq!(e.delta_acc, 0.0);
    }

    #[test]
    fn nested_correct_sets() {
        let m1: Vec<bool> = (0..10).map(|i| i < 6).collect();
        let m2: Vec<bool> = (0..10).map(|i| i < 7).collect();
        let e = estimate_params(&PairedPredictions::from_correctness(&m1, &m2).unwrap()).unwrap();
        assert!((e.agreement - 0.9).abs() < 1e-15);
        assert!((e.delta_acc - 0.1).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(PairedPredictions::from_correctness(&[true], &[true, false]).is_err());
        assert!(PairedPredictions::from_labels(&[1], &[1], &[1, 2]).is_err());
    }

    #[test]
    fn simulated_pairs_follow_cells() {
        let spec = ContingencySpec::new(0.7, 0.1, 0.15, 0.05).unwrap();
        let p = simulate_pairs(&spec, 20_000, &mut crate::rng::stream(4, 0)).unwrap();
        let e = estimate_params(&p).unwrap();
        for (a, b) in e.spec.cells().iter().zip(spec.cells()) {
            assert!((a - b).abs() < 0.015);
        }
    }
}
