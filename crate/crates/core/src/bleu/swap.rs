use alloc::vec::Vec;
use rand::RngCore;
use serde::Serialize;

use super::score::{check_aligned, sentence_stats, BleuStats};
use crate::math::pearson;
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_PROBE_SUBSETS: usize = 1000;

/// Per-sentence swap effects between two systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapEffects {
    /// `BLEU(A) - BLEU(B)` in BLEU points.
    pub delta_b: f64,
    /// `δ_i`: change in `delta_b` when only sentence `i` is exchanged.
    pub deltas: Vec<f64>,
    /// Correlation between `Σ_{i∈S} δ_i` and the actual change in `delta_b`
    /// after exchanging subset `S`, over random probe subsets.
    pub additivity_r: Option<f64>,
}

fn diff_after_swap(ta: &BleuStats, tb: &BleuStats, a: &BleuStats, b: &BleuStats) -> f64 {
    ta.replaced(a, b).score().score - tb.replaced(b, a).score().score
}

/// Swap effects for every sentence. Per-sentence sufficient statistics are
/// computed once; exchanging sentence `i` only moves its counts between the
/// two corpus totals.
pub fn swap_effects<S: AsRef<str>>(
    references: &[S],
    hyps_a: &[S],
    hyps_b: &[S],
    probe_subsets: usize,
    seed: u64,
) -> Result<SwapEffects> {
    check_aligned("references vs hypotheses A", references.len(), hyps_a.len())?;
    check_aligned("references vs hypotheses B", references.len(), hyps_b.len())?;
    if references.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let sa = sentence_stats(references, hyps_a);
    let sb = sentence_stats(references, hyps_b);
    let (mut ta, mut tb) = (BleuStats::default(), BleuStats::default());
    for (a, b) in sa.iter().zip(&sb) {
        ta.add(a);
        tb.add(b);
    }
    let delta_b = ta.score().score - tb.score().score;
    let deltas: Vec<f64> = sa
        .iter()
        .zip(&sb)
        .map(|(a, b)| {
            if a == b {
                0.0
            } else {
                diff_after_swap(&ta, &tb, a, b) - delta_b
            }
        })
        .collect();

    let additivity_r = if probe_subsets == 0 {
        None
    } else {
        let mut rng = rng::stream(seed, 0);
        let mut predicted = Vec::with_capacity(probe_subsets);
        let mut actual = Vec::with_capacity(probe_subsets);
        for _ in 0..probe_subsets {
            let (mut ka, mut kb) = (ta, tb);
            let mut sum = 0.0;
            let mut bits = 0u64;
            for i in 0..sa.len() {
                if i % 64 == 0 {
                    bits = rng.next_u64();
                }
                if bits & 1 == 1 {
                    ka.sub(&sa[i]);
                    ka.add(&sb[i]);
                    kb.sub(&sb[i]);
                    kb.add(&sa[i]);
                    sum += deltas[i];
                }
                bits >>= 1;
            }
            predicted.push(sum);
            actual.push(ka.score().score - kb.score().score - delta_b);
        }
        pearson(&predicted, &actual)
    };
    Ok(SwapEffects {
        delta_b,
        deltas,
        additivity_r,
    })
}
