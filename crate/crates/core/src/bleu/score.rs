use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use serde::Serialize;

use crate::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics of BLEU for one sentence or a whole corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BleuStats {
    /// Clipped n-gram matches for orders 1..=4.
    pub matches: [u64; MAX_ORDER],
    /// Hypothesis n-gram counts for orders 1..=4.
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleuScore {
    /// On the 0..=100 scale.
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> BTreeMap<&'b [&'a str], u64> {
    let mut m = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

impl BleuStats {
    pub fn from_pair(reference: &str, hypothesis: &str) -> Self {
        let r: Vec<&str> = reference.split_whitespace().collect();
        let h: Vec<&str> = hypothesis.split_whitespace().collect();
        let mut s = BleuStats {
            hyp_len: h.len() as u64,
            ref_len: r.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            s.totals[n - 1] = h.len().saturating_sub(n - 1) as u64;
            s.matches[n - 1] = hc
                .iter()
                .map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    pub fn add(&mut self, o: &Self) {
        for k in 0..MAX_ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }

    pub fn sub(&mut self, o: &Self) {
        for k in 0..MAX_ORDER {
            self.matches[k] -= o.matches[k];
            self.totals[k] -= o.totals[k];
        }
        self.hyp_len -= o.hyp_len;
        self.ref_len -= o.ref_len;
    }

    /// Corpus stats with sentence `out` replaced by `inc`.
    pub fn replaced(&self, out: &Self, inc: &Self) -> Self {
        let mut s = *self;
        s.sub(out);
        s.add(inc);
        s
    }

    pub fn score(&self) -> BleuScore {
        let mut precisions = [0.0; MAX_ORDER];
        for k in 0..MAX_ORDER {
            if self.totals[k] > 0 {
                precisions[k] = self.matches[k] as f64 / self.totals[k] as f64;
            }
        }
        let bp = if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            libm::exp(1.0 - self.ref_len as f64 / self.hyp_len as f64)
        };
        let score = if bp == 0.0 || precisions.iter().any(|p| *p == 0.0) {
            0.0
        } else {
            let log_mean = precisions.iter().map(|p| libm::log(*p)).sum::<f64>() / MAX_ORDER as f64;
            100.0 * bp * libm::exp(log_mean)
        };
        BleuScore {
            score,
            precisions,
            brevity_penalty: bp,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

pub(crate) fn check_aligned(what: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Misaligned {
            index: a.min(b),
            reason: format!("{what}: {a} vs {b} lines"),
        });
    }
    Ok(())
}

pub(crate) fn sentence_stats<S: AsRef<str>>(references: &[S], hypotheses: &[S]) -> Vec<BleuStats> {
    references
        .iter()
        .zip(hypotheses)
        .map(|(r, h)| BleuStats::from_pair(r.as_ref(), h.as_ref()))
        .collect()
}

/// Corpus BLEU over aligned references and hypotheses.
pub fn corpus_bleu<S: AsRef<str>>(references: &[S], hypotheses: &[S]) -> Result<BleuScore> {
    if hypotheses.is_empty() {
        return Err(Error::Empty("hypothesis corpus"));
    }
    check_aligned("references vs hypotheses", references.len(), hypotheses.len())?;
    let mut total = BleuStats::default();
    for s in sentence_stats(references, hypotheses) {
        total.add(&s);
    }
    Ok(total.score())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_corpus_scores_100() {
        let c = ["the cat sat on the mat", "a quick brown fox jumps"];
        let s = corpus_bleu(&c, &c).unwrap();
        assert!((s.score - 100.0).abs() < 1e-12);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn no_overlap_scores_zero() {
        let s = corpus_bleu(&["a b c d e"], &["v w x y z"]).unwrap();
        assert_eq!(s.score, 0.0);
    }

    #[test]
    fn clipping_limits_repeated_tokens() {
        let s = BleuStats::from_pair("the cat", "the the the");
        assert_eq!(s.matches[0], 1);
        assert_eq!(s.totals[0], 3);
        assert_eq!(s.totals[3], 0);
    }

    #[test]
    fn empty_hypothesis_line_counts_toward_brevity() {
        let s = corpus_bleu(&["a b c d e f", "a b c d"], &["a b c d e f", ""]).unwrap();
        assert_eq!(s.hyp_len, 6);
        assert_eq!(s.ref_len, 10);
        assert!(s.brevity_penalty < 1.0);
    }

    #[test]
    fn errors_on_empty_or_misaligned() {
        let empty: [&str; 0] = [];
        assert!(corpus_bleu(&empty, &empty).is_err());
        assert!(matches!(corpus_bleu(&["a"], &["a", "b"]), Err(Error::Misaligned { index: 1, .. })));
    }
}
