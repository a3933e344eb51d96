//! Corpus BLEU, per-sentence swap effects, the Delta-Laplace mixture and the
//! machine-translation generative process.
//!
//! Input text is pre-tokenized: tokens are whitespace-separated and compared
//! case-sensitively, one reference per sentence. No smoothing is applied.

mod mixture;
mod mt;
mod score;
mod swap;

pub use mixture::{fit_mixture, LaplaceComponent, LaplaceMixtureFit, DEFAULT_ZERO_TOL};
pub use mt::{
    mt_power, mt_randomization_test, mt_randomization_test_with, observed_delta, simulate_mt_dataset, MtFamily,
    MtGenSpec, MtProcess,
};
pub use score::{corpus_bleu, BleuScore, BleuStats};
pub use swap::{swap_effects, SwapEffects, DEFAULT_PROBE_SUBSETS};
