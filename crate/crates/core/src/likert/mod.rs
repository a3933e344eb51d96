//! Likert-rating comparisons with crossed worker and item random effects.
//!
//! Ratings (rescaled to `[0, 1]`) follow
//! `y = β0 + W0[w] + I0[i] + (β1 + W1[w] + I1[i]) x + e` with the condition
//! coded `x = ±1/2`, so `β1` is the difference between the two systems and
//! `β0` the grand mean. All random effects are independent normals.

mod lmm;
mod params;
mod power;
mod ratings;

pub use lmm::{
    fit_lmm, fit_lmm_dense, gls_fixed_effects, log_likelihood, FitMethod, GlsEstimate, LmmFit, VarianceComponents,
};
pub use params::{slope_from_unit_coding, slope_to_unit_coding, LikertParams, Preset};
pub use power::{likert_power, lmm_detect, Detection, LikertFamily, LikertProcess, DETECTION_THRESHOLD};
pub use ratings::{simulate_ratings, Condition, Rating, RatingsTable};
