//! Prospective power analysis by simulation for NLP model comparisons.
//!
//! The crate is organised around a single simulation engine ([`sim`]) into
//! which scenario-specific generative processes plug:
//!
//! * [`accuracy`]: paired classifier comparisons tested with McNemar's test,
//!   including no-prior (Lachenbruch) bounds and F1 power via randomization.
//! * [`bleu`]: corpus BLEU, per-sentence swap effects, the Delta-Laplace
//!   generative process and its randomization test.
//! * [`likert`]: crossed worker/item random-effects ratings fitted by
//!   maximum likelihood.
//!
//! [`significance`] holds the tests shared by all scenarios and [`priors`]
//! the bundled regression priors for agreement and effect size.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled;
//! the `parallel` feature runs repetitions on the rayon thread pool without
//! changing any result.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod accuracy;
pub mod binomial;
pub mod bleu;
mod error;
pub mod likert;
pub mod linalg;
pub mod math;
pub mod optim;
pub mod priors;
pub mod randomization;
pub mod rng;
pub mod significance;
pub mod sim;

pub use error::{Error, Result};
pub use significance::TestResult;
pub use sim::{
    estimate_power, estimate_type_m_s, find_mde, power_curve, GenerativeProcess, MdeOptions,
    MdeResult, PowerCurve, PowerReport, ProcessFamily, SimulationConfig,
};
