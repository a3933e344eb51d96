//! Deterministic random streams.
//!
//! Every repetition of a simulation draws from its own ChaCha8 stream whose
//! key is a hash of `(seed, index)`. Streams never depend on the order in
//! which repetitions run, so serial and parallel execution agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th stream under `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Independent stream for repetition `index`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(stream_seed(seed, index))
}

/// Derive a new seed from `seed` and a label (FNV-1a over the label bytes).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        mean
    } else {
        mean + sd * standard_normal(rng)
    }
}

/// Laplace(`mu`, `b`) by inversion.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, mu: f64, b: f64) -> f64 {
    // u in (-1/2, 1/2]
    let u = 0.5 - uniform(rng);
    let mag = -b * libm::log1p(-2.0 * u.abs());
    if u < 0.0 {
        mu - mag
    } else {
        mu + mag
    }
}
