//! Seeded Rayleigh channel generation.
//!
//! Entries are CN(0,1): real and imaginary parts are independent zero-mean
//! normals with variance 1/2. The generator is ChaCha12 keyed by a splitmix64
//! digest of `(seed, trial, K, N)`, and normal variates come from the
//! Box-Muller transform:
//!
//! ```text
//! z0 = sqrt(-2 ln u1) * cos(2 pi u2)
//! z1 = sqrt(-2 ln u1) * sin(2 pi u2)
//! ```
//!
//! with `u1` in (0, 1] and `u2` in [0, 1). The stream is a pure function of
//! `(seed, trial, K, N)`, so repeated calls are bit-identical and different
//! cells of a sweep are statistically independent.

use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::model::ChannelSet;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha12 keyed from `(seed, trial, k, n)` via splitmix64 expansion.
pub(crate) fn keyed_rng(seed: u64, trial: u64, k: u64, n: u64) -> ChaCha12Rng {
    let mut acc = splitmix64(seed);
    acc = splitmix64(acc ^ splitmix64(trial));
    acc = splitmix64(acc ^ splitmix64(k ^ n.rotate_left(32)));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = splitmix64(acc.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN_GAMMA)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Uniform double in [0, 1) from the top 53 bits of one u64.
pub(crate) fn uniform01(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One CN(0,1) sample via Box-Muller.
pub(crate) fn standard_complex_normal(rng: &mut ChaCha12Rng) -> Complex64 {
    let u1 = 1.0 - uniform01(rng); // (0, 1]: keeps the logarithm finite
    let u2 = uniform01(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = std::f64::consts::TAU * u2;
    // Both Box-Muller outputs feed one complex entry; the 1/sqrt(2) scaling
    // gives variance 1/2 per component, i.e. unit variance overall.
    Complex64::new(r * phi.cos(), r * phi.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Deterministic i.i.d. Rayleigh channel set for one sweep cell. Noise power
/// is normalized to 1; rebuild with [`ChannelSet::new`] for other values.
pub fn generate_channels(seed: u64, trial: u64, k: usize, n: usize) -> ChannelSet {
    let mut rng = keyed_rng(seed, trial, k as u64, n as u64);
    let channels = (0..k)
        .map(|_| (0..n).map(|_| standard_complex_normal(&mut rng)).collect())
        .collect();
    ChannelSet::new(channels, 1.0).expect("k >= 1 and n >= 1")
}
