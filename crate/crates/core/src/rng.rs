//! Reproducible random streams.
//!
//! Every Monte Carlo trial owns its own generator, derived from a master seed
//! and a tuple of integer coordinates (cell indices, trial index). Results are
//! therefore a pure function of the seed and never depend on how trials are
//! scheduled across threads.
//!
//! The derivation is part of the external contract:
//!
//! ```text
//! splitmix64(x):
//!     z = x + 0x9E3779B97F4A7C15              (wrapping)
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 (wrapping)
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB (wrapping)
//!     return z ^ (z >> 31)
//!
//! mix(seed, w_1, ..., w_k):
//!     h = splitmix64(seed)
//!     for each w_i: h = splitmix64(h ^ splitmix64(w_i))
//!     return h
//!
//! key(h): s_0 = splitmix64(h), s_{i+1} = splitmix64(s_i) for i < 3;
//!         32-byte key = s_0 || s_1 || s_2 || s_3, each little-endian
//! ```
//!
//! The stream itself is ChaCha with 8 rounds keyed by `key(h)`, nonce 0.
//! Galton-Watson trial `t` uses `mix(seed, t)`; cooperative-model cell
//! `(i, j)` trial `t` uses `mix(seed, i, j, t)`, and a single-point survival
//! estimate is cell `(0, 0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub type StreamRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(seed), |h, w| splitmix64(h ^ splitmix64(*w)))
}

/// Generator for the stream addressed by `(seed, words)`.
pub fn stream(seed: u64, words: &[u64]) -> StreamRng {
    let mut s = mix(seed, words);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn trial_stream(seed: u64, trial: u64) -> StreamRng {
    stream(seed, &[trial])
}

pub fn cell_stream(seed: u64, p_index: u64, q_index: u64, trial: u64) -> StreamRng {
    stream(seed, &[p_index, q_index, trial])
}

/// Draws from Binomial(`trials`, `p`); `p` must lie in `[0, 1]`.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability checked above")
        .sample(rng)
}

/// Smallest `k` with `P(Bin(trials, p) <= k) >= u`.
///
/// Non-decreasing in `trials`, `p` and `u`, which is what makes two chains
/// driven by the same uniforms monotonically coupled.
pub fn binomial_inverse_cdf(trials: u64, p: f64, u: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    let cdf = |k: u64| -> f64 {
        if k >= trials {
            1.0
        } else {
            statrs::function::beta::beta_reg((trials - k) as f64, (k + 1) as f64, 1.0 - p)
        }
    };
    let (mut lo, mut hi) = (0u64, trials);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}
