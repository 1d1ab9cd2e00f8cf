//
// Copyright 2026 The dpanova Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! Seeded generators and the variate samplers used by the mechanism and the
//! Monte-Carlo routines.
//!
//! Every sampler is written against [`RngCore`] using only `ln`, `sqrt`,
//! `exp` and `powf`, so a `(seed, index)` pair reproduces the same draws on
//! any platform with IEEE-754 doubles.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Family of independent generator streams addressed by a 64-bit index.
///
/// All streams share one ChaCha key derived from the seed and differ in the
/// stream (nonce) word, so the draws for index `i` never depend on how many
/// other indices were consumed, or by which thread.
#[derive(Clone)]
pub struct Substreams {
    base: StreamRng,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Self { base: StreamRng::seed_from_u64(seed) }
    }

    /// Streams keyed by several integers, e.g. `(seed, n, epsilon bits)`.
    pub fn keyed(parts: &[u64]) -> Self {
        Self::new(mix(parts))
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Folds several words into one seed with the SplitMix64 finalizer.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h = 0x6a09_e667_f3bc_c909_u64;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw from the open interval `(0, 1)`: the midpoint of one of the
/// 2^52 equal cells, so neither endpoint can occur. (With 2^53 cells the top
/// midpoint rounds to 1.0.)
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal variate by Marsaglia's polar method. The second variate of
/// each accepted pair is discarded so a draw consumes a self-contained block
/// of the stream.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * open_unit(rng) - 1.0;
        let v = 2.0 * open_unit(rng) - 1.0;
        let s = u * u + v * v;
        if s < 1.0 && s > 0.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Gamma(shape, 1) variate by the Marsaglia-Tsang squeeze/rejection method.
///
/// For `shape < 1` the variate is drawn at `shape + 1` and boosted by
/// `U^(1/shape)`.
pub fn gamma<R: RngCore + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = open_unit(rng).powf(1.0 / shape);
        return gamma(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Chi-squared variate with `df` degrees of freedom, as `2 * Gamma(df / 2)`.
pub fn chi_squared<R: RngCore + ?Sized>(rng: &mut R, df: u64) -> f64 {
    debug_assert!(df >= 1);
    2.0 * gamma(rng, df as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn streams_are_independent_of_consumption_order() {
        let s = Substreams::new(42);
        let mut a = s.stream(3);
        let first: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let mut other = s.stream(2);
        other.next_u64();
        let mut b = s.stream(3);
        let again: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_eq!(first, again);
        assert_ne!(s.stream(0).next_u64(), s.stream(1).next_u64());
        assert_ne!(Substreams::new(1).stream(0).next_u64(), Substreams::new(2).stream(0).next_u64());
    }

    #[test]
    fn open_unit_excludes_endpoints() {
        struct Fixed(u64);
        impl RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> Result<(), rand_core::Error> {
                Ok(())
            }
        }
        let lo = open_unit(&mut Fixed(0));
        let hi = open_unit(&mut Fixed(u64::MAX));
        assert!(lo > 0.0 && hi < 1.0);
    }

    #[test]
    fn normal_moments() {
        let mut rng = Substreams::new(1).stream(0);
        let xs: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut rng)).collect();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 1.0).abs() < 0.015, "{v}");
    }

    #[test]
    fn chi_squared_df5_moments() {
        let mut rng = Substreams::new(2).stream(0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| chi_squared(&mut rng, 5)).collect();
        let (m, v) = moments(&xs);
        assert!((m - 5.0).abs() < 0.05, "mean {m}");
        assert!((v - 10.0).abs() < 0.3, "variance {v}");
    }

    #[test]
    fn chi_squared_df2_median() {
        let mut rng = Substreams::new(3).stream(0);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| chi_squared(&mut rng, 2)).collect();
        xs.sort_by(f64::total_cmp);
        let median = xs[xs.len() / 2];
        let expected = 2.0 * std::f64::consts::LN_2;
        assert!((median - expected).abs() < 0.01 * expected, "{median}");
    }

    #[test]
    fn chi_squared_df1_uses_boost() {
        let mut rng = Substreams::new(4).stream(0);
        let xs: Vec<f64> = (0..400_000).map(|_| chi_squared(&mut rng, 1)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let (m, v) = moments(&xs);
        assert!((m - 1.0).abs() < 0.01, "{m}");
        assert!((v - 2.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn chi_squared_large_df() {
        let mut rng = Substreams::new(5).stream(0);
        let df = 9990;
        let xs: Vec<f64> = (0..100_000).map(|_| chi_squared(&mut rng, df)).collect();
        let (m, v) = moments(&xs);
        assert!((m / df as f64 - 1.0).abs() < 1e-3, "{m}");
        assert!((v / (2.0 * df as f64) - 1.0).abs() < 0.03, "{v}");
    }
}
