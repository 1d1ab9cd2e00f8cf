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

//! Monte-Carlo null distribution of the noisy F statistic and the p-values
//! derived from it.
//!
//! Under the null, SSA ~ sigma^2 chi^2(k-1) and SSE ~ sigma^2 chi^2(n-k). The
//! released sums carry Laplace noise on top, which breaks the usual cancellation
//! of sigma^2, so the null has to be simulated for a specific variance. Every
//! routine here reads only a released result, never the data.

use rand_core::RngCore;
use rayon::prelude::*;

use crate::anova::f_ratio;
use crate::error::{Error, Result};
use crate::mechanism::{noise_scales, sample_laplace, Epsilon, LaplaceScale, PrivateAnovaResult};
use crate::random::{chi_squared, Substreams};

/// Number of null draws used when the caller does not choose one.
pub const DEFAULT_NULL_SIMS: usize = 100_000;

/// Lower bound on the variance plugged into the null. A noisy SSE can be zero
/// or negative; data in `[0, 1]` has variance at most 0.25.
pub const SIGMA2_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullConfig {
    pub n: usize,
    pub k: usize,
    pub epsilon: Epsilon,
    pub sigma2: f64,
    pub sims: usize,
}

impl NullConfig {
    pub fn new(n: usize, k: usize, epsilon: Epsilon, sigma2: f64, sims: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewGroups { k });
        }
        if n <= k {
            return Err(Error::DegenerateSize { n, k });
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma2 must be positive, got {sigma2}")));
        }
        if sims == 0 {
            return Err(Error::InvalidConfig("number of null simulations must be at least 1".into()));
        }
        Ok(Self { n, k, epsilon, sigma2, sims })
    }
}

/// Precomputed per-configuration constants for the hot loop.
#[derive(Debug, Clone, Copy)]
struct NullSampler {
    n: usize,
    k: usize,
    sigma2: f64,
    ssa_scale: LaplaceScale,
    sse_scale: LaplaceScale,
}

impl NullSampler {
    fn new(c: &NullConfig) -> Self {
        let (ssa_scale, sse_scale) =
            noise_scales(c.n, c.epsilon).expect("NullConfig guarantees n > k >= 2");
        Self { n: c.n, k: c.k, sigma2: c.sigma2, ssa_scale, sse_scale }
    }

    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let df_between = (self.k - 1) as u64;
        let df_within = (self.n - self.k) as u64;
        loop {
            let ssa = self.sigma2 * chi_squared(rng, df_between) + sample_laplace(rng, self.ssa_scale);
            let sse = self.sigma2 * chi_squared(rng, df_within) + sample_laplace(rng, self.sse_scale);
            if sse != 0.0 {
                return f_ratio(ssa, sse, self.n, self.k);
            }
        }
    }
}

/// One draw of F-hat under the null. Negative noisy sums are kept; only an
/// exactly zero simulated SSE is redrawn.
pub fn simulate_null_f_hat<R: RngCore + ?Sized>(c: &NullConfig, rng: &mut R) -> f64 {
    NullSampler::new(c).draw(rng)
}

/// `c.sims` independent null draws. Draw `i` uses substream `i` of `seed`, so
/// the output does not depend on the number of worker threads.
pub fn null_distribution(c: &NullConfig, seed: u64) -> Vec<f64> {
    let sampler = NullSampler::new(c);
    let streams = Substreams::new(seed);
    (0..c.sims as u64)
        .into_par_iter()
        .map(|i| sampler.draw(&mut streams.stream(i)))
        .collect()
}

/// How the tail count becomes a p-value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Smoothing {
    /// `count / N`.
    #[default]
    None,
    /// `(count + 1) / (N + 1)`.
    AddOne,
}

/// Fraction of null draws at or above `f_observed`.
pub fn p_value(f_observed: f64, null_samples: &[f64]) -> Result<f64> {
    p_value_with(f_observed, null_samples, Smoothing::None)
}

pub fn p_value_with(f_observed: f64, null_samples: &[f64], smoothing: Smoothing) -> Result<f64> {
    if null_samples.is_empty() {
        return Err(Error::EmptyNullSample);
    }
    let at_or_above = null_samples.iter().filter(|&&s| s >= f_observed).count();
    let total = null_samples.len();
    Ok(match smoothing {
        Smoothing::None => at_or_above as f64 / total as f64,
        Smoothing::AddOne => (at_or_above + 1) as f64 / (total + 1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValueResult {
    pub p: f64,
    pub sigma2_used: f64,
    pub sims: usize,
    pub f_observed: f64,
}

/// Variance plugged into the null distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullVariance {
    /// `max(sse_hat / (n - k), SIGMA2_FLOOR)`, read from the release.
    Estimated,
    /// A variance known from outside the data (simulation ground truth).
    Known(f64),
}

/// Variance estimate `sse_hat / (n - k)`, floored at [`SIGMA2_FLOOR`].
pub fn estimated_sigma2(r: &PrivateAnovaResult) -> f64 {
    let estimate = r.sse_hat / (r.n - r.k) as f64;
    // NaN-safe max: a NaN estimate falls to the floor as well.
    if estimate > SIGMA2_FLOOR {
        estimate
    } else {
        SIGMA2_FLOOR
    }
}

/// p-value of a release against the null simulated at the estimated variance.
pub fn p_value_for_result(r: &PrivateAnovaResult, sims: usize, seed: u64) -> Result<PValueResult> {
    p_value_for_result_with(r, NullVariance::Estimated, sims, seed, Smoothing::None)
}

pub fn p_value_for_result_with(
    r: &PrivateAnovaResult,
    variance: NullVariance,
    sims: usize,
    seed: u64,
    smoothing: Smoothing,
) -> Result<PValueResult> {
    if sims == 0 {
        return Err(Error::EmptyNullSample);
    }
    let sigma2 = match variance {
        NullVariance::Estimated => estimated_sigma2(r),
        NullVariance::Known(s2) => s2,
    };
    let config = NullConfig::new(r.n, r.k, r.epsilon, sigma2, sims)?;
    let samples = null_distribution(&config, seed);
    Ok(PValueResult {
        p: p_value_with(r.f_hat, &samples, smoothing)?,
        sigma2_used: sigma2,
        sims,
        f_observed: r.f_hat,
    })
}
