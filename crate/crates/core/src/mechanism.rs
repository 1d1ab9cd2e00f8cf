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

//! The Laplace mechanism applied to SSA and SSE.
//!
//! The budget is split evenly: SSA and SSE are each released under `epsilon / 2`,
//! so the pair is `epsilon`-differentially private by composition. F-hat is
//! assembled from the two noisy sums without touching the data again.

use std::fmt;
use std::str::FromStr;

use rand_core::RngCore;

use crate::anova::{exact_anova, f_ratio, Dataset};
use crate::error::{Error, Result};
use crate::random::open_unit;

/// Sensitivity of SSE for data in `[0, 1]`.
pub const SSE_SENSITIVITY: f64 = 7.0;

/// Privacy parameter. `Epsilon::INFINITY` is the non-private baseline, which
/// adds no noise at all.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const INFINITY: Epsilon = Epsilon(f64::INFINITY);

    /// Accepts any `epsilon > 0`, including `+inf`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 {
            Ok(Self(epsilon))
        } else {
            Err(Error::InvalidEpsilon(epsilon))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Budget spent on each of the two released sums.
    pub fn half(self) -> f64 {
        self.0 / 2.0
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Self::INFINITY);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Self::new(v),
            _ => Err(Error::InvalidConfig(format!("not a valid epsilon: {s:?}"))),
        }
    }
}

/// Scale `b` of a centered Laplace distribution, density `exp(-|x|/b) / 2b`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub const ZERO: LaplaceScale = LaplaceScale(0.0);

    /// Scale `sensitivity / epsilon`; zero for infinite epsilon.
    pub fn for_sensitivity(sensitivity: f64, epsilon: f64) -> Self {
        debug_assert!(sensitivity >= 0.0 && epsilon > 0.0);
        if epsilon.is_infinite() {
            Self::ZERO
        } else {
            Self(sensitivity / epsilon)
        }
    }

    pub fn new(b: f64) -> Result<Self> {
        if b >= 0.0 && b.is_finite() {
            Ok(Self(b))
        } else {
            Err(Error::InvalidConfig(format!("Laplace scale must be finite and >= 0, got {b}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn sse_sensitivity() -> f64 {
    SSE_SENSITIVITY
}

/// Sensitivity of SSA for data in `[0, 1]` with `n` total rows: `9 + 5/n`.
pub fn ssa_sensitivity(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::NonPositiveN);
    }
    Ok(9.0 + 5.0 / n as f64)
}

/// Laplace scales `(ssa, sse)` used when releasing a dataset of `n` rows.
pub fn noise_scales(n: usize, epsilon: Epsilon) -> Result<(LaplaceScale, LaplaceScale)> {
    let half = epsilon.half();
    Ok((
        LaplaceScale::for_sensitivity(ssa_sensitivity(n)?, half),
        LaplaceScale::for_sensitivity(sse_sensitivity(), half),
    ))
}

/// Inverse CDF of `Lap(b)`: `-b * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)`.
pub fn laplace_inverse_cdf(u: f64, b: LaplaceScale) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::UOutOfRange { u });
    }
    Ok(laplace_quantile(u, b.0))
}

#[inline]
fn laplace_quantile(u: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let centered = u - 0.5;
    -b * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// One `Lap(b)` draw. A zero scale returns exactly `0.0` without consuming randomness.
pub fn sample_laplace<R: RngCore + ?Sized>(rng: &mut R, b: LaplaceScale) -> f64 {
    if b.0 == 0.0 {
        return 0.0;
    }
    laplace_quantile(open_unit(rng), b.0)
}

/// The releasable output: noisy SSA, noisy SSE and the F ratio built from them.
///
/// The noisy sums may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateAnovaResult {
    pub ssa_hat: f64,
    pub sse_hat: f64,
    pub f_hat: f64,
    pub epsilon: Epsilon,
    pub n: usize,
    pub k: usize,
}

impl PrivateAnovaResult {
    /// Rebuilds a result from released sums, recomputing `f_hat`.
    pub fn from_release(ssa_hat: f64, sse_hat: f64, epsilon: Epsilon, n: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewGroups { k });
        }
        if n <= k {
            return Err(Error::DegenerateSize { n, k });
        }
        Ok(Self { ssa_hat, sse_hat, f_hat: f_ratio(ssa_hat, sse_hat, n, k), epsilon, n, k })
    }

    /// F-hat recomputed from the released fields alone.
    pub fn recompute_f_hat(&self) -> f64 {
        f_ratio(self.ssa_hat, self.sse_hat, self.n, self.k)
    }
}

/// Releases SSA and SSE of `d` under `epsilon`-differential privacy.
///
/// The SSA noise is drawn before the SSE noise, so `(seed, d, epsilon)` fixes
/// the output. With infinite epsilon the result equals the exact ANOVA and
/// fails with [`Error::UndefinedF`] if SSE is exactly zero.
pub fn private_anova<R: RngCore + ?Sized>(
    d: &Dataset,
    epsilon: Epsilon,
    rng: &mut R,
) -> Result<PrivateAnovaResult> {
    let (n, k) = (d.n(), d.k());
    let (ssa_scale, sse_scale) = noise_scales(n, epsilon)?;
    let exact = exact_anova(d);
    let ssa_hat = exact.ssa + sample_laplace(rng, ssa_scale);
    let sse_hat = exact.sse + sample_laplace(rng, sse_scale);
    if sse_hat == 0.0 {
        return Err(Error::UndefinedF);
    }
    Ok(PrivateAnovaResult { ssa_hat, sse_hat, f_hat: f_ratio(ssa_hat, sse_hat, n, k), epsilon, n, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anova::validate_dataset;
    use crate::random::Substreams;
    use std::f64::consts::LN_2;

    fn eps(e: f64) -> Epsilon {
        Epsilon::new(e).unwrap()
    }

    #[test]
    fn epsilon_validation_and_parsing() {
        assert_eq!(Epsilon::new(0.0), Err(Error::InvalidEpsilon(0.0)));
        assert!(Epsilon::new(-1.0).is_err());
        assert!(Epsilon::new(f64::NAN).is_err());
        assert!("inf".parse::<Epsilon>().unwrap().is_infinite());
        assert_eq!("0.1".parse::<Epsilon>().unwrap().value(), 0.1);
        assert!(matches!("0".parse::<Epsilon>(), Err(Error::InvalidEpsilon(_))));
        assert!("abc".parse::<Epsilon>().is_err());
        assert!("NaN".parse::<Epsilon>().is_err());
        assert_eq!(Epsilon::INFINITY.to_string(), "inf");
        assert_eq!(eps(0.5).to_string(), "0.5");
    }

    #[test]
    fn sensitivities_and_scales() {
        assert_eq!(sse_sensitivity(), 7.0);
        assert_eq!(ssa_sensitivity(10_000).unwrap(), 9.0005);
        assert_eq!(ssa_sensitivity(1).unwrap(), 14.0);
        assert_eq!(ssa_sensitivity(0), Err(Error::NonPositiveN));

        let (ssa, sse) = noise_scales(10_000, eps(1.0)).unwrap();
        assert_eq!(ssa.value(), 18.001);
        assert_eq!(sse.value(), 14.0);
        let (_, sse) = noise_scales(10_000, eps(0.1)).unwrap();
        assert!((sse.value() - 140.0).abs() < 1e-12);
        let (ssa, sse) = noise_scales(10, Epsilon::INFINITY).unwrap();
        assert_eq!((ssa, sse), (LaplaceScale::ZERO, LaplaceScale::ZERO));
    }

    #[test]
    fn inverse_cdf_spot_values() {
        let b = |x| LaplaceScale::new(x).unwrap();
        assert_eq!(laplace_inverse_cdf(0.5, b(14.0)).unwrap(), 0.0);
        assert!((laplace_inverse_cdf(0.75, b(1.0)).unwrap() - LN_2).abs() < 1e-12);
        assert!((laplace_inverse_cdf(0.75, b(14.0)).unwrap() - 14.0 * LN_2).abs() < 1e-12);
        assert!((laplace_inverse_cdf(0.25, b(1.0)).unwrap() + LN_2).abs() < 1e-12);
        assert_eq!(laplace_inverse_cdf(0.3, LaplaceScale::ZERO).unwrap(), 0.0);
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(laplace_inverse_cdf(u, b(1.0)), Err(Error::UOutOfRange { .. })));
        }
        assert!(LaplaceScale::new(-1.0).is_err());
    }

    #[test]
    fn zero_scale_sample_is_exactly_zero() {
        let mut rng = Substreams::new(0).stream(0);
        assert_eq!(sample_laplace(&mut rng, LaplaceScale::ZERO).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn laplace_sample_moments() {
        let mut rng = Substreams::new(11).stream(0);
        let b = LaplaceScale::new(14.0).unwrap();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_laplace(&mut rng, b)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var / 392.0 - 1.0).abs() < 0.02, "{var}");
    }

    fn example() -> Dataset {
        validate_dataset([("A", 0.2), ("A", 0.4), ("B", 0.6), ("B", 0.8)]).unwrap()
    }

    #[test]
    fn infinite_epsilon_is_exact() {
        let d = example();
        let r = private_anova(&d, Epsilon::INFINITY, &mut Substreams::new(1).stream(0)).unwrap();
        let a = exact_anova(&d);
        assert_eq!(r.ssa_hat.to_bits(), a.ssa.to_bits());
        assert_eq!(r.sse_hat.to_bits(), a.sse.to_bits());
        assert_eq!(r.f_hat.to_bits(), a.f.unwrap().to_bits());
        assert!((r.f_hat - 8.0).abs() < 1e-12);

        let flat = validate_dataset([("A", 0.2), ("A", 0.2), ("B", 0.6)]).unwrap();
        let mut rng = Substreams::new(1).stream(0);
        assert_eq!(private_anova(&flat, Epsilon::INFINITY, &mut rng), Err(Error::UndefinedF));
    }

    #[test]
    fn seeded_release_is_reproducible() {
        let d = example();
        let run = || private_anova(&d, eps(1.0), &mut Substreams::new(7).stream(0)).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.ssa_hat.to_bits(), b.ssa_hat.to_bits());
        assert_eq!(a.sse_hat.to_bits(), b.sse_hat.to_bits());
        assert_eq!(a.f_hat.to_bits(), b.f_hat.to_bits());
        assert_eq!(a.recompute_f_hat().to_bits(), a.f_hat.to_bits());
    }

    #[test]
    fn ssa_noise_is_drawn_first() {
        let d = example();
        let exact = exact_anova(&d);
        let (ssa_scale, sse_scale) = noise_scales(d.n(), eps(1.0)).unwrap();
        let mut manual = Substreams::new(9).stream(0);
        let z1 = sample_laplace(&mut manual, ssa_scale);
        let z2 = sample_laplace(&mut manual, sse_scale);
        let r = private_anova(&d, eps(1.0), &mut Substreams::new(9).stream(0)).unwrap();
        assert_eq!(r.ssa_hat, exact.ssa + z1);
        assert_eq!(r.sse_hat, exact.sse + z2);
    }

    #[test]
    fn from_release_matches_mechanism() {
        let d = example();
        let r = private_anova(&d, eps(0.3), &mut Substreams::new(3).stream(1)).unwrap();
        let rebuilt = PrivateAnovaResult::from_release(r.ssa_hat, r.sse_hat, r.epsilon, r.n, r.k).unwrap();
        assert_eq!(rebuilt, r);
        assert!(PrivateAnovaResult::from_release(1.0, 1.0, eps(1.0), 2, 2).is_err());
    }
}
