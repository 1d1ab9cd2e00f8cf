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

//! Synthetic-data power experiments.
//!
//! A replicate draws a dataset from an [`EffectSpec`], releases it through
//! [`private_anova`] and converts the release into a p-value. Power is the
//! fraction of replicates with `p < alpha`. Replicate `i` at grid point
//! `(n, epsilon)` uses its own substream keyed by `(seed, n, epsilon, i)`, so
//! tables do not depend on scheduling.

use std::str::FromStr;

use rand_core::RngCore;
use rayon::prelude::*;

use crate::anova::{Dataset, Group};
use crate::error::{Error, Result};
use crate::mechanism::{private_anova, Epsilon};
use crate::null_dist::{
    null_distribution, p_value, p_value_for_result_with, NullConfig, NullVariance, Smoothing,
};
use crate::random::{mix, standard_normal, Substreams};

/// Variance used by the null distribution inside a replicate.
pub type VarianceMode = NullVariance;

/// How out-of-range normal draws are brought into `[0, 1]`.
pub const TRUNCATION_MODE: &str = "clamp";

/// Normal groups with common standard deviation, one mean per group.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSpec {
    group_means: Vec<f64>,
    group_sd: f64,
}

impl EffectSpec {
    pub fn new(group_means: Vec<f64>, group_sd: f64) -> Result<Self> {
        if group_means.len() < 2 {
            return Err(Error::TooFewGroups { k: group_means.len() });
        }
        if let Some(m) = group_means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidConfig(format!("group mean {m} is outside [0, 1]")));
        }
        if !(group_sd > 0.0 && group_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!("group sd must be positive, got {group_sd}")));
        }
        Ok(Self { group_means, group_sd })
    }

    /// Three groups, means 0.35 / 0.5 / 0.65, sd 0.15.
    pub fn three_group() -> Self {
        Self { group_means: vec![0.35, 0.5, 0.65], group_sd: 0.15 }
    }

    /// Six groups with a smaller effect, means 0.4 / 0.45 / 0.5 / 0.5 / 0.5 / 0.6, sd 0.2.
    pub fn six_group() -> Self {
        Self { group_means: vec![0.4, 0.45, 0.5, 0.5, 0.5, 0.6], group_sd: 0.2 }
    }

    pub fn group_means(&self) -> &[f64] {
        &self.group_means
    }

    pub fn group_sd(&self) -> f64 {
        self.group_sd
    }

    pub fn k(&self) -> usize {
        self.group_means.len()
    }
}

/// Named effect presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    ThreeGroup,
    SixGroup,
}

impl Preset {
    pub fn effect(self) -> EffectSpec {
        match self {
            Preset::ThreeGroup => EffectSpec::three_group(),
            Preset::SixGroup => EffectSpec::six_group(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-3group" => Ok(Preset::ThreeGroup),
            "paper-6group" => Ok(Preset::SixGroup),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset {other:?} (expected paper-3group or paper-6group)"
            ))),
        }
    }
}

/// Normal(mean, sd) draw clamped to `[0, 1]`.
pub fn sample_truncated_normal<R: RngCore + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    (mean + sd * standard_normal(rng)).clamp(0.0, 1.0)
}

/// Group sizes `n / k`, with the first `n % k` groups one larger.
pub fn group_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Draws a dataset of `n` rows; groups are labeled `g1..gk`.
pub fn generate_dataset<R: RngCore + ?Sized>(effect: &EffectSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    let k = effect.k();
    if n <= k {
        return Err(Error::DegenerateSize { n, k });
    }
    let groups = group_sizes(n, k)
        .into_iter()
        .zip(&effect.group_means)
        .enumerate()
        .map(|(i, (size, &mean))| Group {
            label: format!("g{}", i + 1),
            values: (0..size).map(|_| sample_truncated_normal(rng, mean, effect.group_sd)).collect(),
        })
        .collect();
    Dataset::from_groups(groups)
}

/// Generates data, releases it and returns the p-value of the release.
pub fn run_replicate<R: RngCore + ?Sized>(
    effect: &EffectSpec,
    n: usize,
    epsilon: Epsilon,
    variance_mode: VarianceMode,
    null_sims: usize,
    rng: &mut R,
) -> Result<f64> {
    let data = generate_dataset(effect, n, rng)?;
    let release = private_anova(&data, epsilon, rng)?;
    let null_seed = rng.next_u64();
    Ok(p_value_for_result_with(&release, variance_mode, null_sims, null_seed, Smoothing::None)?.p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub effect: EffectSpec,
    pub n_grid: Vec<usize>,
    pub epsilons: Vec<Epsilon>,
    pub reps: usize,
    pub alpha: f64,
    pub null_sims: usize,
    pub variance_mode: VarianceMode,
    pub seed: u64,
}

impl PowerConfig {
    /// Defaults: 1000 replicates, alpha 0.05, 100,000 null draws, estimated variance.
    pub fn new(effect: EffectSpec, n_grid: Vec<usize>, epsilons: Vec<Epsilon>, seed: u64) -> Self {
        Self {
            effect,
            n_grid,
            epsilons,
            reps: 1000,
            alpha: 0.05,
            null_sims: crate::null_dist::DEFAULT_NULL_SIMS,
            variance_mode: NullVariance::Estimated,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.effect.k();
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n grid is empty".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n <= k) {
            return Err(Error::DegenerateSize { n, k });
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidConfig("epsilon list is empty".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.null_sims == 0 {
            return Err(Error::InvalidConfig("null sims must be at least 1".into()));
        }
        if let NullVariance::Known(s2) = self.variance_mode {
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(Error::InvalidConfig(format!("known variance must be positive, got {s2}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCurvePoint {
    pub n: usize,
    pub epsilon: Epsilon,
    pub power: f64,
    pub reps: usize,
}

/// Substreams for the replicates at one grid point.
fn replicate_streams(seed: u64, n: usize, epsilon: Epsilon) -> Substreams {
    Substreams::keyed(&[seed, n as u64, epsilon.value().to_bits()])
}

/// p-values of every replicate at `(n, epsilon)`, in replicate order.
pub fn replicate_p_values(cfg: &PowerConfig, n: usize, epsilon: Epsilon) -> Result<Vec<f64>> {
    cfg.validate()?;
    let streams = replicate_streams(cfg.seed, n, epsilon);
    (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| {
            run_replicate(
                &cfg.effect,
                n,
                epsilon,
                cfg.variance_mode,
                cfg.null_sims,
                &mut streams.stream(i),
            )
        })
        .collect()
}

pub fn power_point(cfg: &PowerConfig, n: usize, epsilon: Epsilon) -> Result<PowerCurvePoint> {
    let p_values = replicate_p_values(cfg, n, epsilon)?;
    let significant = p_values.iter().filter(|&&p| p < cfg.alpha).count();
    Ok(PowerCurvePoint { n, epsilon, power: significant as f64 / cfg.reps as f64, reps: cfg.reps })
}

/// One point per `(n, epsilon)` pair, `n` outermost, both in configured order.
pub fn power_curve(cfg: &PowerConfig) -> Result<Vec<PowerCurvePoint>> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.n_grid.len() * cfg.epsilons.len());
    for &n in &cfg.n_grid {
        for &epsilon in &cfg.epsilons {
            points.push(power_point(cfg, n, epsilon)?);
        }
    }
    Ok(points)
}

/// Default sizes: a log grid from 10 to one million, each rounded to the
/// nearest multiple of `k` (at least `2k`), capped at `max_n`.
pub fn default_n_grid(k: usize, max_n: usize) -> Vec<usize> {
    const BASE: [usize; 11] =
        [10, 30, 100, 300, 1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000];
    let k = k.max(1);
    let mut grid: Vec<usize> = BASE
        .iter()
        .filter(|&&n| n <= max_n)
        .map(|&n| (((n + k / 2) / k) * k).max(2 * k))
        .collect();
    grid.dedup();
    grid
}

/// Null draws of F-hat for one epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSamples {
    pub epsilon: Epsilon,
    pub draws: Vec<f64>,
}

impl NullSamples {
    /// Fraction of draws at or above `threshold`.
    pub fn fraction_at_or_above(&self, threshold: f64) -> f64 {
        p_value(threshold, &self.draws).unwrap_or(0.0)
    }
}

/// Null distributions of F-hat at a common `(n, k, sigma2)` for several epsilons.
pub fn export_null_comparison(
    n: usize,
    k: usize,
    sigma2: f64,
    epsilons: &[Epsilon],
    sims: usize,
    seed: u64,
) -> Result<Vec<NullSamples>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("epsilon list is empty".into()));
    }
    epsilons
        .iter()
        .map(|&epsilon| {
            let config = NullConfig::new(n, k, epsilon, sigma2, sims)?;
            let draws = null_distribution(&config, mix(&[seed, epsilon.value().to_bits()]));
            Ok(NullSamples { epsilon, draws })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effect_validation() {
        assert!(EffectSpec::new(vec![0.5], 0.1).is_err());
        assert!(EffectSpec::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(EffectSpec::new(vec![0.5, 1.6], 0.1).is_err());
        assert_eq!("paper-6group".parse::<Preset>().unwrap().effect().k(), 6);
        assert!("paper-9group".parse::<Preset>().is_err());
    }

    #[test]
    fn truncated_normal_stays_in_bounds() {
        let mut rng = Substreams::new(1).stream(0);
        for (m, sd) in [(0.0, 1.0), (1.0, 5.0), (0.5, 0.15), (-3.0, 0.1)] {
            assert!((0..10_000).all(|_| (0.0..=1.0).contains(&sample_truncated_normal(&mut rng, m, sd))));
        }
        assert!((0..1000).all(|_| sample_truncated_normal(&mut rng, 2.0, 0.01) == 1.0));
    }

    #[test]
    fn truncated_normal_symmetric_mean() {
        let mut rng = Substreams::new(2).stream(0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_truncated_normal(&mut rng, 0.5, 0.15)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.001, "{mean}");
    }

    #[test]
    fn group_size_rule() {
        let mut rng = Substreams::new(3).stream(0);
        let three = EffectSpec::three_group();
        assert_eq!(generate_dataset(&three, 9999, &mut rng).unwrap().group_sizes(), vec![3333; 3]);
        assert_eq!(generate_dataset(&three, 10, &mut rng).unwrap().group_sizes(), vec![4, 3, 3]);
        let six = generate_dataset(&EffectSpec::six_group(), 60, &mut rng).unwrap();
        assert_eq!((six.k(), six.group_sizes()), (6, vec![10; 6]));
        assert_eq!(
            generate_dataset(&three, 3, &mut rng),
            Err(Error::DegenerateSize { n: 3, k: 3 })
        );
        assert_eq!(group_sizes(11, 4), vec![3, 3, 3, 2]);
    }

    #[test]
    fn default_grid_rounds_to_multiples_of_k() {
        assert_eq!(default_n_grid(3, 30_000), vec![9, 30, 99, 300, 999, 3000, 9999, 30_000]);
        assert_eq!(default_n_grid(6, 1_000), vec![12, 30, 102, 300, 1002]);
        assert_eq!(default_n_grid(3, usize::MAX).len(), 11);
    }

    #[test]
    fn replicate_is_deterministic() {
        let effect = EffectSpec::three_group();
        let e = Epsilon::new(1.0).unwrap();
        let run = || run_replicate(&effect, 300, e, NullVariance::Estimated, 500, &mut Substreams::new(5).stream(3));
        assert_eq!(run().unwrap().to_bits(), run().unwrap().to_bits());
        let known = run_replicate(&effect, 300, e, NullVariance::Known(0.0225), 500, &mut Substreams::new(5).stream(3));
        assert!((0.0..=1.0).contains(&known.unwrap()));
    }

    #[test]
    fn config_validation() {
        let e = vec![Epsilon::INFINITY];
        let cfg = PowerConfig::new(EffectSpec::three_group(), vec![99], e.clone(), 1);
        assert!(cfg.validate().is_ok());
        assert!(PowerConfig { n_grid: vec![], ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { n_grid: vec![99, 3], ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { epsilons: vec![], ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { reps: 0, ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { alpha: 1.0, ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { null_sims: 0, ..cfg.clone() }.validate().is_err());
        assert!(PowerConfig { variance_mode: NullVariance::Known(-1.0), ..cfg }.validate().is_err());
    }

    #[test]
    fn single_point_curve() {
        let mut cfg = PowerConfig::new(EffectSpec::three_group(), vec![99], vec![Epsilon::INFINITY], 1);
        cfg.reps = 1;
        cfg.null_sims = 200;
        let curve = power_curve(&cfg).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!((curve[0].n, curve[0].reps), (99, 1));
        assert!(curve[0].power == 0.0 || curve[0].power == 1.0);
    }

    #[test]
    fn null_comparison_shape() {
        let eps = [Epsilon::INFINITY, Epsilon::new(1.0).unwrap()];
        let out = export_null_comparison(100, 4, 0.02, &eps, 300, 9).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.draws.len() == 300));
        assert_eq!(out[0].fraction_at_or_above(f64::NEG_INFINITY), 1.0);
        assert!(export_null_comparison(4, 4, 0.02, &eps, 300, 9).is_err());
        assert!(export_null_comparison(100, 4, 0.02, &[], 300, 9).is_err());
    }
}
