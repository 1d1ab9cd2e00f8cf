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

//! Differentially private one-way ANOVA.
//!
//! - [`anova`]: validated datasets and the exact SSA / SSE / F computation.
//! - [`mechanism`]: Laplace noise on SSA and SSE, released under a total budget epsilon.
//! - [`null_dist`]: Monte-Carlo null distribution of the noisy F and its p-values.
//! - [`sim`]: synthetic datasets and power experiments.
//!
//! A seeded release is reproducible, which is what tests need. Never reuse a
//! fixed seed on real sensitive data: repeated noise voids the guarantee.

pub mod anova;
pub mod error;
pub mod mechanism;
pub mod null_dist;
pub mod random;
pub mod sim;
pub mod sum;

pub use anova::{
    compute_f, compute_ssa, compute_sse, exact_anova, f_ratio, group_stats, validate_dataset, Dataset,
    ExactAnova, Group, GroupStats,
};
pub use error::{Error, Result};
pub use mechanism::{
    laplace_inverse_cdf, noise_scales, private_anova, sample_laplace, ssa_sensitivity, sse_sensitivity,
    Epsilon, LaplaceScale, PrivateAnovaResult, SSE_SENSITIVITY,
};
pub use null_dist::{
    estimated_sigma2, null_distribution, p_value, p_value_for_result, p_value_for_result_with,
    p_value_with, simulate_null_f_hat, NullConfig, NullVariance, PValueResult, Smoothing,
    DEFAULT_NULL_SIMS, SIGMA2_FLOOR,
};
pub use random::{chi_squared as sample_chi_squared, StreamRng, Substreams};
pub use sim::{
    default_n_grid, export_null_comparison, generate_dataset, power_curve, power_point, run_replicate,
    sample_truncated_normal, EffectSpec, NullSamples, PowerConfig, PowerCurvePoint, Preset, VarianceMode,
};
