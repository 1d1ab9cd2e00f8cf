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

//! Validated datasets and the exact (non-private) one-way ANOVA.
//!
//! All sums go through [`exact_sum`], so group statistics, SSA and SSE are
//! bitwise independent of row order within a group and of group order.
//! Nothing in this module is safe to release: these are the raw statistics
//! the mechanism perturbs.

use crate::error::{Error, Result};
use crate::sum::exact_sum;

/// One labeled group of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

/// A database of `k >= 2` labeled groups with every value in `[0, 1]` and `n > k`.
///
/// Values are validated, never clamped. Normalizing raw data into `[0, 1]`
/// must happen upstream with bounds fixed independently of the data, since
/// bounds chosen from the data leak information about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    groups: Vec<Group>,
    n: usize,
}

impl Dataset {
    /// Builds a dataset from explicit groups, checking every invariant.
    pub fn from_groups(groups: Vec<Group>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, g) in groups.iter().enumerate() {
            if groups[..i].iter().any(|h| h.label == g.label) {
                return Err(Error::DuplicateLabel { label: g.label.clone() });
            }
            if g.values.is_empty() {
                return Err(Error::EmptyGroup { label: g.label.clone() });
            }
            if let Some(&value) = g.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::ValueOutOfRange { group: g.label.clone(), value });
            }
        }
        let k = groups.len();
        if k < 2 {
            return Err(Error::TooFewGroups { k });
        }
        let n = groups.iter().map(|g| g.values.len()).sum();
        if n <= k {
            return Err(Error::DegenerateSize { n, k });
        }
        Ok(Self { groups, n })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Total row count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Group count.
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.values.len()).collect()
    }

    /// Rows as `(label, value)` pairs in group order, then row order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, f64)> {
        self.groups
            .iter()
            .flat_map(|g| g.values.iter().map(move |&v| (g.label.as_str(), v)))
    }
}

/// Groups raw `(label, value)` rows by label, in order of first appearance.
pub fn validate_dataset<L, I>(raw: I) -> Result<Dataset>
where
    L: AsRef<str>,
    I: IntoIterator<Item = (L, f64)>,
{
    let mut groups: Vec<Group> = Vec::new();
    for (label, value) in raw {
        let label = label.as_ref();
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ValueOutOfRange { group: label.to_owned(), value });
        }
        match groups.iter_mut().find(|g| g.label == label) {
            Some(g) => g.values.push(value),
            None => groups.push(Group { label: label.to_owned(), values: vec![value] }),
        }
    }
    Dataset::from_groups(groups)
}

/// Per-group means, the grand mean and the group sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub group_means: Vec<f64>,
    pub grand_mean: f64,
    pub group_sizes: Vec<usize>,
}

pub fn group_stats(d: &Dataset) -> GroupStats {
    let group_means = d
        .groups()
        .iter()
        .map(|g| exact_sum(g.values.iter().copied()) / g.values.len() as f64)
        .collect();
    let grand_mean = exact_sum(d.rows().map(|(_, v)| v)) / d.n() as f64;
    GroupStats { group_means, grand_mean, group_sizes: d.group_sizes() }
}

/// Between-group sum of squares, `sum_i n_i (mean_i - grand_mean)^2`.
pub fn compute_ssa(d: &Dataset, s: &GroupStats) -> f64 {
    debug_assert_eq!(d.k(), s.group_means.len());
    exact_sum(s.group_means.iter().zip(&s.group_sizes).map(|(&m, &n_i)| {
        let dev = m - s.grand_mean;
        n_i as f64 * dev * dev
    }))
}

/// Within-group sum of squares, `sum_i sum_j (y_ij - mean_i)^2`.
pub fn compute_sse(d: &Dataset, s: &GroupStats) -> f64 {
    debug_assert_eq!(d.k(), s.group_means.len());
    exact_sum(d.groups().iter().zip(&s.group_means).flat_map(|(g, &m)| {
        g.values.iter().map(move |&y| {
            let dev = y - m;
            dev * dev
        })
    }))
}

/// `(ssa / (k - 1)) / (sse / (n - k))`.
///
/// This is the plain ratio shared by the exact and the private pipelines; it
/// performs no check on `sse`.
pub fn f_ratio(ssa: f64, sse: f64, n: usize, k: usize) -> f64 {
    (ssa / (k - 1) as f64) / (sse / (n - k) as f64)
}

/// Exact F statistic. Fails with [`Error::UndefinedF`] when `sse` is exactly zero.
pub fn compute_f(ssa: f64, sse: f64, n: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::TooFewGroups { k });
    }
    if n <= k {
        return Err(Error::DegenerateSize { n, k });
    }
    if sse == 0.0 {
        return Err(Error::UndefinedF);
    }
    Ok(f_ratio(ssa, sse, n, k))
}

/// Exact ANOVA table. `f` is `None` when SSE is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactAnova {
    pub ssa: f64,
    pub sse: f64,
    pub f: Option<f64>,
    pub df_between: usize,
    pub df_within: usize,
}

pub fn exact_anova(d: &Dataset) -> ExactAnova {
    let s = group_stats(d);
    let ssa = compute_ssa(d, &s);
    let sse = compute_sse(d, &s);
    let (n, k) = (d.n(), d.k());
    ExactAnova {
        ssa,
        sse,
        f: compute_f(ssa, sse, n, k).ok(),
        df_between: k - 1,
        df_within: n - k,
    }
}
