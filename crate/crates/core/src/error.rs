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

use thiserror::Error;

/// Errors produced by dataset validation, the mechanism and the Monte-Carlo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("value {value} in group {group:?} is outside [0, 1]")]
    ValueOutOfRange { group: String, value: f64 },

    #[error("at least 2 groups are required, found {k}")]
    TooFewGroups { k: usize },

    #[error("group {label:?} has no values")]
    EmptyGroup { label: String },

    #[error("group label {label:?} appears more than once")]
    DuplicateLabel { label: String },

    #[error("total row count n = {n} must exceed the group count k = {k}")]
    DegenerateSize { n: usize, k: usize },

    #[error("F is undefined: within-group sum of squares is exactly zero")]
    UndefinedF,

    #[error("row count must be positive")]
    NonPositiveN,

    #[error("uniform input {u} is outside the open interval (0, 1)")]
    UOutOfRange { u: f64 },

    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("null sample is empty")]
    EmptyNullSample,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
