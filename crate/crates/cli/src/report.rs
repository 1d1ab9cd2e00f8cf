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

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use dpanova::{Epsilon, PrivateAnovaResult};

/// JSON report of one analysis. Every field is derived from the release, so
/// publishing the report costs no privacy beyond the epsilon it records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub ssa_hat: f64,
    pub sse_hat: f64,
    pub f_hat: f64,
    pub p_value: f64,
    pub sigma2_used: f64,
    #[serde(serialize_with = "serialize_epsilon", deserialize_with = "deserialize_epsilon")]
    pub epsilon: Epsilon,
    pub n: usize,
    pub k: usize,
    pub null_sims: usize,
    pub seed: u64,
    pub tool_version: String,
}

impl AnalysisReport {
    /// The mechanism output carried by this report.
    pub fn release(&self) -> dpanova::Result<PrivateAnovaResult> {
        PrivateAnovaResult::from_release(self.ssa_hat, self.sse_hat, self.epsilon, self.n, self.k)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields are serializable");
        s.push('\n');
        s
    }
}

fn serialize_epsilon<S: Serializer>(e: &Epsilon, s: S) -> Result<S::Ok, S::Error> {
    if e.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(e.value())
    }
}

fn deserialize_epsilon<'de, D: Deserializer<'de>>(d: D) -> Result<Epsilon, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }
    let parsed = match Repr::deserialize(d)? {
        Repr::Number(v) => Epsilon::new(v),
        Repr::Text(t) => t.parse(),
    };
    parsed.map_err(serde::de::Error::custom)
}
