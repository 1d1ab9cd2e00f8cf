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

//! CSV ingestion and table emission.
//!
//! Input is a header line `group,value` followed by one `label,value` record
//! per line. Labels are arbitrary non-empty text without commas or newlines;
//! values are decimals in `[0, 1]`. Blank lines are ignored.

use std::io::{self, BufRead, Write};

use dpanova::{validate_dataset, Dataset, Epsilon, NullSamples, PowerCurvePoint};
use thiserror::Error;

pub const INPUT_HEADER: &str = "group,value";
pub const POWER_HEADER: &str = "n,epsilon,reps,power";
pub const NULL_HEADER: &str = "epsilon,f_hat";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("malformed header {found:?}: expected \"group,value\"")]
    MalformedHeader { found: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] dpanova::Error),
    #[error("reading input: {0}")]
    Io(#[from] io::Error),
}

/// Reads a `group,value` CSV into a validated dataset. Groups keep the order
/// in which their labels first appear.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<Dataset, CsvError> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                let line = line.trim_start_matches('\u{feff}').trim_end_matches('\r');
                if !line.trim().is_empty() {
                    break line.trim().to_owned();
                }
            }
            None => return Err(CsvError::MalformedHeader { found: String::new() }),
        }
    };
    if header != INPUT_HEADER {
        return Err(CsvError::MalformedHeader { found: header });
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CsvError::MalformedRow { line: line_no, reason };
        let (label, value) = line
            .split_once(',')
            .ok_or_else(|| malformed("expected two fields `group,value`".into()))?;
        if value.contains(',') {
            return Err(malformed("expected two fields `group,value`".into()));
        }
        if label.is_empty() {
            return Err(malformed("empty group label".into()));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| malformed(format!("value {:?} is not a number", value.trim())))?;
        rows.push((label.to_owned(), value));
    }
    Ok(validate_dataset(rows)?)
}

pub fn format_epsilon(e: Epsilon) -> String {
    e.to_string()
}

/// Writes a dataset in the input format. Values use the shortest decimal that
/// parses back to the same double.
pub fn write_dataset<W: Write>(mut out: W, data: &Dataset) -> io::Result<()> {
    writeln!(out, "{INPUT_HEADER}")?;
    for (label, value) in data.rows() {
        writeln!(out, "{label},{value}")?;
    }
    out.flush()
}

pub fn write_power_table<W: Write>(mut out: W, points: &[PowerCurvePoint]) -> io::Result<()> {
    writeln!(out, "{POWER_HEADER}")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.n, format_epsilon(p.epsilon), p.reps, p.power)?;
    }
    out.flush()
}

/// Long-format null draws, one row per draw.
pub fn write_null_table<W: Write>(mut out: W, samples: &[NullSamples]) -> io::Result<()> {
    writeln!(out, "{NULL_HEADER}")?;
    for s in samples {
        let eps = format_epsilon(s.epsilon);
        for f in &s.draws {
            writeln!(out, "{eps},{f}")?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset, CsvError> {
        parse_csv(s.as_bytes())
    }

    #[test]
    fn parses_simple_file() {
        let d = parse("group,value\nA,0.2\nA,0.4\nB,0.6\nB,0.8").unwrap();
        assert_eq!((d.k(), d.n()), (2, 4));
        let d = parse("\u{feff}group,value\r\nA,0.2\r\n\r\nB,0.6\r\nB,1\r\n").unwrap();
        assert_eq!(d.group_sizes(), vec![1, 2]);
        let d = parse("group,value\nwith space,0.2\nwith space,0.3\nZ,1e-1\n").unwrap();
        assert_eq!(d.groups()[0].label, "with space");
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        assert!(matches!(parse("group,value\nA,abc"), Err(CsvError::MalformedRow { line: 2, .. })));
        assert!(matches!(parse("group,value\nA,0.1\nB"), Err(CsvError::MalformedRow { line: 3, .. })));
        assert!(matches!(parse("group,value\nA,0.1,0.2"), Err(CsvError::MalformedRow { line: 2, .. })));
        assert!(matches!(parse("group,value\n,0.1"), Err(CsvError::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(parse("value,group\nA,0.2"), Err(CsvError::MalformedHeader { .. })));
        assert!(matches!(parse(""), Err(CsvError::MalformedHeader { .. })));
    }

    #[test]
    fn validation_errors_pass_through() {
        assert!(matches!(
            parse("group,value\nA,1.5\nB,0.1"),
            Err(CsvError::Invalid(dpanova::Error::ValueOutOfRange { .. }))
        ));
        assert!(matches!(
            parse("group,value\nA,0.1\nA,0.2"),
            Err(CsvError::Invalid(dpanova::Error::TooFewGroups { k: 1 }))
        ));
        assert!(matches!(parse("group,value\nA,nan\nB,0.1\nB,0.2"), Err(CsvError::Invalid(_))));
    }

    #[test]
    fn dataset_round_trips_bitwise() {
        let d = parse("group,value\nA,0.1\nA,0.30000000000000004\nB,0.123456789012345678\nB,1\n").unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        assert_eq!(parse_csv(&buf[..]).unwrap(), d);
    }
}
