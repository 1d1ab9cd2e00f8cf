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

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dpanova::random::mix;
use dpanova::{
    export_null_comparison, generate_dataset, p_value_for_result_with, power_curve, private_anova,
    EffectSpec, Epsilon, NullVariance, PowerConfig, Preset, Smoothing, Substreams, DEFAULT_NULL_SIMS,
};
use rand_core::{OsRng, RngCore};
use thiserror::Error;

use crate::io::{parse_csv, write_dataset, write_null_table, write_power_table, CsvError};
use crate::report::AnalysisReport;

/// Tag mixed into the seed for the p-value stage of `analyze`.
const NULL_STREAM_TAG: u64 = 0x6e75_6c6c;

#[derive(Debug, Parser)]
#[command(name = "dpanova", version, about = "Differentially private one-way ANOVA")]
pub struct Cli {
    /// Worker threads for the Monte-Carlo stages (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Release noisy SSA, SSE and F for a CSV dataset, with a noise-aware p-value.
    Analyze(AnalyzeArgs),
    /// Power of the private test on synthetic data over an (n, epsilon) grid.
    Power(PowerArgs),
    /// Draws from the null distribution of the noisy F for plotting.
    Nulldist(NulldistArgs),
    /// Generate a synthetic dataset in the analyze input format.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input CSV with header `group,value`; reads stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Total privacy budget, or `inf` for the non-private baseline.
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: Epsilon,
    /// Seed for the noise. Drawn from the OS and echoed in the report when absent.
    /// Never reuse a fixed seed on real sensitive data.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_NULL_SIMS)]
    pub null_sims: usize,
    /// Fail unless the data has exactly this many groups.
    #[arg(long)]
    pub expected_k: Option<usize>,
    /// Report (count + 1) / (sims + 1) instead of count / sims.
    #[arg(long)]
    pub smooth_p: bool,
}

#[derive(Debug, Args)]
pub struct EffectArgs {
    /// Built-in effect: paper-3group or paper-6group.
    #[arg(long, conflicts_with_all = ["means", "sd"])]
    pub preset: Option<String>,
    /// Comma-separated group means in [0, 1].
    #[arg(long, requires = "sd")]
    pub means: Option<String>,
    /// Common group standard deviation.
    #[arg(long, requires = "means")]
    pub sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub effect: EffectArgs,
    /// Comma-separated database sizes; defaults to a log grid from 10 to 10^6.
    #[arg(long)]
    pub n_grid: Option<String>,
    /// Comma-separated epsilons (`inf` allowed).
    #[arg(long, default_value = "inf,1,0.1,0.01")]
    pub epsilons: String,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_NULL_SIMS)]
    pub null_sims: usize,
    /// `estimated` or `known:SIGMA2`.
    #[arg(long, default_value = "estimated")]
    pub variance_mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NulldistArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, default_value = "inf,1,0.1")]
    pub epsilons: String,
    #[arg(long, default_value_t = DEFAULT_NULL_SIMS)]
    pub sims: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print, per epsilon, the fraction of draws at or above this value (to stderr).
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub effect: EffectArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] CsvError),
    #[error(transparent)]
    Invalid(#[from] dpanova::Error),
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("writing output: {0}")]
    Output(io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 2 for anything the user can fix, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output(_) | CliError::Internal(_) => 1,
            CliError::Input(CsvError::Io(_)) => 1,
            _ => 2,
        }
    }
}

pub fn parse_epsilon(s: &str) -> Result<Epsilon, String> {
    match s.trim().parse::<Epsilon>() {
        Ok(e) => Ok(e),
        Err(dpanova::Error::InvalidEpsilon(v)) => Err(format!("epsilon must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_list<T, F>(flag: &str, s: &str, parse: F) -> Result<Vec<T>, CliError>
where
    F: Fn(&str) -> Result<T, String>,
{
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("--{flag} must not be empty")));
    }
    items
        .into_iter()
        .map(|t| parse(t).map_err(|e| CliError::Usage(format!("--{flag}: {e}"))))
        .collect()
}

fn parse_epsilons(s: &str) -> Result<Vec<Epsilon>, CliError> {
    parse_list("epsilons", s, parse_epsilon)
}

pub fn parse_variance_mode(s: &str) -> Result<NullVariance, CliError> {
    let bad = || CliError::Usage(format!("--variance-mode must be `estimated` or `known:SIGMA2`, got {s:?}"));
    match s.trim() {
        "estimated" => Ok(NullVariance::Estimated),
        other => {
            let v: f64 = other.strip_prefix("known:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if v > 0.0 && v.is_finite() {
                Ok(NullVariance::Known(v))
            } else {
                Err(CliError::Usage(format!("known variance must be positive, got {v}")))
            }
        }
    }
}

impl EffectArgs {
    fn resolve(&self) -> Result<EffectSpec, CliError> {
        match (&self.preset, &self.means, self.sd) {
            (Some(p), _, _) => Ok(p.parse::<Preset>()?.effect()),
            (None, Some(means), Some(sd)) => {
                let means = parse_list("means", means, |t| t.parse::<f64>().map_err(|e| e.to_string()))?;
                Ok(EffectSpec::new(means, sd)?)
            }
            _ => Err(CliError::Usage("give either --preset or both --means and --sd".into())),
        }
    }
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = OsRng.next_u64();
        eprintln!("seed: {s}");
        s
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|source| CliError::Open { path: p.to_owned(), source })?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Runs the mechanism once on the input and derives the p-value from the
/// release alone.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport, CliError> {
    let data = match &args.input {
        Some(path) => {
            let file = File::open(path).map_err(|source| CliError::Open { path: path.clone(), source })?;
            parse_csv(BufReader::new(file))?
        }
        None => parse_csv(io::stdin().lock())?,
    };
    if let Some(expected) = args.expected_k {
        if data.k() != expected {
            return Err(CliError::Usage(format!("expected {expected} groups, found {}", data.k())));
        }
    }
    if args.null_sims == 0 {
        return Err(CliError::Usage("--null-sims must be at least 1".into()));
    }
    let seed = seed_or_entropy(args.seed);
    let release = private_anova(&data, args.epsilon, &mut Substreams::new(seed).stream(0))?;
    drop(data);

    let mut report = AnalysisReport {
        ssa_hat: release.ssa_hat,
        sse_hat: release.sse_hat,
        f_hat: release.f_hat,
        p_value: f64::NAN,
        sigma2_used: f64::NAN,
        epsilon: release.epsilon,
        n: release.n,
        k: release.k,
        null_sims: args.null_sims,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
    };
    let smoothing = if args.smooth_p { Smoothing::AddOne } else { Smoothing::None };
    let p = p_value_for_result_with(
        &report.release()?,
        NullVariance::Estimated,
        report.null_sims,
        mix(&[seed, NULL_STREAM_TAG]),
        smoothing,
    )?;
    report.p_value = p.p;
    report.sigma2_used = p.sigma2_used;
    Ok(report)
}

pub fn cmd_power(args: &PowerArgs) -> Result<(), CliError> {
    let effect = args.effect.resolve()?;
    let n_grid = match &args.n_grid {
        Some(s) => parse_list("n-grid", s, |t| t.parse::<usize>().map_err(|e| e.to_string()))?,
        None => dpanova::default_n_grid(effect.k(), 1_000_000),
    };
    let mut cfg = PowerConfig::new(effect, n_grid, parse_epsilons(&args.epsilons)?, 0);
    cfg.reps = args.reps;
    cfg.alpha = args.alpha;
    cfg.null_sims = args.null_sims;
    cfg.variance_mode = parse_variance_mode(&args.variance_mode)?;
    cfg.validate()?;
    cfg.seed = seed_or_entropy(args.seed);
    let points = power_curve(&cfg)?;
    write_power_table(open_output(args.out.as_deref())?, &points).map_err(CliError::Output)
}

pub fn cmd_nulldist(args: &NulldistArgs) -> Result<(), CliError> {
    let epsilons = parse_epsilons(&args.epsilons)?;
    if args.sims == 0 {
        return Err(CliError::Usage("--sims must be at least 1".into()));
    }
    let seed = seed_or_entropy(args.seed);
    let samples = export_null_comparison(args.n, args.k, args.sigma2, &epsilons, args.sims, seed)?;
    write_null_table(open_output(args.out.as_deref())?, &samples).map_err(CliError::Output)?;
    if let Some(t) = args.threshold {
        for s in &samples {
            eprintln!(
                "summary epsilon={} threshold={t} fraction_at_or_above={} sims={}",
                s.epsilon,
                s.fraction_at_or_above(t),
                s.draws.len()
            );
        }
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let effect = args.effect.resolve()?;
    if args.n <= effect.k() {
        return Err(dpanova::Error::DegenerateSize { n: args.n, k: effect.k() }.into());
    }
    let seed = seed_or_entropy(args.seed);
    let data = generate_dataset(&effect, args.n, &mut Substreams::new(seed).stream(0))?;
    write_dataset(open_output(args.out.as_deref())?, &data).map_err(CliError::Output)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match &cli.command {
        Command::Analyze(args) => {
            let report = cmd_analyze(args)?;
            let mut out = io::stdout().lock();
            out.write_all(report.to_json().as_bytes()).map_err(CliError::Output)?;
            out.flush().map_err(CliError::Output)
        }
        Command::Power(args) => cmd_power(args),
        Command::Nulldist(args) => cmd_nulldist(args),
        Command::Synth(args) => cmd_synth(args),
    }
}
