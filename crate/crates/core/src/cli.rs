//! The `ldp-renewal` command line: `rate`, `simulate`, `verify <which>` and
//! `tails`, driven by one TOML run configuration.
//!
//! Every command is a pure function of the configuration and the seed:
//! outputs are written with fixed float formatting, ordered maps and a
//! timestamp taken from the configuration or `SOURCE_DATE_EPOCH`, never from
//! the clock. Exit codes: `0` success / expected verdict, `1` usage or input
//! error, `2` unexpected verdict, `3` numerical non-convergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{fmt_f64, ExtReal};
use crate::mc::{empirical_rate_curve, write_rate_curve, McConfig};
use crate::model::{LawSpec, PairLaw};
use crate::rate::{rate_profile, upsilon, write_rate_grid, RateOptions, RateProfile};
use crate::sets::SetDescriptor;
use crate::verify::{
    check_convex, check_lower_bound, check_prop2, check_supermultiplicativity, check_upper_bound, counterexample_closed,
    counterexample_open, estimate_tail_exponents, BoundReport, TailEstimate, TailSource, Verdict,
};

/// Environment fallback for the worker count.
pub const WORKERS_ENV: &str = "LDP_RENEWAL_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNEXPECTED: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ldp-renewal", version, about = "Large-deviation rates of renewal-reward processes")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the configuration and LDP_RENEWAL_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate J, Υ(1,·), I_i and I_s on a reward grid.
    Rate,
    /// Empirical rate curve of P[W_t/t ∈ A].
    Simulate,
    /// Check one statement against simulation or computation.
    Verify {
        #[arg(value_enum)]
        which: Which,
    },
    /// Estimate the waiting-time tail exponents.
    Tails,
}

/// Verification targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Lower,
    Upper,
    Convex,
    CounterexampleOpen,
    CounterexampleClosed,
    Supermult,
    Prop2,
    Tails,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Lower => "lower",
            Which::Upper => "upper",
            Which::Convex => "convex",
            Which::CounterexampleOpen => "counterexample-open",
            Which::CounterexampleClosed => "counterexample-closed",
            Which::Supermult => "supermult",
            Which::Prop2 => "prop2",
            Which::Tails => "tails",
        }
    }

    /// Verdicts that agree with the theory's prediction.
    fn expected(self) -> &'static [Verdict] {
        match self {
            Which::Lower => &[Verdict::Consistent, Verdict::Inconclusive],
            Which::CounterexampleOpen | Which::CounterexampleClosed => &[Verdict::Violated],
            _ => &[Verdict::Consistent],
        }
    }
}

/// Evenly spaced one-dimensional grid `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.hi >= self.lo && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::Input(format!("invalid grid {self:?}")));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

/// `[rate]` block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateBlock {
    /// One-dimensional reward grid.
    pub grid: Option<GridSpec>,
    /// Explicit reward points (any dimension).
    pub points: Vec<Vec<f64>>,
    /// `[β, w₁, …]` rows evaluated as `Υ(β, w)`.
    pub upsilon_points: Vec<Vec<f64>>,
}

/// `[simulate]` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub set: SetDescriptor,
    pub t_grid: Vec<f64>,
    pub n_runs: u64,
}

fn default_eps() -> f64 {
    0.1
}

fn default_tol() -> f64 {
    1e-3
}

/// `[verify]` block; each target reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub set: Option<SetDescriptor>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub n_runs: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub pairs: Vec<(u64, u64)>,
    pub w_grid: Option<GridSpec>,
    #[serde(default)]
    pub w_points: Vec<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub s_grid: Vec<f64>,
}

/// `[tails]` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsBlock {
    pub s_grid: Vec<f64>,
    /// Allowed distance between estimated and declared exponents in
    /// `verify tails`.
    #[serde(default = "tails_tol")]
    pub tol: f64,
}

fn tails_tol() -> f64 {
    0.15
}

/// A complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// RFC 3339 timestamp recorded in reports.
    pub timestamp: Option<String>,
    pub law: LawSpec,
    #[serde(default)]
    pub tolerances: RateOptions,
    #[serde(default)]
    pub rate: RateBlock,
    pub simulate: Option<SimulateBlock>,
    pub verify: Option<VerifyBlock>,
    pub tails: Option<TailsBlock>,
}

impl RunConfig {
    /// Parses a configuration; relative sample paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        if let (LawSpec::Empirical { path }, Some(base)) = (&mut cfg.law, base) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if !(cfg.tolerances.r_max > 0.0 && cfg.tolerances.golden_tol > 0.0) {
            return Err(Error::Input("tolerances must be positive".into()));
        }
        Ok(cfg)
    }
}

/// Settings after applying flags, configuration and environment.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub timestamp: String,
}

impl Resolved {
    fn mc(&self) -> McConfig {
        McConfig::new(self.seed, self.workers)
    }
}

/// Applies precedence `flag > config > environment > default`.
pub fn resolve(cli: &Cli, config: RunConfig) -> Result<Resolved> {
    let seed = cli.seed.or(config.seed).ok_or_else(|| Error::Input("a seed is required (config `seed` or --seed)".into()))?;
    let env_workers = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    let workers = cli.workers.or(config.workers).or(env_workers).unwrap_or(1).max(1);
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let timestamp = match &config.timestamp {
        Some(ts) => DateTime::parse_from_rfc3339(ts)
            .map_err(|e| Error::Input(format!("timestamp: {e}")))?
            .to_rfc3339_opts(SecondsFormat::Secs, true),
        None => {
            let secs = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse::<i64>().ok()).unwrap_or(0);
            DateTime::from_timestamp(secs, 0)
                .ok_or_else(|| Error::Input("SOURCE_DATE_EPOCH out of range".into()))?
                .to_rfc3339_opts(SecondsFormat::Secs, true)
        }
    };
    Ok(Resolved { config, seed, workers, out, timestamp })
}

/// A report with run metadata, as written to JSON.
#[derive(Debug, Serialize)]
pub struct ReportRecord<'a, T: Serialize> {
    #[serde(flatten)]
    pub report: &'a T,
    pub law: &'a LawSpec,
    pub seed: u64,
    pub timestamp: &'a str,
    pub tool_version: &'static str,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(format!("json: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn record<'a, T: Serialize>(r: &'a Resolved, report: &'a T) -> ReportRecord<'a, T> {
    ReportRecord { report, law: &r.config.law, seed: r.seed, timestamp: &r.timestamp, tool_version: env!("CARGO_PKG_VERSION") }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Summary entry of the `rate` command.
#[derive(Debug, Serialize)]
struct RateSummary<'a> {
    rows: Vec<RateSummaryRow<'a>>,
    upsilon_points: Vec<UpsilonRow>,
    all_converged: bool,
}

#[derive(Debug, Serialize)]
struct RateSummaryRow<'a> {
    #[serde(flatten)]
    profile: &'a RateProfile,
    argmax_dual_upper: Option<&'a crate::cgf::DualPoint>,
    argmax_dual_lower: Option<&'a crate::cgf::DualPoint>,
    argmax_dual_upsilon: Option<&'a crate::cgf::DualPoint>,
}

#[derive(Debug, Serialize)]
struct UpsilonRow {
    beta: f64,
    w: Vec<f64>,
    upsilon: ExtReal,
    converged: bool,
    envelope_estimate: bool,
}

fn law_of(r: &Resolved) -> Result<PairLaw> {
    r.config.law.build()
}

/// `rate`: writes `rate_grid.csv`, `rate_summary.json` and (if requested)
/// `upsilon_points.csv`.
pub fn cmd_rate(r: &Resolved) -> Result<Outcome> {
    let law = law_of(r)?;
    let opts = r.config.tolerances;
    let block = &r.config.rate;
    let mut points: Vec<Vec<f64>> = match &block.grid {
        Some(g) => g.points()?.into_iter().map(|w| vec![w]).collect(),
        None => Vec::new(),
    };
    points.extend(block.points.iter().cloned());
    if points.is_empty() && block.upsilon_points.is_empty() {
        return Err(Error::Input("[rate] needs `grid`, `points` or `upsilon_points`".into()));
    }
    let profiles = points.iter().map(|w| rate_profile(&law, w, &opts)).collect::<Result<Vec<_>>>()?;
    let mut ups = Vec::new();
    for row in &block.upsilon_points {
        let (&beta, w) = row.split_first().ok_or_else(|| Error::Input("empty upsilon point".into()))?;
        let v = upsilon(&law, beta, w, &opts)?;
        ups.push(UpsilonRow {
            beta,
            w: w.to_vec(),
            upsilon: v.value,
            converged: v.converged,
            envelope_estimate: v.envelope_estimate,
        });
    }
    fs::create_dir_all(&r.out)?;
    let mut files = Vec::new();
    if !profiles.is_empty() {
        let path = r.out.join("rate_grid.csv");
        write_rate_grid(fs::File::create(&path)?, &profiles)?;
        files.push(path);
    }
    if !ups.is_empty() {
        let path = r.out.join("upsilon_points.csv");
        let d = ups.iter().map(|u| u.w.len()).max().unwrap_or(1);
        let mut w = csv::Writer::from_writer(fs::File::create(&path)?);
        let mut header = vec!["beta".to_string()];
        header.extend((1..=d).map(|k| format!("w{k}")));
        header.extend(["Upsilon", "converged", "envelope_estimate"].map(String::from));
        w.write_record(&header)?;
        for u in &ups {
            let mut rec = vec![fmt_f64(u.beta)];
            rec.extend(u.w.iter().copied().map(fmt_f64));
            rec.resize(d + 1, String::new());
            rec.extend([u.upsilon.to_string(), u.converged.to_string(), u.envelope_estimate.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }
    let all_converged = profiles.iter().all(|p| p.converged) && ups.iter().all(|u| u.converged || u.envelope_estimate);
    let summary = RateSummary {
        rows: profiles
            .iter()
            .map(|p| RateSummaryRow {
                profile: p,
                argmax_dual_upper: p.details[0].argmax_dual.as_ref(),
                argmax_dual_lower: p.details[1].argmax_dual.as_ref(),
                argmax_dual_upsilon: p.details[2].argmax_dual.as_ref(),
            })
            .collect(),
        upsilon_points: ups,
        all_converged,
    };
    let path = r.out.join("rate_summary.json");
    write_json(&path, &record(r, &summary))?;
    files.push(path);
    let exit_code = if all_converged { EXIT_OK } else { EXIT_NONCONVERGED };
    let message =
        format!("{} grid points, {} upsilon points, converged: {all_converged}", profiles.len(), summary.upsilon_points.len());
    Ok(Outcome { exit_code, files, message })
}

/// `simulate`: writes `rate_curve.csv`.
pub fn cmd_simulate(r: &Resolved) -> Result<Outcome> {
    let law = law_of(r)?;
    let block = r.config.simulate.as_ref().ok_or_else(|| Error::Input("missing [simulate] block".into()))?;
    let curve = empirical_rate_curve(&law, &block.set, &block.t_grid, block.n_runs, &r.mc())?;
    fs::create_dir_all(&r.out)?;
    let path = r.out.join("rate_curve.csv");
    write_rate_curve(fs::File::create(&path)?, &curve.entries)?;
    let message = format!("{} horizons, trend {:?}", curve.entries.len(), curve.trend);
    Ok(Outcome { exit_code: EXIT_OK, files: vec![path], message })
}

fn verify_block(r: &Resolved) -> Result<&VerifyBlock> {
    r.config.verify.as_ref().ok_or_else(|| Error::Input("missing [verify] block".into()))
}

fn need_set(b: &VerifyBlock) -> Result<&SetDescriptor> {
    b.set.as_ref().ok_or_else(|| Error::Input("[verify] needs `set`".into()))
}

/// `verify <which>`: writes `report_<which>.json`.
pub fn cmd_verify(r: &Resolved, which: Which) -> Result<Outcome> {
    if which == Which::Tails {
        return cmd_tails(r, true);
    }
    let law = law_of(r)?;
    let b = verify_block(r)?;
    let opts = r.config.tolerances;
    let mc = r.mc();
    let report: BoundReport = match which {
        Which::Lower => check_lower_bound(&law, need_set(b)?, &b.t_grid, b.n_runs, &mc, &opts)?,
        Which::Upper => check_upper_bound(&law, need_set(b)?, &b.t_grid, b.n_runs, &mc, &opts)?,
        Which::Convex => check_convex(&law, need_set(b)?, &b.t_grid, b.n_runs, &mc, &opts)?,
        Which::CounterexampleOpen => counterexample_open(&law, &b.t_grid, b.n_runs, &mc, &opts)?,
        Which::CounterexampleClosed => counterexample_closed(&law, b.eps, &b.n_grid, b.n_runs, &mc, &opts)?,
        Which::Supermult => check_supermultiplicativity(&law, need_set(b)?, &b.pairs, b.n_runs, &mc, &opts)?,
        Which::Prop2 => {
            let mut grid: Vec<Vec<f64>> = match &b.w_grid {
                Some(g) => g.points()?.into_iter().map(|w| vec![w]).collect(),
                None => Vec::new(),
            };
            grid.extend(b.w_points.iter().cloned());
            check_prop2(&law, &grid, b.tol, &opts)?
        }
        Which::Tails => unreachable!("handled above"),
    };
    fs::create_dir_all(&r.out)?;
    let path = r.out.join(format!("report_{}.json", which.name()));
    write_json(&path, &record(r, &report))?;
    let expected = which.expected().contains(&report.verdict);
    Ok(Outcome {
        exit_code: if expected { EXIT_OK } else { EXIT_UNEXPECTED },
        files: vec![path],
        message: format!("{}: verdict {:?} ({})", which.name(), report.verdict, if expected { "expected" } else { "unexpected" }),
    })
}

#[derive(Debug, Serialize)]
struct TailsReport<'a> {
    #[serde(flatten)]
    estimate: &'a TailEstimate,
    declared_ell_i: ExtReal,
    declared_ell_s: ExtReal,
    matches_declared: bool,
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::PosInf, ExtReal::PosInf) => true,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}

/// `tails` (and `verify tails`): writes `tails.csv` and `tails.json`.
pub fn cmd_tails(r: &Resolved, as_verify: bool) -> Result<Outcome> {
    let law = law_of(r)?;
    let (s_grid, tol) = match (&r.config.tails, &r.config.verify) {
        (Some(t), _) => (t.s_grid.clone(), t.tol),
        (None, Some(v)) if !v.s_grid.is_empty() => (v.s_grid.clone(), tails_tol()),
        _ => return Err(Error::Input("missing [tails] block with `s_grid`".into())),
    };
    let est = estimate_tail_exponents(TailSource::Law(&law), &s_grid)?;
    let tail = law.tail();
    let matches = close(est.ell_i_hat, tail.ell_i, tol) && close(est.ell_s_hat, tail.ell_s, tol);
    fs::create_dir_all(&r.out)?;
    let csv_path = r.out.join("tails.csv");
    let mut f = fs::File::create(&csv_path)?;
    writeln!(f, "s,exponent")?;
    for (s, e) in &est.values {
        writeln!(f, "{},{}", fmt_f64(*s), fmt_f64(*e))?;
    }
    let json_path = r.out.join("tails.json");
    let rep = TailsReport { estimate: &est, declared_ell_i: tail.ell_i, declared_ell_s: tail.ell_s, matches_declared: matches };
    write_json(&json_path, &record(r, &rep))?;
    let exit_code = if as_verify && !matches { EXIT_UNEXPECTED } else { EXIT_OK };
    Ok(Outcome {
        exit_code,
        files: vec![csv_path, json_path],
        message: format!("ell_i ≈ {}, ell_s ≈ {} (declared {}, {})", est.ell_i_hat, est.ell_s_hat, tail.ell_i, tail.ell_s),
    })
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Input("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let config = RunConfig::from_toml(&text, path.parent())?;
    let resolved = resolve(cli, config)?;
    match &cli.command {
        Command::Rate => cmd_rate(&resolved),
        Command::Simulate => cmd_simulate(&resolved),
        Command::Verify { which } => cmd_verify(&resolved, *which),
        Command::Tails => cmd_tails(&resolved, false),
    }
}

/// Entry point: parses `args`, runs, reports, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!("{}", out.message);
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
