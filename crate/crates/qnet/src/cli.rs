//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 for
//! runtime failures of the simulation or the oracles.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qnet_core::conditions::{check_unbiasedness_conditions, ConditionStatus};
use qnet_core::dynamics::simulate_network;
use qnet_core::estimators::{
    alg51_estimate, corrected_estimate, finite_difference_estimate, naive_ipa_estimate, value_estimate,
};
use qnet_core::inputs::mix_seed;
use qnet_core::oracle::{mixture_report, toy_exact, toy_network};
use qnet_core::{CriterionKind, EstimateSummary, Error, PsiMode, RandomStream, ValidatedNetwork};

use crate::records::{to_csv, to_json, trajectory_rows, CsvRecord, EstimateRecord, OracleRecord};
use crate::spec_file::{load_spec, LoadedSpec};

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Gradient estimation for closed queueing networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one replication and dump its trajectory.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of a criterion or its θ-derivative.
    Estimate(EstimateArgs),
    /// Exhaustive routing-table sum with lattice quadrature.
    Oracle(OracleArgs),
    /// Closed-form values of the two-branch toy model.
    Toy(ToyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    NaiveIpa,
    LrCorrected,
    Alg51,
    Fd,
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PsiModeArg {
    FixedHorizon,
    Online,
}

impl From<PsiModeArg> for PsiMode {
    fn from(m: PsiModeArg) -> Self {
        match m {
            PsiModeArg::FixedHorizon => PsiMode::FixedHorizon,
            PsiModeArg::Online => PsiMode::Online,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// `LO:HI:N`, `N` evenly spaced points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let span = self.hi - self.lo;
        (0..self.steps).map(|i| self.lo + span * i as f64 / (self.steps - 1) as f64).collect()
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected LO:HI:N".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("LO: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("HI: {e}"))?;
    let steps: usize = n.parse().map_err(|e| format!("N: {e}"))?;
    if steps == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err("need finite LO <= HI and N >= 1".into());
    }
    Ok(Sweep { lo, hi, steps })
}

fn parse_criterion(s: &str) -> Result<CriterionKind, String> {
    s.parse().map_err(|_| "expected one of S, W, T, U, J, Q, D".to_string())
}

#[derive(Debug, Args)]
pub struct Common {
    /// Network spec JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = EstimatorArg::LrCorrected)]
    pub estimator: EstimatorArg,
    /// Defaults to the spec file's criterion, else U.
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: Option<CriterionKind>,
    #[arg(long, conflicts_with = "sweep")]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    /// Finite differences on independent streams instead of common ones.
    #[arg(long)]
    pub no_crn: bool,
    #[arg(long, value_enum, default_value_t = PsiModeArg::FixedHorizon)]
    pub psi_mode: PsiModeArg,
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: Option<CriterionKind>,
    #[arg(long, conflicts_with = "sweep")]
    pub theta: Option<f64>,
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<Sweep>,
    /// Lattice points per uniform coordinate.
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, conflicts_with = "sweep")]
    pub theta: Option<f64>,
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<Sweep>,
    /// Also run the mixture oracle on the toy network at this lattice size.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Bad arguments that clap cannot see, and unusable spec files.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn is_input_error(e: &Error) -> bool {
    !matches!(
        e,
        Error::SupportTooLarge { .. }
            | Error::MissingArrival { .. }
            | Error::Starvation { .. }
            | Error::HorizonExceeded { .. }
            | Error::InsufficientCompletions { .. }
            | Error::ZeroDeparture { .. }
            | Error::TooManyCoordinates { .. }
            | Error::CoordinateSetUnstable { .. }
    )
}

/// 1 for usage and validation problems, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if is_input_error(e) { 1 } else { 2 };
        }
    }
    2
}

/// Any failure to read, parse or validate the spec is an input error.
fn load(path: &Path) -> anyhow::Result<LoadedSpec> {
    load_spec(path).map_err(|e| usage(format!("{e:#}")))
}

fn thetas(theta: Option<f64>, sweep: Option<Sweep>) -> anyhow::Result<Vec<f64>> {
    match (theta, sweep) {
        (Some(t), None) => Ok(vec![t]),
        (None, Some(s)) => Ok(s.points()),
        _ => Err(usage("give --theta or --sweep")),
    }
}

fn check_thetas(net: &ValidatedNetwork, points: &[f64]) -> anyhow::Result<()> {
    for &t in points {
        net.domain().check(t)?;
    }
    Ok(())
}

/// Seed of point `i`; a single θ keeps the given seed.
fn point_seed(seed: u64, i: usize, n: usize) -> u64 {
    if n == 1 {
        seed
    } else {
        mix_seed(seed, i as u64)
    }
}

fn emit<R: CsvRecord + serde::Serialize>(records: &[R], format: OutputFormat, out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::Json => to_json(records),
    };
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => stdout.write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn criterion(flag: Option<CriterionKind>, spec: &LoadedSpec) -> CriterionKind {
    flag.or(spec.default_criterion).unwrap_or(CriterionKind::Utilization)
}

fn warn_conditions(net: &ValidatedNetwork, kind: CriterionKind, stderr: &mut dyn Write) {
    let report = check_unbiasedness_conditions(net, kind);
    for node in report.nodes.iter().filter(|n| n.status != ConditionStatus::Satisfied) {
        let _ = writeln!(
            stderr,
            "note: node {} ({}): {}; sufficient conditions for criterion {kind} are {}",
            node.node + 1,
            node.family,
            node.reason,
            node.status
        );
    }
}

fn estimate_one(a: &EstimateArgs, net: &ValidatedNetwork, kind: CriterionKind, theta: f64, seed: u64) -> anyhow::Result<(EstimateSummary, &'static str)> {
    Ok(match a.estimator {
        EstimatorArg::NaiveIpa => (naive_ipa_estimate(net, kind, theta, a.reps, seed)?, "none"),
        EstimatorArg::LrCorrected => {
            let mode = PsiMode::from(a.psi_mode);
            (corrected_estimate(net, kind, theta, a.reps, seed, mode)?, mode.name())
        }
        EstimatorArg::Alg51 => (alg51_estimate(net, theta, a.reps, seed)?, PsiMode::Online.name()),
        EstimatorArg::Fd => (finite_difference_estimate(net, kind, theta, a.fd_step, a.reps, seed, !a.no_crn)?, "none"),
        EstimatorArg::Value => (value_estimate(net, kind, theta, a.reps, seed)?, "none"),
    })
}

fn estimate(a: &EstimateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<()> {
    let spec = load(&a.common.config)?;
    let net = &spec.network;
    let kind = criterion(a.criterion, &spec);
    if a.estimator == EstimatorArg::Alg51 && kind != CriterionKind::Utilization {
        return Err(usage(format!("alg51 estimates the utilization gradient only, not criterion {kind}")));
    }
    let points = thetas(a.theta, a.sweep)?;
    check_thetas(net, &points)?;
    if a.estimator != EstimatorArg::Fd && a.estimator != EstimatorArg::Value {
        warn_conditions(net, kind, stderr);
    }
    let mut records = Vec::with_capacity(points.len());
    for (i, &theta) in points.iter().enumerate() {
        let seed = point_seed(a.common.seed, i, points.len());
        let (s, psi) = estimate_one(a, net, kind, theta, seed)?;
        records.push(EstimateRecord {
            estimator: s.estimator.name().into(),
            criterion: kind.symbol().into(),
            theta,
            reps: s.reps,
            mean: s.mean,
            variance: s.sample_variance,
            ci95: s.ci95_halfwidth,
            psi_mode: psi.into(),
            ties_observed: s.ties_observed,
            seed,
            spec_hash: spec.hash.clone(),
        });
    }
    emit(&records, a.common.output, a.common.out.as_deref(), stdout)
}

fn oracle(a: &OracleArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let spec = load(&a.common.config)?;
    let net = &spec.network;
    let kind = criterion(a.criterion, &spec);
    let points = thetas(a.theta, a.sweep)?;
    check_thetas(net, &points)?;
    if a.grid == 0 {
        return Err(usage("--grid must be positive"));
    }
    let mut records = Vec::with_capacity(points.len());
    for &theta in &points {
        let r = mixture_report(net, kind, theta, a.grid)?;
        records.push(OracleRecord {
            source: "mixture".into(),
            criterion: kind.symbol().into(),
            theta,
            expected_f: r.expected_f,
            d_expected_f: r.d_expected_f,
            expected_ipa: r.expected_ipa,
            expected_g: r.expected_g,
            residual: r.residual(),
            grid_m: a.grid,
            spec_hash: spec.hash.clone(),
        });
    }
    emit(&records, a.common.output, a.common.out.as_deref(), stdout)
}

fn toy(a: &ToyArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let points = thetas(a.theta, a.sweep)?;
    let net = toy_network();
    let kind = CriterionKind::CompletionEpoch;
    let mut records = Vec::new();
    for &theta in &points {
        let t = toy_exact(theta)?;
        records.push(OracleRecord {
            source: "closed-form".into(),
            criterion: kind.symbol().into(),
            theta,
            expected_f: t.expected_f,
            d_expected_f: t.d_expected_f,
            expected_ipa: t.expected_ipa,
            expected_g: t.expected_g,
            residual: (t.d_expected_f - t.expected_g).abs(),
            grid_m: 0,
            spec_hash: String::new(),
        });
        if let Some(grid) = a.grid {
            if grid == 0 {
                return Err(usage("--grid must be positive"));
            }
            let r = mixture_report(&net, kind, theta, grid)?;
            records.push(OracleRecord {
                source: "mixture".into(),
                criterion: kind.symbol().into(),
                theta,
                expected_f: r.expected_f,
                d_expected_f: r.d_expected_f,
                expected_ipa: r.expected_ipa,
                expected_g: r.expected_g,
                residual: r.residual(),
                grid_m: grid,
                spec_hash: String::new(),
            });
        }
    }
    emit(&records, a.output, a.out.as_deref(), stdout)
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let spec = load(&a.common.config)?;
    let (traj, _) = simulate_network(&spec.network, a.theta, &RandomStream::new(a.common.seed, a.replication))?;
    emit(&trajectory_rows(&traj), a.common.output, a.common.out.as_deref(), stdout)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Estimate(a) => estimate(a, stdout, stderr),
        Command::Oracle(a) => oracle(a, stdout),
        Command::Toy(a) => toy(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                1
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err:#}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points() {
        let s = parse_sweep("0.1:0.9:9").unwrap();
        let p = s.points();
        assert_eq!(p.len(), 9);
        assert_eq!((p[0], p[8]), (0.1, 0.9));
        assert!((p[4] - 0.5).abs() < 1e-15);
        assert_eq!(parse_sweep("0.3:0.3:1").unwrap().points(), vec![0.3]);
        assert!(parse_sweep("0.9:0.1:3").is_err());
        assert!(parse_sweep("0.1:0.9").is_err());
        assert!(parse_sweep("0.1:0.9:0").is_err());
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&anyhow!(Error::EmptyPopulation)), 1);
        assert_eq!(exit_code(&anyhow!(Error::Starvation { node: 1, completions: 0 }).context("running")), 2);
        assert_eq!(exit_code(&usage("x")), 1);
        assert_eq!(exit_code(&anyhow!("something else")), 2);
    }

    #[test]
    fn bad_flag_is_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["qnet", "estimate", "--bogus"], &mut o, &mut e), 1);
        assert_eq!(run(["qnet", "--help"], &mut o, &mut e), 0);
    }
}
