//! Command-line front end: JSON problem specs in, JSON reports and CSV
//! sweeps out.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 solver failure,
//! 4 oracle failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::comparator::{compare_with, Comparison, DEFAULT_TILT_TOL};
use crate::error::Error;
use crate::model::{bayes_posterior_mean, CountData, OutcomeModel, PriorSpec, Problem};
use crate::normalization::log_zeta;
use crate::oracle::{montecarlo_moments, quadrature_zeta, OracleEstimate, DEFAULT_QUAD_TOL};
use crate::solver::{
    full_update_with, sweep_with, SolverOptions, SweepPoint, DEFAULT_BETA_CAP, DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

/// Serialized problem definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub labels: Vec<f64>,
    pub counts: Vec<u64>,
    pub moment_target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_counts: Option<Vec<f64>>,
}

impl ProblemSpecFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            file: "<input>".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Parse {
                line,
                column,
                message,
                ..
            } => CliError::Parse {
                file: path.display().to_string(),
                line,
                column,
                message,
            },
            other => other,
        })
    }

    pub fn to_problem(&self) -> Result<Problem, Error> {
        let model = OutcomeModel::new(self.labels.clone())?;
        let prior = match &self.pseudo_counts {
            Some(a) => PriorSpec::new(a.clone())?,
            None => PriorSpec::flat(model.k()),
        };
        Problem::new(
            model,
            CountData::new(self.counts.clone()),
            prior,
            self.moment_target,
        )
    }
}

impl From<&Problem> for ProblemSpecFile {
    fn from(p: &Problem) -> Self {
        ProblemSpecFile {
            labels: p.labels().to_vec(),
            counts: p.data().counts().to_vec(),
            moment_target: p.moment_target(),
            pseudo_counts: if p.prior().is_flat() {
                None
            } else {
                Some(p.prior().pseudo_counts().to_vec())
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "FileNotFound",
            CliError::Parse { .. } => "ParseError",
            CliError::Output { .. } => "OutputError",
            CliError::Model(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Output { .. } => EXIT_INPUT,
            CliError::Model(e) => match e {
                Error::Diverged { .. } | Error::Stalled { .. } | Error::NoConvergence { .. } => {
                    EXIT_SOLVER
                }
                Error::DimensionTooHigh(_) | Error::ToleranceNotMet { .. } => EXIT_ORACLE,
                _ => EXIT_INPUT,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub beta_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReport {
    pub spec: ProblemSpecFile,
    pub beta: f64,
    /// Normalization of `prod theta_i^(m_i + alpha_i - 1) e^(beta f_i theta_i)`.
    pub zeta: f64,
    pub log_zeta: f64,
    /// The same normalization times the multinomial coefficient `n! / prod m_i!`.
    pub zeta_with_multinomial: f64,
    pub log_zeta_with_multinomial: f64,
    pub means: Vec<f64>,
    pub variance_of_f: f64,
    pub residual: f64,
    pub bayes_means: Vec<f64>,
    pub solver: SolverDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub spec: ProblemSpecFile,
    #[serde(flatten)]
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub spec: ProblemSpecFile,
    pub beta: f64,
    pub oracle: OracleEstimate,
    pub series_log_zeta: f64,
    /// `oracle.log_value - series_log_zeta`.
    pub log_discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_std_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_means: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_sample_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_ess: Option<bool>,
}

fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    libm::lgamma(n as f64 + 1.0)
        - counts
            .iter()
            .map(|&m| libm::lgamma(m as f64 + 1.0))
            .sum::<f64>()
}

pub fn run_update(spec: &ProblemSpecFile, opts: &SolverOptions) -> Result<UpdateReport, CliError> {
    let p = spec.to_problem()?;
    let post = full_update_with(&p, opts)?;
    let with_multinomial = post.log_zeta + ln_multinomial(p.data().counts());
    Ok(UpdateReport {
        spec: spec.clone(),
        beta: post.beta,
        zeta: post.log_zeta.exp(),
        log_zeta: post.log_zeta,
        zeta_with_multinomial: with_multinomial.exp(),
        log_zeta_with_multinomial: with_multinomial,
        means: post.means,
        variance_of_f: post.variance_of_f,
        residual: post.residual,
        bayes_means: bayes_posterior_mean(&p),
        solver: SolverDiagnostics {
            iterations: post.iterations,
            bracket: [post.bracket.0, post.bracket.1],
            tol: opts.tol,
            beta_cap: opts.beta_cap,
        },
    })
}

pub fn run_sweep(
    spec: &ProblemSpecFile,
    f_min: f64,
    f_max: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Vec<SweepPoint>, CliError> {
    let p = spec.to_problem()?;
    Ok(sweep_with(&p, f_min, f_max, steps, opts)?)
}

pub fn run_compare(
    spec: &ProblemSpecFile,
    opts: &SolverOptions,
) -> Result<CompareReport, CliError> {
    let p = spec.to_problem()?;
    Ok(CompareReport {
        spec: spec.clone(),
        comparison: compare_with(&p, opts, DEFAULT_TILT_TOL)?,
    })
}

pub fn run_oracle(
    spec: &ProblemSpecFile,
    method: MethodArg,
    beta: Option<f64>,
    samples: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<OracleReport, CliError> {
    let p = spec.to_problem()?;
    let beta = match beta {
        Some(b) => b,
        None => full_update_with(&p, opts)?.beta,
    };
    let series = log_zeta(&p, beta)?.log_value;
    let mut report = match method {
        MethodArg::Quadrature => {
            let est = quadrature_zeta(&p, beta, DEFAULT_QUAD_TOL)?;
            OracleReport {
                spec: spec.clone(),
                beta,
                log_discrepancy: est.log_value - series,
                oracle: est,
                series_log_zeta: series,
                means: None,
                mean_std_errors: None,
                series_means: None,
                effective_sample_size: None,
                low_ess: None,
            }
        }
        MethodArg::Montecarlo => {
            let mc = montecarlo_moments(&p, beta, samples, seed)?;
            OracleReport {
                spec: spec.clone(),
                beta,
                log_discrepancy: mc.estimate.log_value - series,
                oracle: mc.estimate,
                series_log_zeta: series,
                means: Some(mc.means),
                mean_std_errors: Some(mc.mean_std_errors),
                series_means: None,
                effective_sample_size: Some(mc.effective_sample_size),
                low_ess: Some(mc.low_ess),
            }
        }
    };
    if report.means.is_some() {
        report.series_means = Some(crate::normalization::posterior_mean(&p, beta)?);
    }
    Ok(report)
}

/// Plain decimal text with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).clamp(0, 340) as usize;
    format!("{x:.decimals$}")
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("F,beta,converged\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sig17(p.target),
            format_sig17(p.beta),
            p.converged
        ));
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Output {
                    path: PathBuf::from("<stdout>"),
                    message: e.to_string(),
                })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Quadrature,
    Montecarlo,
}

#[derive(Debug, Parser)]
#[command(
    name = "meupdate",
    version,
    about = "Update a multinomial model with counts and a moment constraint by maximum relative entropy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct SolverArgs {
    /// Tolerance on |E[f] - F| at the solved multiplier
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Largest |beta| tried before reporting divergence
    #[arg(long = "beta-cap", default_value_t = DEFAULT_BETA_CAP)]
    pub beta_cap: f64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            beta_cap: self.beta_cap,
            initial_guess: 0.0,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the update and write a JSON report
    Update {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve the multiplier over a grid of moment targets, CSV output
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        min: f64,
        #[arg(long, allow_negative_numbers = true)]
        max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare with the exponentially tilted empirical frequencies
    Compare {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check the series normalization against quadrature or Monte Carlo
    Oracle {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Multiplier to evaluate at; defaults to the solved value
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Update { spec, out, solver } => {
            let spec = ProblemSpecFile::load(spec)?;
            let report = run_update(&spec, &solver.options())?;
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Sweep {
            spec,
            min,
            max,
            steps,
            out,
            solver,
        } => {
            let spec = ProblemSpecFile::load(spec)?;
            let points = run_sweep(&spec, *min, *max, *steps, &solver.options())?;
            emit(Some(out), &sweep_csv(&points))
        }
        Command::Compare { spec, out, solver } => {
            let spec = ProblemSpecFile::load(spec)?;
            let report = run_compare(&spec, &solver.options())?;
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Oracle {
            spec,
            method,
            beta,
            samples,
            seed,
            out,
            solver,
        } => {
            let spec = ProblemSpecFile::load(spec)?;
            let report = run_oracle(&spec, *method, *beta, *samples, *seed, &solver.options())?;
            emit(out.as_deref(), &to_json(&report))
        }
    }
}

/// Parse arguments, run, print any error as `error[Code]: message` and
/// return the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str =
        r#"{"labels":[1,2,3],"counts":[11,2,7],"moment_target":2.3,"pseudo_counts":[1,1,1]}"#;

    #[test]
    fn parses_spec() {
        let spec = ProblemSpecFile::from_json(WORKED).unwrap();
        assert_eq!(spec.labels, vec![1.0, 2.0, 3.0]);
        assert_eq!(spec.pseudo_counts, Some(vec![1.0, 1.0, 1.0]));
        let p = spec.to_problem().unwrap();
        assert_eq!(p.data().n(), 20);
        let bare =
            ProblemSpecFile::from_json(r#"{"labels":[1,2],"counts":[1,1],"moment_target":1.5}"#)
                .unwrap();
        assert!(bare.to_problem().unwrap().prior().is_flat());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ProblemSpecFile::from_json("{\n  \"labels\": [1,2],\n  \"counts\": [1, -1]\n}")
            .unwrap_err();
        match &err {
            CliError::Parse { line, .. } => assert_eq!(*line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.exit_code(), EXIT_INPUT);
        let err = ProblemSpecFile::from_json(
            r#"{"labels":[1,2],"counts":[1,1],"moment_target":1.5,"extra":1}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "ParseError");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::from(Error::Diverged {
                cap: 1.0,
                last: 1.0
            })
            .exit_code(),
            EXIT_SOLVER
        );
        assert_eq!(
            CliError::from(Error::DimensionTooHigh(5)).exit_code(),
            EXIT_ORACLE
        );
        assert_eq!(CliError::from(Error::NoData).exit_code(), EXIT_INPUT);
        assert_eq!(
            CliError::from(Error::MomentOutOfRange {
                target: 3.0,
                min: 1.0,
                max: 3.0
            })
            .code(),
            "MomentOutOfRange"
        );
    }

    #[test]
    fn sig17_formatting() {
        assert_eq!(format_sig17(0.0), "0");
        assert_eq!(format_sig17(2.3), "2.2999999999999998");
        assert_eq!(format_sig17(0.5), "0.50000000000000000");
        let b = 14.116636470852957;
        assert_eq!(format_sig17(b).parse::<f64>().unwrap(), b);
        assert_eq!(format_sig17(-1234.5), "-1234.5000000000000");
        assert_eq!(format_sig17(f64::NAN), "NaN");
        let tiny = format_sig17(1.5e-12);
        assert!(!tiny.contains('e'));
        assert_eq!(tiny.parse::<f64>().unwrap(), 1.5e-12);
    }

    #[test]
    fn update_report_reproduces_worked_example() {
        let spec = ProblemSpecFile::from_json(WORKED).unwrap();
        let report = run_update(&spec, &SolverOptions::default()).unwrap();
        assert!((report.beta - 14.1166).abs() < 5e-4);
        assert!((report.zeta - 1874.1247).abs() / 1874.1247 < 2e-3);
        assert!(report.zeta_with_multinomial > 1e10);
        assert_eq!(report.bayes_means.len(), 3);
    }
}
