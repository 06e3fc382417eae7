//! Command-line front end.
//!
//! Every subcommand accepts the same option set; options a command does not
//! use are ignored. Values come from command-line flags, then from the JSON
//! file given by `--config` (keys are the flag names without dashes, e.g.
//! `"big-m"`), then from built-in defaults.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::{estimate_cdf_many, EstimatorConfig, Fallback};
use crate::experiments::{
    convergence_study, decompound_study, percentile_table, tail_error_table, ConvergenceConfig, DecompoundConfig,
    TailErrorConfig, DEFAULT_DELTA, DEFAULT_LAMBDAS, DEFAULT_LEVELS, DEFAULT_MU, DEFAULT_N,
};
use crate::inversion::QuadratureSpec;
use crate::psi_maps::PsiMap;
use crate::sample_file::{read_samples, write_plain};
use crate::simulation::{sample_compound, simulate_mg1, CountLaw, JobModel, QueueSpec, Seed};
use crate::transforms::SampleSet;

pub const EXIT_IO: i32 = 2;
pub const EXIT_PARAM: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "laplace-plugin", version, about = "Laplace-transform plug-in estimation of distribution functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate F(w) and 1 - F(w) from a sample file.
    Estimate(Opts),
    /// Simulate samples and write them in the sample file format.
    Simulate(Opts),
    /// M/M/1 workload percentiles.
    Table1(Opts),
    /// Relative tail errors of the workload estimators.
    Table2(Opts),
    /// Error of the M/G/1 estimator as n grows.
    Convergence(Opts),
    /// Recover the summand distribution from simulated compound sums.
    Decompound(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapName {
    Mg1,
    Poisson,
    Binomial,
    Negbinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobName {
    Exp,
    Det,
    Gamma,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Opts {
    /// Sample file (one value per line, or CSV with --column).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// CSV column holding the samples.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum)]
    pub map: Option<MapName>,
    /// Observation interval length.
    #[arg(long)]
    pub delta: Option<f64>,
    /// M for the binomial and negative binomial maps.
    #[arg(long = "big-m")]
    pub big_m: Option<u32>,
    /// Evaluation point; repeatable.
    #[arg(long = "w")]
    pub w: Vec<f64>,
    /// Percentile level; repeatable.
    #[arg(long)]
    pub level: Vec<f64>,
    /// Contour abscissa.
    #[arg(long)]
    pub c: Option<f64>,
    /// Sample size; repeatable for the convergence ladder.
    #[arg(long)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Arrival rate, or the count mean for Poisson decompounding.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Service rate of exponential jobs.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Success probability of the binomial or negative binomial count.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub job: Option<JobName>,
    /// Job parameters: rate (exp), size (det), or shape,scale (gamma).
    #[arg(long = "job-params", value_delimiter = ',')]
    pub job_params: Vec<f64>,
    /// Truncation level; defaults to sqrt(n).
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long = "max-step")]
    pub max_step: Option<f64>,
    #[arg(long = "phase-bound")]
    pub phase_bound: Option<f64>,
    /// Estimate returned outside the map's domain.
    #[arg(long)]
    pub fallback: Option<f64>,
    /// Report raw inversion output instead of clipping to [0, 1].
    #[arg(long = "no-clip")]
    #[serde(skip)]
    pub no_clip: bool,
    /// Leave the estimated atom at zero inside the truncated integral.
    #[arg(long = "no-atom-correction")]
    #[serde(skip)]
    pub no_atom_correction: bool,
    /// Samples at or below this value count as zeros.
    #[arg(long = "zero-threshold")]
    pub zero_threshold: Option<f64>,
    /// Simulate the workload path instead of per-interval work.
    #[arg(long)]
    #[serde(skip)]
    pub workload: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub json: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($cli:ident, $file:ident; opt: $($o:ident),*; vec: $($v:ident),*) => {{
        $( if $cli.$o.is_none() { $cli.$o = $file.$o.take(); } )*
        $( if $cli.$v.is_empty() { $cli.$v = std::mem::take(&mut $file.$v); } )*
    }};
}

impl Opts {
    /// Fills unset options from the `--config` file.
    pub fn merged(mut self) -> Result<Opts, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let mut file: Opts =
            serde_json::from_str(&text).map_err(|e| CliError::param(format!("{}: {e}", path.display())))?;
        merge_fields!(self, file;
            opt: samples, column, map, delta, big_m, c, reps, seed, lambda, mu, p, job, t_max, max_step,
                 phase_bound, fallback, zero_threshold;
            vec: w, level, n, job_params);
        Ok(self)
    }

    fn estimator(&self) -> Result<EstimatorConfig, CliError> {
        let defaults = EstimatorConfig::default();
        let quad = QuadratureSpec {
            max_step: self.max_step.unwrap_or(defaults.quad.max_step),
            phase_bound: self.phase_bound.unwrap_or(defaults.quad.phase_bound),
            ..defaults.quad
        };
        let cfg = EstimatorConfig {
            c: self.c.unwrap_or(defaults.c),
            t_max_override: self.t_max,
            quad,
            fallback_value: self.fallback.unwrap_or(defaults.fallback_value),
            clip: !self.no_clip,
            atom_correction: !self.no_atom_correction,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn map(&self, default: MapName) -> Result<PsiMap, CliError> {
        let map = match self.map.unwrap_or(default) {
            MapName::Mg1 => PsiMap::Mg1 {
                delta: self.delta.unwrap_or(DEFAULT_DELTA),
            },
            MapName::Poisson => PsiMap::PoissonDecompound,
            MapName::Binomial => PsiMap::BinomialDecompound { m: self.big_m.unwrap_or(1) },
            MapName::Negbinomial => PsiMap::NegBinomialDecompound { m: self.big_m.unwrap_or(1) },
        };
        map.validate()?;
        Ok(map)
    }

    fn job(&self, default: JobModel) -> Result<JobModel, CliError> {
        let params = &self.job_params;
        let job = match self.job {
            None if params.is_empty() => default,
            None => return Err(CliError::param("--job-params requires --job")),
            Some(JobName::Exp) => match params.as_slice() {
                [rate] => JobModel::Exponential { rate: *rate },
                [] => JobModel::Exponential { rate: self.mu.unwrap_or(DEFAULT_MU) },
                _ => return Err(CliError::param("exp jobs take one parameter (rate)")),
            },
            Some(JobName::Det) => match params.as_slice() {
                [size] => JobModel::Deterministic { size: *size },
                _ => return Err(CliError::param("det jobs take one parameter (size)")),
            },
            Some(JobName::Gamma) => match params.as_slice() {
                [shape, scale] => JobModel::Gamma { shape: *shape, scale: *scale },
                _ => return Err(CliError::param("gamma jobs take two parameters (shape,scale)")),
            },
        };
        job.validate()?;
        Ok(job)
    }

    fn single_n(&self, default: usize) -> Result<usize, CliError> {
        match self.n.as_slice() {
            [] => Ok(default),
            [n] if *n > 0 => Ok(*n),
            _ => Err(CliError::param("expected a single positive --n")),
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn param(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARAM,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) | Error::InvalidSample { .. } | Error::EmptySamples => CliError::io(e.to_string()),
            _ => CliError::param(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub map: String,
    pub w: f64,
    pub cdf: f64,
    pub tail: f64,
    pub raw_value: Option<f64>,
    pub on_domain_event: bool,
    pub fallback: Option<String>,
    pub clipped: bool,
    pub imag_residual: f64,
    pub imag_warning: bool,
    pub t_max_used: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLine {
    pub n: usize,
    pub w: f64,
    pub mean_abs_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailErrorLine {
    pub rho: f64,
    pub lambda: f64,
    pub level: f64,
    pub w: f64,
    pub estimator: String,
    pub mean_rel_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompoundLine {
    pub map: String,
    pub w: f64,
    pub truth: f64,
    pub mean_estimate: f64,
    pub mean_abs_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
}

/// Writes rows as CSV with a header, or as a JSON array.
pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T], json: bool) -> Result<(), CliError> {
    if json {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, rows).map_err(|e| CliError::io(e.to_string()))?;
        writeln!(out).map_err(|e| CliError::io(e.to_string()))?;
        return Ok(());
    }
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row).map_err(|e| CliError::io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::io(e.to_string()))
}

fn cmd_estimate(opts: &Opts) -> Result<Vec<EstimateRow>, CliError> {
    let path = opts
        .samples
        .as_ref()
        .ok_or_else(|| CliError::param("--samples is required"))?;
    let map = opts.map(MapName::Mg1)?;
    let cfg = opts.estimator()?;
    if opts.w.is_empty() {
        return Err(CliError::param("at least one --w is required"));
    }
    if let Some(&w) = opts.w.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(CliError::param(format!("w = {w} must be > 0")));
    }
    let mut samples = read_samples(path, opts.column.as_deref())?;
    if let Some(eps) = opts.zero_threshold {
        samples = SampleSet::with_zero_threshold(samples.into_values(), eps)?;
    }
    Ok(estimate_cdf_many(&samples, &map, &cfg, &opts.w)
        .into_iter()
        .map(|r| EstimateRow {
            map: map.name().to_string(),
            w: r.w,
            cdf: r.value,
            tail: 1.0 - r.value,
            raw_value: r.raw_value,
            on_domain_event: r.on_domain_event,
            fallback: r.fallback.map(|f: Fallback| f.as_str().to_string()),
            clipped: r.clipped,
            imag_residual: r.imag_residual,
            imag_warning: r.imag_warning(),
            t_max_used: r.t_max_used,
            n: r.n,
        })
        .collect())
}

fn cmd_simulate(opts: &Opts) -> Result<SampleSet, CliError> {
    let n = opts.single_n(DEFAULT_N)?;
    let seed = Seed(opts.seed.unwrap_or(1));
    match opts.map.unwrap_or(MapName::Mg1) {
        MapName::Mg1 => {
            let spec = QueueSpec {
                lambda: opts.lambda.unwrap_or(DEFAULT_LAMBDAS[0]),
                jobs: opts.job(JobModel::Exponential { rate: opts.mu.unwrap_or(DEFAULT_MU) })?,
                delta: opts.delta.unwrap_or(DEFAULT_DELTA),
            };
            let trace = simulate_mg1(seed, &spec, n, None)?;
            Ok(if opts.workload { trace.workload } else { trace.interval_work })
        }
        _ => {
            let count = count_law(opts)?;
            let jobs = opts.job(JobModel::Exponential { rate: 1.0 })?;
            Ok(sample_compound(seed, &count, &jobs, n)?)
        }
    }
}

fn count_law(opts: &Opts) -> Result<CountLaw, CliError> {
    let m = opts.big_m.unwrap_or(1);
    let p = opts.p.unwrap_or(0.5);
    let law = match opts.map.unwrap_or(MapName::Poisson) {
        MapName::Poisson | MapName::Mg1 => CountLaw::Poisson {
            mean: opts.lambda.unwrap_or(1.0),
        },
        MapName::Binomial => CountLaw::Binomial { m, p },
        MapName::Negbinomial => CountLaw::NegBinomial { m, p },
    };
    law.validate()?;
    Ok(law)
}

fn lambdas(opts: &Opts) -> Vec<f64> {
    opts.lambda.map_or_else(|| DEFAULT_LAMBDAS.to_vec(), |l| vec![l])
}

fn levels(opts: &Opts) -> Vec<f64> {
    if opts.level.is_empty() {
        DEFAULT_LEVELS.to_vec()
    } else {
        opts.level.clone()
    }
}

fn cmd_table2(opts: &Opts) -> Result<Vec<TailErrorLine>, CliError> {
    let defaults = TailErrorConfig::default();
    let cfg = TailErrorConfig {
        lambdas: lambdas(opts),
        mu: opts.mu.unwrap_or(DEFAULT_MU),
        delta: opts.delta.unwrap_or(DEFAULT_DELTA),
        n: opts.single_n(DEFAULT_N)?,
        reps: opts.reps.unwrap_or(defaults.reps),
        levels: levels(opts),
        seed: opts.seed.unwrap_or(defaults.seed),
        estimator: opts.estimator()?,
        cw_max: defaults.cw_max,
    };
    Ok(tail_error_table(&cfg)?
        .into_iter()
        .map(|r| TailErrorLine {
            rho: r.rho,
            lambda: r.lambda,
            level: r.level,
            w: r.w,
            estimator: r.estimator.as_str().to_string(),
            mean_rel_error: r.mean_rel_error,
            stderr: r.stderr,
            reps: r.reps,
            fallbacks: r.fallbacks,
        })
        .collect())
}

fn cmd_convergence(opts: &Opts) -> Result<Vec<ConvergenceLine>, CliError> {
    let defaults = ConvergenceConfig::default();
    let cfg = ConvergenceConfig {
        lambda: opts.lambda.unwrap_or(defaults.lambda),
        mu: opts.mu.unwrap_or(defaults.mu),
        delta: opts.delta.unwrap_or(defaults.delta),
        ns: if opts.n.is_empty() { defaults.ns } else { opts.n.clone() },
        reps: opts.reps.unwrap_or(defaults.reps),
        level: match opts.level.as_slice() {
            [] => defaults.level,
            [l] => *l,
            _ => return Err(CliError::param("convergence takes a single --level")),
        },
        seed: opts.seed.unwrap_or(defaults.seed),
        estimator: opts.estimator()?,
    };
    let report = convergence_study(&cfg)?;
    Ok(report
        .rows
        .into_iter()
        .map(|r| ConvergenceLine {
            n: r.n,
            w: r.w,
            mean_abs_error: r.mean_abs_error,
            stderr: r.stderr,
            reps: r.reps,
            fallbacks: r.fallbacks,
            slope: report.slope,
        })
        .collect())
}

fn cmd_decompound(opts: &Opts) -> Result<Vec<DecompoundLine>, CliError> {
    let defaults = DecompoundConfig::default();
    if matches!(opts.map, Some(MapName::Mg1)) {
        return Err(CliError::param("decompound takes --map poisson, binomial or negbinomial"));
    }
    let cfg = DecompoundConfig {
        count: count_law(opts)?,
        jobs: opts.job(defaults.jobs)?,
        n: opts.single_n(defaults.n)?,
        reps: opts.reps.unwrap_or(defaults.reps),
        ws: if opts.w.is_empty() { defaults.ws } else { opts.w.clone() },
        seed: opts.seed.unwrap_or(defaults.seed),
        estimator: opts.estimator()?,
    };
    let name = cfg.map().name();
    Ok(decompound_study(&cfg)?
        .into_iter()
        .map(|r| DecompoundLine {
            map: name.to_string(),
            w: r.w,
            truth: r.truth,
            mean_estimate: r.mean_estimate,
            mean_abs_error: r.mean_abs_error,
            stderr: r.stderr,
            reps: r.reps,
            fallbacks: r.fallbacks,
        })
        .collect())
}

fn emit<T: Serialize>(opts: &Opts, rows: &[T], stdout: &mut dyn Write) -> Result<(), CliError> {
    match &opts.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            write_rows(BufWriter::new(file), rows, opts.json)
        }
        None => write_rows(stdout, rows, opts.json),
    }
}

/// Runs one parsed command, writing results to `--out` or `stdout`.
pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Estimate(o) => {
            let o = o.merged()?;
            emit(&o, &cmd_estimate(&o)?, stdout)
        }
        Command::Simulate(o) => {
            let o = o.merged()?;
            let samples = cmd_simulate(&o)?;
            match &o.out {
                Some(path) => crate::sample_file::write_samples(path, &samples).map_err(CliError::from),
                None => write_plain(stdout, &samples).map_err(CliError::from),
            }
        }
        Command::Table1(o) => {
            let o = o.merged()?;
            let rows = percentile_table(&lambdas(&o), o.mu.unwrap_or(DEFAULT_MU), &levels(&o))?;
            emit(&o, &rows, stdout)
        }
        Command::Table2(o) => {
            let o = o.merged()?;
            emit(&o, &cmd_table2(&o)?, stdout)
        }
        Command::Convergence(o) => {
            let o = o.merged()?;
            emit(&o, &cmd_convergence(&o)?, stdout)
        }
        Command::Decompound(o) => {
            let o = o.merged()?;
            emit(&o, &cmd_decompound(&o)?, stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAM } else { 0 };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
