//! Monte Carlo experiments on simulated queues and compound sums: percentile
//! tables, relative tail errors of the three workload estimators, the
//! convergence ladder, and decompounding accuracy.
//!
//! Replication `r` of an experiment always uses `seed.replication(key)` for a
//! key derived from `r` and the experiment cell, so results do not depend on
//! thread scheduling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    censored_increments, empirical_workload_estimator, estimate_cdf_many, EstimateResult, EstimatorConfig,
};
use crate::psi_maps::PsiMap;
use crate::simulation::{
    mm1_percentile, mm1_stationary_cdf, sample_compound, sample_compound_poisson, simulate_mg1, CountLaw, JobModel,
    QueueSpec, Seed,
};
use crate::transforms::SampleSet;

/// Arrival rates used for the load levels 0.50, 0.90 and 0.95 at `mu = 20`.
pub const DEFAULT_LAMBDAS: [f64; 3] = [10.0, 18.0, 19.0];
pub const DEFAULT_MU: f64 = 20.0;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_LEVELS: [f64; 3] = [0.9, 0.99, 0.999];
/// Upper bound on `c * w` applied by the workload experiments.
pub const DEFAULT_CW_MAX: f64 = 3.0;

pub(crate) fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Estimates at several `w`, lowering `c` where `c * w` would exceed
/// `cw_max`. Points sharing a contour share one transform evaluation.
pub fn estimate_with_cw_cap(
    samples: &SampleSet,
    map: &PsiMap,
    config: &EstimatorConfig,
    ws: &[f64],
    cw_max: Option<f64>,
) -> Vec<EstimateResult> {
    let c_for = |w: f64| match cw_max {
        Some(cap) => config.c.min(cap / w),
        None => config.c,
    };
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &w) in ws.iter().enumerate() {
        groups.entry(c_for(w).to_bits()).or_default().push(i);
    }
    let mut out: Vec<Option<EstimateResult>> = vec![None; ws.len()];
    for (c_bits, idx) in groups {
        let cfg = EstimatorConfig {
            c: f64::from_bits(c_bits),
            ..*config
        };
        let group_ws: Vec<f64> = idx.iter().map(|&i| ws[i]).collect();
        for (i, r) in idx.into_iter().zip(estimate_cdf_many(samples, map, &cfg, &group_ws)) {
            out[i] = Some(r);
        }
    }
    out.into_iter().map(|r| r.expect("every w estimated")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    pub level: f64,
    pub w: f64,
}

/// M/M/1 workload percentiles for each arrival rate and level.
pub fn percentile_table(lambdas: &[f64], mu: f64, levels: &[f64]) -> Result<Vec<PercentileRow>> {
    let mut rows = Vec::with_capacity(lambdas.len() * levels.len());
    for &lambda in lambdas {
        for &level in levels {
            rows.push(PercentileRow {
                rho: lambda / mu,
                lambda,
                mu,
                level,
                w: mm1_percentile(lambda, mu, level)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadEstimator {
    /// Plug-in estimator on the work arriving per interval.
    Laplace,
    /// Fraction of sampled workloads above `w`.
    Empirical,
    /// Plug-in estimator on increments reconstructed from workload samples.
    LaplaceCensored,
}

impl WorkloadEstimator {
    pub const ALL: [WorkloadEstimator; 3] = [
        WorkloadEstimator::Laplace,
        WorkloadEstimator::Empirical,
        WorkloadEstimator::LaplaceCensored,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            WorkloadEstimator::Laplace => "laplace",
            WorkloadEstimator::Empirical => "empirical",
            WorkloadEstimator::LaplaceCensored => "laplace_censored",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailErrorConfig {
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub delta: f64,
    pub n: usize,
    pub reps: usize,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub cw_max: Option<f64>,
}

impl Default for TailErrorConfig {
    fn default() -> Self {
        Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            mu: DEFAULT_MU,
            delta: DEFAULT_DELTA,
            n: DEFAULT_N,
            reps: 100,
            levels: DEFAULT_LEVELS.to_vec(),
            seed: 2015,
            estimator: EstimatorConfig::default(),
            cw_max: Some(DEFAULT_CW_MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailErrorRow {
    pub rho: f64,
    pub lambda: f64,
    pub level: f64,
    pub w: f64,
    pub estimator: WorkloadEstimator,
    pub mean_rel_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
}

/// Relative tail errors `|(1 - F̂(w)) - P(Y > w)| / P(Y > w)` of the three
/// workload estimators on simulated M/M/1 queues.
pub fn tail_error_table(cfg: &TailErrorConfig) -> Result<Vec<TailErrorRow>> {
    cfg.estimator.validate()?;
    if cfg.reps == 0 || cfg.n < 2 {
        return Err(Error::param("need reps >= 1 and n >= 2"));
    }
    let map = PsiMap::Mg1 { delta: cfg.delta };
    map.validate()?;
    let mut rows = Vec::new();
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let spec = QueueSpec {
            lambda,
            jobs: JobModel::Exponential { rate: cfg.mu },
            delta: cfg.delta,
        };
        spec.validate()?;
        let ws: Vec<f64> = cfg
            .levels
            .iter()
            .map(|&p| mm1_percentile(lambda, cfg.mu, p))
            .collect::<Result<_>>()?;
        let truth: Vec<f64> = ws
            .iter()
            .map(|&w| mm1_stationary_cdf(lambda, cfg.mu, w).map(|f| 1.0 - f))
            .collect::<Result<_>>()?;

        // per replication: (relative errors, fallback flags) indexed [estimator][w]
        let per_rep = par_map(cfg.reps, |r| -> Result<Vec<Vec<(f64, bool)>>> {
            let seed = Seed(cfg.seed).replication((li as u64) << 32 | r as u64);
            let trace = simulate_mg1(seed, &spec, cfg.n, None)?;
            let rel = |tail: f64, k: usize| (tail - truth[k]).abs() / truth[k];

            let laplace = estimate_with_cw_cap(&trace.interval_work, &map, &cfg.estimator, &ws, cfg.cw_max);
            let empirical: Vec<f64> = ws
                .iter()
                .map(|&w| empirical_workload_estimator(&trace.workload, w))
                .collect();
            let censored = match censored_increments(&trace.workload, cfg.delta) {
                Ok(q) => estimate_with_cw_cap(&q, &map, &cfg.estimator, &ws, cfg.cw_max)
                    .into_iter()
                    .map(|e| (e.value, e.fallback.is_some()))
                    .collect(),
                Err(Error::EmptyResult) => vec![(cfg.estimator.fallback_value, true); ws.len()],
                Err(e) => return Err(e),
            };
            Ok(vec![
                laplace
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (rel(1.0 - e.value, k), e.fallback.is_some()))
                    .collect(),
                empirical.iter().enumerate().map(|(k, &t)| (rel(t, k), false)).collect(),
                censored
                    .iter()
                    .enumerate()
                    .map(|(k, &(v, fb))| (rel(1.0 - v, k), fb))
                    .collect(),
            ])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        for (ei, estimator) in WorkloadEstimator::ALL.into_iter().enumerate() {
            for (k, (&level, &w)) in cfg.levels.iter().zip(&ws).enumerate() {
                let errs: Vec<f64> = per_rep.iter().map(|rep| rep[ei][k].0).collect();
                let fallbacks = per_rep.iter().filter(|rep| rep[ei][k].1).count();
                let (mean, se) = mean_and_stderr(&errs);
                rows.push(TailErrorRow {
                    rho: lambda / cfg.mu,
                    lambda,
                    level,
                    w,
                    estimator,
                    mean_rel_error: mean,
                    stderr: se,
                    reps: cfg.reps,
                    fallbacks,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    pub estimator: EstimatorConfig,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            mu: DEFAULT_MU,
            delta: DEFAULT_DELTA,
            ns: vec![100, 1000, 10_000],
            reps: 200,
            level: 0.9,
            seed: 2015,
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub w: f64,
    pub mean_abs_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `ln(error)` against `ln(n)`; absent for a single `n`.
    pub slope: Option<f64>,
}

/// Mean absolute error of the M/G/1 plug-in estimator of `F^Y(w_level)` on
/// a ladder of sample sizes.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    cfg.estimator.validate()?;
    if cfg.reps == 0 || cfg.ns.is_empty() || cfg.ns.contains(&0) {
        return Err(Error::param("need reps >= 1 and a nonempty ladder of positive n"));
    }
    let map = PsiMap::Mg1 { delta: cfg.delta };
    map.validate()?;
    let w = mm1_percentile(cfg.lambda, cfg.mu, cfg.level)?;
    let truth = mm1_stationary_cdf(cfg.lambda, cfg.mu, w)?;
    let jobs = JobModel::Exponential { rate: cfg.mu };
    let intensity = cfg.lambda * cfg.delta;

    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let results = par_map(cfg.reps, |r| -> Result<(f64, bool)> {
            let seed = Seed(cfg.seed).replication((n as u64) << 32 | r as u64);
            let x = sample_compound_poisson(seed, intensity, &jobs, n)?;
            let e = estimate_cdf_many(&x, &map, &cfg.estimator, &[w]).remove(0);
            Ok(((e.value - truth).abs(), e.fallback.is_some()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let errs: Vec<f64> = results.iter().map(|r| r.0).collect();
        let (mean, se) = mean_and_stderr(&errs);
        rows.push(ConvergenceRow {
            n,
            w,
            mean_abs_error: mean,
            stderr: se,
            reps: cfg.reps,
            fallbacks: results.iter().filter(|r| r.1).count(),
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.mean_abs_error).collect();
    let slope = log_log_slope(&ns, &errs);
    Ok(ConvergenceReport { rows, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompoundConfig {
    pub count: CountLaw,
    pub jobs: JobModel,
    pub n: usize,
    pub reps: usize,
    pub ws: Vec<f64>,
    pub seed: u64,
    pub estimator: EstimatorConfig,
}

impl Default for DecompoundConfig {
    fn default() -> Self {
        Self {
            count: CountLaw::Poisson { mean: 1.0 },
            jobs: JobModel::Exponential { rate: 1.0 },
            n: DEFAULT_N,
            reps: 50,
            ws: vec![std::f64::consts::LN_2],
            seed: 2015,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl DecompoundConfig {
    pub fn map(&self) -> PsiMap {
        match self.count {
            CountLaw::Poisson { .. } => PsiMap::PoissonDecompound,
            CountLaw::Binomial { m, .. } => PsiMap::BinomialDecompound { m },
            CountLaw::NegBinomial { m, .. } => PsiMap::NegBinomialDecompound { m },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompoundRow {
    pub w: f64,
    pub truth: f64,
    pub mean_estimate: f64,
    pub mean_abs_error: f64,
    pub stderr: f64,
    pub reps: usize,
    pub fallbacks: usize,
}

/// Recovers the summand distribution function from simulated compound sums.
pub fn decompound_study(cfg: &DecompoundConfig) -> Result<Vec<DecompoundRow>> {
    cfg.estimator.validate()?;
    cfg.count.validate()?;
    cfg.jobs.validate()?;
    if cfg.reps == 0 || cfg.n == 0 || cfg.ws.is_empty() {
        return Err(Error::param("need reps >= 1, n >= 1 and at least one w"));
    }
    let map = cfg.map();
    let per_rep = par_map(cfg.reps, |r| -> Result<Vec<EstimateResult>> {
        let x = sample_compound(Seed(cfg.seed).replication(r as u64), &cfg.count, &cfg.jobs, cfg.n)?;
        Ok(estimate_cdf_many(&x, &map, &cfg.estimator, &cfg.ws))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(cfg
        .ws
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let truth = cfg.jobs.cdf(w);
            let est: Vec<f64> = per_rep.iter().map(|rep| rep[k].value).collect();
            let errs: Vec<f64> = est.iter().map(|v| (v - truth).abs()).collect();
            let (mean_abs_error, stderr) = mean_and_stderr(&errs);
            DecompoundRow {
                w,
                truth,
                mean_estimate: mean_and_stderr(&est).0,
                mean_abs_error,
                stderr,
                reps: cfg.reps,
                fallbacks: per_rep.iter().filter(|rep| rep[k].fallback.is_some()).count(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert_abs_diff_eq!(log_log_slope(&xs, &ys).unwrap(), -0.5, epsilon = 1e-12);
        assert_eq!(log_log_slope(&[10.0], &[1.0]), None);
    }

    #[test]
    fn stderr_basics() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_abs_diff_eq!(se, (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn cw_cap_lowers_contour() {
        let samples = SampleSet::new(vec![0.0, 0.01, 0.02, 0.0, 0.05]).unwrap();
        let map = PsiMap::Mg1 { delta: 0.1 };
        let cfg = EstimatorConfig::default();
        let capped = estimate_with_cw_cap(&samples, &map, &cfg, &[0.5, 6.0], Some(3.0));
        let direct_small = estimate_cdf_many(&samples, &map, &cfg, &[0.5]);
        let direct_big = estimate_cdf_many(&samples, &map, &EstimatorConfig { c: 0.5, ..cfg }, &[6.0]);
        assert_eq!(capped[0].value, direct_small[0].value);
        assert_eq!(capped[1].value, direct_big[0].value);
    }

    #[test]
    fn small_tail_table_runs() {
        let cfg = TailErrorConfig {
            lambdas: vec![10.0],
            n: 500,
            reps: 4,
            ..Default::default()
        };
        let rows = tail_error_table(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.mean_rel_error.is_finite()));
        assert_eq!(rows, tail_error_table(&cfg).unwrap());
    }

    #[test]
    fn single_n_has_no_slope() {
        let cfg = ConvergenceConfig {
            ns: vec![200],
            reps: 5,
            ..Default::default()
        };
        let report = convergence_study(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.slope, None);
    }

    #[test]
    fn decompound_tiny_intensity_falls_back() {
        let cfg = DecompoundConfig {
            count: CountLaw::Poisson { mean: 1e-9 },
            n: 20,
            reps: 3,
            ..Default::default()
        };
        let rows = decompound_study(&cfg).unwrap();
        assert_eq!(rows[0].fallbacks, 3);
        assert_eq!(rows[0].mean_estimate, 0.0);
    }
}
