//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a flat array of rows, `cols` numbers per row, so the
//! page can plot it without any glue code.

use laplace_plugin::estimator::{empirical_workload_estimator, estimate_cdf_many, EstimatorConfig};
use laplace_plugin::experiments::DEFAULT_CW_MAX;
use laplace_plugin::inversion::{invert_cdf_known, QuadratureSpec};
use laplace_plugin::psi_maps::PsiMap;
use laplace_plugin::simulation::{mm1_stationary_cdf, sample_compound, simulate_mg1, CountLaw, JobModel, QueueSpec, Seed};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 400;
const MAX_N: usize = 200_000;

fn job_model(job: &str, params: &[f64]) -> Result<JobModel, String> {
    let model = match (job, params) {
        ("exp", [rate]) => JobModel::Exponential { rate: *rate },
        ("det", [size]) => JobModel::Deterministic { size: *size },
        ("gamma", [shape, scale]) => JobModel::Gamma { shape: *shape, scale: *scale },
        _ => return Err(format!("unknown job model {job:?} with {} parameters", params.len())),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

fn w_grid(w_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err("w_max must be positive".into());
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_POINTS}"));
    }
    Ok((1..=points).map(|i| w_max * i as f64 / points as f64).collect())
}

fn check_n(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_N {
        return Err(format!("n must lie in 1..={MAX_N}"));
    }
    Ok(())
}

/// Contour abscissa used for a whole curve, keeping `c * w_max` within the cap.
fn curve_config(c: f64, w_max: f64) -> EstimatorConfig {
    EstimatorConfig {
        c: c.min(DEFAULT_CW_MAX / w_max),
        ..EstimatorConfig::default()
    }
}

/// Rows of `(w, inverted, exact)` for a job distribution with known transform.
pub fn known_curve_rows(job: &str, params: &[f64], c: f64, t_max: f64, w_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let model = job_model(job, params)?;
    let analytic = model.analytic();
    let quad = QuadratureSpec::default();
    let mut out = Vec::with_capacity(3 * points);
    for w in w_grid(w_max, points)? {
        let inv = invert_cdf_known(&analytic, w, c, t_max, &quad).map_err(|e| e.to_string())?;
        out.extend([w, inv.value, model.cdf(w)]);
    }
    Ok(out)
}

/// Rows of `(w, laplace, empirical, exact)` for an M/G/1 queue. The Laplace
/// estimate uses per-interval work; the empirical one counts workload
/// samples. `exact` is NaN unless jobs are exponential.
#[allow(clippy::too_many_arguments)]
pub fn mg1_curve_rows(
    lambda: f64,
    job: &str,
    params: &[f64],
    delta: f64,
    n: usize,
    seed: u64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_n(n)?;
    let jobs = job_model(job, params)?;
    let spec = QueueSpec { lambda, jobs, delta };
    let trace = simulate_mg1(Seed(seed), &spec, n, None).map_err(|e| e.to_string())?;
    let ws = w_grid(w_max, points)?;
    let map = PsiMap::Mg1 { delta };
    let est = estimate_cdf_many(&trace.interval_work, &map, &curve_config(1.0, w_max), &ws);
    let mut out = Vec::with_capacity(4 * points);
    for (w, e) in ws.iter().zip(est) {
        let exact = match jobs {
            JobModel::Exponential { rate } => mm1_stationary_cdf(lambda, rate, *w).unwrap_or(f64::NAN),
            _ => f64::NAN,
        };
        out.extend([*w, e.value, 1.0 - empirical_workload_estimator(&trace.workload, *w), exact]);
    }
    Ok(out)
}

/// Rows of `(w, estimate, exact)` for decompounding. `count` is `poisson`
/// (`param` is the mean), `binomial` or `negbinomial` (`param` is p, with
/// `m` trials).
#[allow(clippy::too_many_arguments)]
pub fn decompound_curve_rows(
    count: &str,
    param: f64,
    m: u32,
    job: &str,
    params: &[f64],
    n: usize,
    seed: u64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_n(n)?;
    let (law, map) = match count {
        "poisson" => (CountLaw::Poisson { mean: param }, PsiMap::PoissonDecompound),
        "binomial" => (CountLaw::Binomial { m, p: param }, PsiMap::BinomialDecompound { m }),
        "negbinomial" => (CountLaw::NegBinomial { m, p: param }, PsiMap::NegBinomialDecompound { m }),
        _ => return Err(format!("unknown count law {count:?}")),
    };
    let jobs = job_model(job, params)?;
    let samples = sample_compound(Seed(seed), &law, &jobs, n).map_err(|e| e.to_string())?;
    let ws = w_grid(w_max, points)?;
    let est = estimate_cdf_many(&samples, &map, &curve_config(1.0, w_max), &ws);
    let mut out = Vec::with_capacity(3 * points);
    for (w, e) in ws.iter().zip(est) {
        out.extend([*w, e.value, jobs.cdf(*w)]);
    }
    Ok(out)
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn known_curve(job: &str, params: Vec<f64>, c: f64, t_max: f64, w_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(known_curve_rows(job, &params, c, t_max, w_max, points))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn mg1_curve(
    lambda: f64,
    job: &str,
    params: Vec<f64>,
    delta: f64,
    n: usize,
    seed: u64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    js(mg1_curve_rows(lambda, job, &params, delta, n, seed, w_max, points))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn decompound_curve(
    count: &str,
    param: f64,
    m: u32,
    job: &str,
    params: Vec<f64>,
    n: usize,
    seed: u64,
    w_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    js(decompound_curve_rows(count, param, m, job, &params, n, seed, w_max, points))
}
