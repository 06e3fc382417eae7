//! The end-to-end plug-in estimator of `F^Y(w)` and the comparison
//! estimators built from workload samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{bromwich_truncated_with_atom, build_grid, QuadratureSpec};
use crate::psi_maps::PsiMap;
use crate::transforms::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Contour abscissa. Keep `c * w` moderate; the error constant grows
    /// like `e^{cw}`.
    pub c: f64,
    /// Truncation level; `None` means `sqrt(n)`.
    pub t_max_override: Option<f64>,
    pub quad: QuadratureSpec,
    /// Returned when the sample falls outside the map's domain.
    pub fallback_value: f64,
    pub clip: bool,
    /// Invert the estimated point mass of `Y` at zero exactly instead of
    /// leaving it inside the truncated integral.
    pub atom_correction: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            t_max_override: None,
            quad: QuadratureSpec::default(),
            fallback_value: 0.0,
            clip: true,
            atom_correction: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c = {} must be > 0", self.c)));
        }
        if let Some(t) = self.t_max_override {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param(format!("T = {t} must be > 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.fallback_value) {
            return Err(Error::param("fallback value must lie in [0, 1]"));
        }
        self.quad.validate()
    }

    pub fn t_max_for(&self, n: usize) -> f64 {
        self.t_max_override.unwrap_or((n as f64).sqrt())
    }
}

/// Why the estimator fell back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// The sample is outside the map's domain.
    DomainEvent,
    /// The empirical transform came too close to zero to track its logarithm.
    LogTracking,
    /// Grid construction failed or the integral was not finite.
    Numerical,
}

impl Fallback {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fallback::DomainEvent => "domain_event",
            Fallback::LogTracking => "log_tracking",
            Fallback::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub w: f64,
    pub value: f64,
    /// Unclipped inversion output; `None` on the fallback path.
    pub raw_value: Option<f64>,
    pub on_domain_event: bool,
    pub fallback: Option<Fallback>,
    pub clipped: bool,
    pub imag_residual: f64,
    pub t_max_used: f64,
    pub n: usize,
}

impl EstimateResult {
    /// Residual imaginary mass above which the inversion is suspect.
    pub const IMAG_WARN: f64 = 1e-6;

    pub fn imag_warning(&self) -> bool {
        self.imag_residual > Self::IMAG_WARN
    }

    fn fallback(w: f64, config: &EstimatorConfig, n: usize, why: Fallback) -> Self {
        Self {
            w,
            value: config.fallback_value,
            raw_value: None,
            on_domain_event: false,
            fallback: Some(why),
            clipped: false,
            imag_residual: 0.0,
            t_max_used: config.t_max_for(n),
            n,
        }
    }
}

pub fn estimate_cdf(samples: &SampleSet, map: &PsiMap, config: &EstimatorConfig, w: f64) -> EstimateResult {
    estimate_cdf_many(samples, map, config, &[w])
        .pop()
        .expect("one result per w")
}

/// Estimates `F^Y` at several points from one transform evaluation. The
/// grid is built for the largest `w`, which satisfies the phase bound for
/// all smaller ones.
pub fn estimate_cdf_many(samples: &SampleSet, map: &PsiMap, config: &EstimatorConfig, ws: &[f64]) -> Vec<EstimateResult> {
    let n = samples.len();
    let all = |why| ws.iter().map(|&w| EstimateResult::fallback(w, config, n, why)).collect();

    if map.validate().is_err() || config.validate().is_err() || ws.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return all(Fallback::Numerical);
    }
    if !map.domain_check(samples) {
        return all(Fallback::DomainEvent);
    }
    let t_max = config.t_max_for(n);
    let w_max = ws.iter().copied().fold(0.0, f64::max);
    let grid = match build_grid(config.c, t_max, w_max, &config.quad) {
        Ok(g) => g,
        Err(_) => return all(Fallback::Numerical),
    };
    let psi = match map.apply(samples, &grid) {
        Ok(v) => v,
        Err(Error::DomainEventFailed(_)) => return all(Fallback::DomainEvent),
        Err(Error::NearZeroTransform { .. } | Error::Domain(_)) => return all(Fallback::LogTracking),
        Err(_) => return all(Fallback::Numerical),
    };
    let atom = if config.atom_correction { map.atom(samples) } else { 0.0 };

    ws.iter()
        .map(|&w| match bromwich_truncated_with_atom(&psi, w, atom) {
            Ok(inv) if inv.value.is_finite() && inv.imag_residual.is_finite() => {
                let value = if config.clip { inv.value.clamp(0.0, 1.0) } else { inv.value };
                EstimateResult {
                    w,
                    value,
                    raw_value: Some(inv.value),
                    on_domain_event: true,
                    fallback: None,
                    clipped: value != inv.value,
                    imag_residual: inv.imag_residual,
                    t_max_used: t_max,
                    n,
                }
            }
            _ => EstimateResult::fallback(w, config, n, Fallback::Numerical),
        })
        .collect()
}

/// `1 - F_n^Y(w)`, from the same (clipped) estimate.
pub fn estimate_tail(samples: &SampleSet, map: &PsiMap, config: &EstimatorConfig, w: f64) -> EstimateResult {
    to_tail(estimate_cdf(samples, map, config, w))
}

pub fn to_tail(cdf: EstimateResult) -> EstimateResult {
    EstimateResult {
        value: 1.0 - cdf.value,
        raw_value: cdf.raw_value.map(|v| 1.0 - v),
        ..cdf
    }
}

/// Fraction of workload samples strictly above `w`.
pub fn empirical_workload_estimator(workload: &SampleSet, w: f64) -> f64 {
    let above = workload.values().iter().filter(|&&y| y > w).count();
    above as f64 / workload.len() as f64
}

/// Work arrived in each interval whose starting workload was at least
/// `delta`, reconstructed as `Y_i - (Y_{i-1} - delta)`.
pub fn censored_increments(workload: &SampleSet, delta: f64) -> Result<SampleSet> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta = {delta} must be > 0")));
    }
    let q: Vec<f64> = workload
        .values()
        .windows(2)
        .filter(|pair| pair[0] >= delta)
        // rounding can leave -1e-17 where nothing arrived
        .map(|pair| (pair[1] - (pair[0] - delta)).max(0.0))
        .collect();
    if q.is_empty() {
        return Err(Error::EmptyResult);
    }
    SampleSet::new(q)
}

/// Minimizer `beta/alpha` of `alpha sqrt(δ) + beta / sqrt(δ)`.
pub fn delta_heuristic(alpha_u: f64, beta_u: f64) -> Result<f64> {
    if !(alpha_u > 0.0 && beta_u > 0.0 && alpha_u.is_finite() && beta_u.is_finite()) {
        return Err(Error::param("alpha_u and beta_u must be positive"));
    }
    Ok(beta_u / alpha_u)
}
