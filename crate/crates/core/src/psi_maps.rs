//! Transform maps carrying the transform of the observed variable `X` to the
//! transform of the target `Y`, together with the sample conditions under
//! which the empirical transform lies in each map's domain.
//!
//! Each map is split into a kernel that works on an already tracked
//! logarithm plus scalar statistics (`*_from_log`), and an `*_apply` wrapper
//! that feeds it the empirical transform. The kernels accept exact inputs
//! as well, which is how the round-trip tests exercise them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distinguished_log::{track_log_values, LogPath, DEFAULT_REFINE_LIMIT};
use crate::error::{Error, Result};
use crate::transforms::{empirical_transform_eval, empirical_transform_grid, ContourGrid, SampleSet, TransformValues};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum PsiMap {
    /// Workload of an M/G/1 queue from the work arriving in intervals of
    /// length `delta`.
    Mg1 { delta: f64 },
    /// Summand law of a compound Poisson sum.
    PoissonDecompound,
    /// Summand law of a compound sum with `Bin(m, p)` count.
    BinomialDecompound { m: u32 },
    /// Summand law of a compound sum with negative binomial `(m, p)` count.
    NegBinomialDecompound { m: u32 },
}

impl PsiMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PsiMap::Mg1 { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::param(format!("delta = {delta} must be > 0")))
            }
            PsiMap::BinomialDecompound { m } | PsiMap::NegBinomialDecompound { m } if m == 0 => {
                Err(Error::param("M must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PsiMap::Mg1 { .. } => "mg1",
            PsiMap::PoissonDecompound => "poisson",
            PsiMap::BinomialDecompound { .. } => "binomial",
            PsiMap::NegBinomialDecompound { .. } => "negbinomial",
        }
    }

    /// Whether the empirical transform of `samples` is in the map's domain.
    pub fn domain_check(&self, samples: &SampleSet) -> bool {
        match *self {
            PsiMap::Mg1 { delta } => mg1_domain_check(samples, delta),
            _ => poisson_domain_check(samples),
        }
    }

    pub fn apply(&self, samples: &SampleSet, grid: &ContourGrid) -> Result<TransformValues> {
        self.validate()?;
        match *self {
            PsiMap::Mg1 { delta } => mg1_psi_apply(samples, delta, grid),
            PsiMap::PoissonDecompound => poisson_decompound_apply(samples, grid),
            PsiMap::BinomialDecompound { m } => binomial_decompound_apply(samples, m, grid),
            PsiMap::NegBinomialDecompound { m } => negbinomial_decompound_apply(samples, m, grid),
        }
    }

    /// Estimated limit of the output transform as `|Im s| → ∞`, i.e. the
    /// probability mass of `Y` at zero. Only the M/G/1 map has one.
    pub fn atom(&self, samples: &SampleSet) -> f64 {
        match *self {
            PsiMap::Mg1 { delta } => 1.0 - samples.mean() / delta,
            _ => 0.0,
        }
    }
}

pub fn mg1_domain_check(samples: &SampleSet, delta: f64) -> bool {
    let m = samples.mean();
    0.0 <= m && m < delta
}

pub fn poisson_domain_check(samples: &SampleSet) -> bool {
    let q = samples.zero_fraction();
    0.0 < q && q < 1.0
}

fn empirical_log(samples: &SampleSet, grid: &ContourGrid) -> Result<LogPath> {
    let values = empirical_transform_grid(samples, grid);
    track_log_values(&values, |s| empirical_transform_eval(samples, s), DEFAULT_REFINE_LIMIT)
}

fn map_log(log: &LogPath, f: impl Fn(Complex64, Complex64) -> Complex64) -> TransformValues {
    let grid = log.grid();
    let half = grid
        .half_ys()
        .iter()
        .zip(log.half())
        .map(|(&y, &l)| f(grid.at(y), l))
        .collect();
    TransformValues::from_half(grid.clone(), half).expect("half length matches grid")
}

/// `s (1 - mean/δ) / (s + Log(X̃(s))/δ)`.
pub fn mg1_from_log(log: &LogPath, mean: f64, delta: f64) -> TransformValues {
    let idle = 1.0 - mean / delta;
    map_log(log, |s, l| s * idle / (s + l / delta))
}

/// `1 + Log(X̃(s)) / (-log X̃(∞))`.
pub fn poisson_from_log(log: &LogPath, x_at_infinity: f64) -> TransformValues {
    let intensity = -x_at_infinity.ln();
    map_log(log, |_, l| 1.0 + l / intensity)
}

/// `(X̃(s)^{1/M} - X̃(∞)^{1/M}) / (1 - X̃(∞)^{1/M})` with the root taken
/// through the distinguished logarithm.
pub fn binomial_from_log(log: &LogPath, x_at_infinity: f64, m: u32) -> TransformValues {
    let m = m as f64;
    let q = x_at_infinity.powf(1.0 / m);
    map_log(log, |_, l| ((l / m).exp() - q) / (1.0 - q))
}

/// `(1 - X̃(∞)^{1/M} X̃(s)^{-1/M}) / (1 - X̃(∞)^{1/M})`.
pub fn negbinomial_from_log(log: &LogPath, x_at_infinity: f64, m: u32) -> TransformValues {
    let m = m as f64;
    let q = x_at_infinity.powf(1.0 / m);
    map_log(log, |_, l| (1.0 - q * (-l / m).exp()) / (1.0 - q))
}

pub fn mg1_psi_apply(samples: &SampleSet, delta: f64, grid: &ContourGrid) -> Result<TransformValues> {
    if !mg1_domain_check(samples, delta) {
        return Err(Error::DomainEventFailed("sample mean must be < delta"));
    }
    let log = empirical_log(samples, grid)?;
    Ok(mg1_from_log(&log, samples.mean(), delta))
}

pub fn poisson_decompound_apply(samples: &SampleSet, grid: &ContourGrid) -> Result<TransformValues> {
    if !poisson_domain_check(samples) {
        return Err(Error::DomainEventFailed("zero fraction must lie in (0, 1)"));
    }
    let log = empirical_log(samples, grid)?;
    Ok(poisson_from_log(&log, samples.zero_fraction()))
}

pub fn binomial_decompound_apply(samples: &SampleSet, m: u32, grid: &ContourGrid) -> Result<TransformValues> {
    if m == 0 {
        return Err(Error::param("M must be >= 1"));
    }
    if !poisson_domain_check(samples) {
        return Err(Error::DomainEventFailed("zero fraction must lie in (0, 1)"));
    }
    let log = empirical_log(samples, grid)?;
    Ok(binomial_from_log(&log, samples.zero_fraction(), m))
}

pub fn negbinomial_decompound_apply(samples: &SampleSet, m: u32, grid: &ContourGrid) -> Result<TransformValues> {
    if m == 0 {
        return Err(Error::param("M must be >= 1"));
    }
    if !poisson_domain_check(samples) {
        return Err(Error::DomainEventFailed("zero fraction must lie in (0, 1)"));
    }
    let log = empirical_log(samples, grid)?;
    Ok(negbinomial_from_log(&log, samples.zero_fraction(), m))
}
