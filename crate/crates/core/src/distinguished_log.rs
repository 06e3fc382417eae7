//! Distinguished logarithm of a zero-free transform along `Re(s) = c`.
//!
//! The principal logarithm jumps by `2πi` whenever the transform's phase
//! crosses `±π`. The distinguished logarithm is the continuous one, fixed to
//! the real logarithm at `y = 0`. It is built by walking outward from the
//! center and summing `L(f(s_{k+1}) / f(s_k))`, where `L` is the power series
//! of `log z` around `z = 1`. A step whose ratio leaves the disk
//! `|z - 1| <= 1/2` is bisected, with the transform evaluated at the
//! midpoint, until it fits.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::{ContourGrid, TransformValues};

/// Largest `|ratio - 1|` accepted without bisection.
pub const RATIO_RADIUS: f64 = 0.5;

pub const DEFAULT_REFINE_LIMIT: u32 = 40;

const SERIES_TOL: f64 = 1e-17;
const SERIES_TERMS: usize = 64;
// Outside |z-1| <= 1/2 the series still converges but slowly.
const SERIES_TERMS_SLOW: usize = 1 << 16;

const CENTER_REAL_TOL: f64 = 1e-9;

/// `L(z) = Σ_{j>=1} (-1)^{j-1} (z-1)^j / j`, the principal logarithm on
/// `|z - 1| < 1`.
pub fn log_near_one(z: Complex64) -> Result<Complex64> {
    let u = z - 1.0;
    let r = u.norm();
    if !(r < 1.0) {
        return Err(Error::Domain(format!("|z - 1| = {r} must be < 1")));
    }
    let max_terms = if r <= RATIO_RADIUS {
        SERIES_TERMS
    } else {
        SERIES_TERMS_SLOW
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = u;
    for j in 1..=max_terms {
        let term = power / j as f64;
        if j % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term.norm() < SERIES_TOL {
            break;
        }
        power *= u;
    }
    Ok(sum)
}

/// Distinguished logarithm values on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPath {
    grid: ContourGrid,
    log_values: Vec<Complex64>,
}

impl LogPath {
    pub fn grid(&self) -> &ContourGrid {
        &self.grid
    }

    pub fn log_values(&self) -> &[Complex64] {
        &self.log_values
    }

    pub fn half(&self) -> &[Complex64] {
        &self.log_values[self.grid.center()..]
    }

    pub fn into_values(self) -> TransformValues {
        TransformValues::from_full(self.grid, self.log_values).expect("length matches grid")
    }
}

/// Tracks the logarithm of `evaluator` over `grid`.
pub fn track_log<F>(evaluator: F, grid: &ContourGrid, refine_limit: u32) -> Result<LogPath>
where
    F: Fn(Complex64) -> Complex64,
{
    let values = TransformValues::from_fn(grid.clone(), &evaluator);
    track_log_values(&values, evaluator, refine_limit)
}

/// Tracks the logarithm of precomputed grid values. `evaluator` is only
/// called at bisection midpoints and must agree with `values` on the grid.
pub fn track_log_values<F>(values: &TransformValues, evaluator: F, refine_limit: u32) -> Result<LogPath>
where
    F: Fn(Complex64) -> Complex64,
{
    let grid = values.grid();
    let half = track_outward(&evaluator, grid.c(), grid.half_ys(), values.half(), refine_limit)?;
    let mut log_values = Vec::with_capacity(grid.len());
    log_values.extend(half[1..].iter().rev().map(|z| z.conj()));
    log_values.extend(half);
    Ok(LogPath {
        grid: grid.clone(),
        log_values,
    })
}

/// Walks `ys` (which must start at 0) accumulating ratio logarithms.
pub(crate) fn track_outward<F>(
    evaluator: &F,
    c: f64,
    ys: &[f64],
    values: &[Complex64],
    refine_limit: u32,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64,
{
    debug_assert_eq!(ys.len(), values.len());
    debug_assert_eq!(ys.first().copied(), Some(0.0));
    let f0 = values[0];
    if !(f0.re > 0.0 && f0.re.is_finite()) || f0.im.abs() > CENTER_REAL_TOL * f0.norm() {
        return Err(Error::Domain(format!(
            "transform at s = c must be real and positive, got {f0}"
        )));
    }
    let mut out = Vec::with_capacity(ys.len());
    let mut acc = Complex64::new(f0.re.ln(), 0.0);
    out.push(acc);
    for k in 1..ys.len() {
        acc += increment(evaluator, c, ys[k - 1], values[k - 1], ys[k], values[k], refine_limit)?;
        out.push(acc);
    }
    Ok(out)
}

fn increment<F>(
    evaluator: &F,
    c: f64,
    ya: f64,
    fa: Complex64,
    yb: f64,
    fb: Complex64,
    depth_left: u32,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let ratio = fb / fa;
    if ratio.is_finite() && (ratio - 1.0).norm() <= RATIO_RADIUS {
        return log_near_one(ratio);
    }
    if depth_left == 0 {
        return Err(Error::NearZeroTransform { y: 0.5 * (ya + yb) });
    }
    let ym = 0.5 * (ya + yb);
    let fm = evaluator(Complex64::new(c, ym));
    Ok(increment(evaluator, c, ya, fa, ym, fm, depth_left - 1)?
        + increment(evaluator, c, ym, fm, yb, fb, depth_left - 1)?)
}
