//! Truncated Bromwich inversion of `F̄(s) = ψ(s)/s` by composite Simpson
//! quadrature on a uniform contour grid.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::{AnalyticModel, ContourGrid, TransformValues};

pub const DEFAULT_POINT_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    CompositeSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub max_step: f64,
    /// Largest phase advance `w * h` allowed per step; at most `π/4`.
    pub phase_bound: f64,
    pub point_budget: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::CompositeSimpson,
            max_step: 0.05,
            phase_bound: FRAC_PI_8,
            point_budget: DEFAULT_POINT_BUDGET,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::param(format!("max_step = {} must be > 0", self.max_step)));
        }
        if !(self.phase_bound > 0.0 && self.phase_bound <= FRAC_PI_4) {
            return Err(Error::param(format!(
                "phase_bound = {} must lie in (0, π/4]",
                self.phase_bound
            )));
        }
        Ok(())
    }
}

/// Grid on `[-T, T]` whose step satisfies both the step cap and the phase
/// bound for `w`.
pub fn build_grid(c: f64, t_max: f64, w: f64, quad: &QuadratureSpec) -> Result<ContourGrid> {
    quad.validate()?;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param(format!("w = {w} must be > 0")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::param(format!("truncation T = {t_max} must be > 0")));
    }
    let target = quad.max_step.min(quad.phase_bound / w.max(1.0));
    let raw = (t_max / target).ceil();
    // 2m + 1 points must fit the budget
    if !(raw.is_finite()) || raw > (quad.point_budget / 2) as f64 {
        return Err(Error::Capacity {
            needed: if raw.is_finite() { 2 * raw as usize + 1 } else { usize::MAX },
            budget: quad.point_budget,
        });
    }
    let mut m = (raw as usize).max(2);
    if m % 2 == 1 {
        m += 1;
    }
    if 2 * m + 1 > quad.point_budget {
        return Err(Error::Capacity {
            needed: 2 * m + 1,
            budget: quad.point_budget,
        });
    }
    ContourGrid::new(c, t_max, m)
}

/// Result of one inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverted {
    pub value: f64,
    /// Magnitude of the imaginary part of the full-range integral.
    pub imag_residual: f64,
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Composite Simpson over equally spaced values; `values.len()` must be odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() % 2 == 1 && values.len() >= 3);
    let last = values.len() - 1;
    let weighted: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let wgt = if k == 0 || k == last {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            wgt * v
        })
        .collect();
    pairwise_sum(&weighted) * h / 3.0
}

fn check_phase(grid: &ContourGrid, w: f64) -> Result<()> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param(format!("w = {w} must be > 0")));
    }
    let step = grid.step();
    let phase = step * w;
    if phase > FRAC_PI_4 * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse {
            step,
            w,
            phase,
            bound: FRAC_PI_4,
        });
    }
    Ok(())
}

fn integrand(s: Complex64, psi: Complex64, w: f64, atom: f64) -> Complex64 {
    (s * w).exp() * (psi - atom) / s
}

/// `(1/2π) ∫_{-T}^{T} e^{sw} ψ(s)/s dy` with `s = c + iy`, computed as
/// `(1/π) ∫_0^T Re[...] dy`.
pub fn bromwich_truncated(psi: &TransformValues, w: f64) -> Result<Inverted> {
    bromwich_truncated_with_atom(psi, w, 0.0)
}

/// Same as [`bromwich_truncated`] after splitting off a point mass `atom` at
/// zero: the constant part `atom/s` is inverted exactly, the remainder
/// `(ψ(s) - atom)/s` by quadrature.
pub fn bromwich_truncated_with_atom(psi: &TransformValues, w: f64, atom: f64) -> Result<Inverted> {
    let grid = psi.grid();
    check_phase(grid, w)?;
    let h = grid.step();
    let real: Vec<f64> = grid
        .half_ys()
        .iter()
        .zip(psi.half())
        .map(|(&y, &v)| integrand(grid.at(y), v, w, atom).re)
        .collect();
    let value = atom + simpson(&real, h) / PI;
    let imag: Vec<f64> = grid
        .ys()
        .iter()
        .zip(psi.values())
        .map(|(&y, &v)| integrand(grid.at(y), v, w, atom).im)
        .collect();
    let imag_residual = (simpson(&imag, h) / (2.0 * PI)).abs();
    Ok(Inverted { value, imag_residual })
}

/// Real part of the full-range Simpson integral, without the symmetry
/// shortcut.
pub fn bromwich_full_range(psi: &TransformValues, w: f64) -> Result<f64> {
    let grid = psi.grid();
    check_phase(grid, w)?;
    let real: Vec<f64> = grid
        .ys()
        .iter()
        .zip(psi.values())
        .map(|(&y, &v)| integrand(grid.at(y), v, w, 0.0).re)
        .collect();
    Ok(simpson(&real, grid.step()) / (2.0 * PI))
}

/// Inverts a known transform of `Y` to `F^Y(w)`.
pub fn invert_cdf_known(
    model: &AnalyticModel,
    w: f64,
    c: f64,
    t_max: f64,
    quad: &QuadratureSpec,
) -> Result<Inverted> {
    model.validate()?;
    let grid = build_grid(c, t_max, w, quad)?;
    let psi = TransformValues::from_fn(grid, |s| model.transform(s));
    bromwich_truncated(&psi, w)
}
