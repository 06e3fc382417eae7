//! Empirical and analytic Laplace transforms evaluated on a vertical contour
//! `Re(s) = c`.
//!
//! All transforms here belong to nonnegative random variables, so they are
//! bounded by one in modulus on the closed right half-plane and satisfy
//! `f(conj(s)) = conj(f(s))`. [`TransformValues`] relies on the second fact:
//! only the `y >= 0` half of a contour is ever computed, the other half is
//! mirrored.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative observations with cached summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    mean: f64,
    zero_fraction: f64,
}

impl SampleSet {
    /// Builds a sample set, counting only exact zeros toward the zero fraction.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_zero_threshold(values, 0.0)
    }

    /// Like [`SampleSet::new`], but values `<= zero_threshold` count as zeros.
    pub fn with_zero_threshold(values: Vec<f64>, zero_threshold: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        if !(zero_threshold >= 0.0 && zero_threshold.is_finite()) {
            return Err(Error::param("zero threshold must be finite and >= 0"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSample {
                    line: i + 1,
                    reason: format!("value {v} is not a finite nonnegative number"),
                });
            }
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let zeros = values.iter().filter(|&&v| v <= zero_threshold).count();
        Ok(Self {
            mean,
            zero_fraction: zeros as f64 / n,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a `SampleSet` holds at least one value.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn zero_fraction(&self) -> f64 {
        self.zero_fraction
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Arithmetic mean of the samples. Estimates `-X'(0)`.
pub fn sample_mean(samples: &SampleSet) -> f64 {
    samples.mean()
}

/// Fraction of samples that are zero. Estimates the transform at infinity.
pub fn zero_fraction(samples: &SampleSet) -> f64 {
    samples.zero_fraction()
}

/// Evaluation points `s = c + iy` for a symmetric uniform grid `y ∈ [-T, T]`.
///
/// The grid has `2m + 1` points with `m` even, so composite Simpson applies
/// to both the full range and the half range `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    c: f64,
    t_max: f64,
    half_intervals: usize,
    ys: Vec<f64>,
}

impl ContourGrid {
    /// `half_intervals` is the number of intervals on `[0, T]`; it must be
    /// even and positive.
    pub fn new(c: f64, t_max: f64, half_intervals: usize) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param(format!("contour abscissa c = {c} must be > 0")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::param(format!("truncation T = {t_max} must be > 0")));
        }
        if half_intervals == 0 || half_intervals % 2 != 0 {
            return Err(Error::param("half_intervals must be even and positive"));
        }
        let m = half_intervals;
        let positive: Vec<f64> = (0..=m).map(|j| t_max * (j as f64 / m as f64)).collect();
        let mut ys = Vec::with_capacity(2 * m + 1);
        ys.extend(positive[1..].iter().rev().map(|y| -y));
        ys.extend_from_slice(&positive);
        Ok(Self {
            c,
            t_max,
            half_intervals: m,
            ys,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn step(&self) -> f64 {
        self.t_max / self.half_intervals as f64
    }

    pub fn half_intervals(&self) -> usize {
        self.half_intervals
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `y = 0`.
    pub fn center(&self) -> usize {
        self.half_intervals
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// The `y >= 0` half, starting at 0.
    pub fn half_ys(&self) -> &[f64] {
        &self.ys[self.center()..]
    }

    pub fn point(&self, k: usize) -> Complex64 {
        Complex64::new(self.c, self.ys[k])
    }

    pub fn at(&self, y: f64) -> Complex64 {
        Complex64::new(self.c, y)
    }
}

/// Complex values on every point of a [`ContourGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransformValues {
    grid: ContourGrid,
    values: Vec<Complex64>,
}

impl TransformValues {
    /// Builds values from the `y >= 0` half by conjugate mirroring.
    pub fn from_half(grid: ContourGrid, half: Vec<Complex64>) -> Result<Self> {
        if half.len() != grid.half_intervals + 1 {
            return Err(Error::param(format!(
                "expected {} half-grid values, got {}",
                grid.half_intervals + 1,
                half.len()
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        values.extend(half[1..].iter().rev().map(|z| z.conj()));
        values.extend(half);
        Ok(Self { grid, values })
    }

    pub fn from_full(grid: ContourGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Evaluates `f` on the `y >= 0` half and mirrors.
    pub fn from_fn(grid: ContourGrid, f: impl Fn(Complex64) -> Complex64) -> Self {
        let half = grid.half_ys().iter().map(|&y| f(grid.at(y))).collect();
        Self::from_half(grid, half).expect("half length matches grid")
    }

    pub fn grid(&self) -> &ContourGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn half(&self) -> &[Complex64] {
        &self.values[self.grid.center()..]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Pointwise map on the `y >= 0` half; the result is mirrored again.
    pub fn map_half(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let half = self
            .grid
            .half_ys()
            .iter()
            .zip(self.half())
            .map(|(&y, &z)| f(y, z))
            .collect();
        Self::from_half(self.grid.clone(), half).expect("half length matches grid")
    }
}

/// Closed-form transforms used as oracles and as simulation ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticModel {
    Exponential { rate: f64 },
    Deterministic { point: f64 },
    Gamma { shape: f64, scale: f64 },
    CompoundPoisson { intensity: f64, jobs: Box<AnalyticModel> },
}

impl AnalyticModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            AnalyticModel::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            AnalyticModel::Deterministic { point } => *point >= 0.0 && point.is_finite(),
            AnalyticModel::Gamma { shape, scale } => {
                *shape > 0.0 && *scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            AnalyticModel::CompoundPoisson { intensity, jobs } => {
                jobs.validate()?;
                *intensity > 0.0 && intensity.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid model parameters: {self:?}")))
        }
    }

    /// `E[exp(-sX)]` for `Re(s) >= 0`.
    pub fn transform(&self, s: Complex64) -> Complex64 {
        match self {
            AnalyticModel::Exponential { rate } => *rate / (*rate + s),
            AnalyticModel::Deterministic { point } => (-s * *point).exp(),
            // principal branch; 1 + θs stays in the right half-plane on C₊
            AnalyticModel::Gamma { shape, scale } => (1.0 + s * *scale).powf(-*shape),
            AnalyticModel::CompoundPoisson { intensity, jobs } => {
                (*intensity * (jobs.transform(s) - 1.0)).exp()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            AnalyticModel::Exponential { rate } => 1.0 / rate,
            AnalyticModel::Deterministic { point } => *point,
            AnalyticModel::Gamma { shape, scale } => shape * scale,
            AnalyticModel::CompoundPoisson { intensity, jobs } => intensity * jobs.mean(),
        }
    }
}

pub fn analytic_transform_eval(model: &AnalyticModel, s: Complex64) -> Complex64 {
    model.transform(s)
}

/// `(1/n) Σ exp(-s Xᵢ)`, evaluated directly.
pub fn empirical_transform_eval(samples: &SampleSet, s: Complex64) -> Complex64 {
    let sum: Complex64 = samples.values().iter().map(|&x| (-s * x).exp()).sum();
    sum / samples.len() as f64
}

// Points per anchor in the rotation recurrence; bounds accumulated drift.
const ANCHOR_SPAN: usize = 128;

/// Empirical transform on every grid point.
///
/// Within blocks of consecutive points each sample's term is advanced by the
/// rotation `exp(-i h x)`, re-anchored by a direct evaluation at the start
/// of every block.
pub fn empirical_transform_grid(samples: &SampleSet, grid: &ContourGrid) -> TransformValues {
    let ys = grid.half_ys();
    let h = grid.step();
    let c = grid.c();
    let n = samples.len() as f64;

    let block = |start: usize| -> Vec<Complex64> {
        let end = (start + ANCHOR_SPAN).min(ys.len());
        let mut acc = vec![Complex64::new(0.0, 0.0); end - start];
        let s0 = Complex64::new(c, ys[start]);
        for &x in samples.values() {
            let decay = (-c * x).exp();
            if decay == 0.0 {
                continue;
            }
            let mut term = (-s0 * x).exp();
            let rot = Complex64::from_polar(1.0, -h * x);
            for a in acc.iter_mut() {
                *a += term;
                term *= rot;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    };

    let starts: Vec<usize> = (0..ys.len()).step_by(ANCHOR_SPAN).collect();
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<Complex64>> = {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| block(s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<Complex64>> = starts.iter().map(|&s| block(s)).collect();

    let mut half: Vec<Complex64> = blocks.into_iter().flatten().collect();
    // the center is real for a real contour point
    half[0].im = 0.0;
    TransformValues::from_half(grid.clone(), half).expect("half length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    fn s(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empirical_eval_examples() {
        let zeros = SampleSet::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(empirical_transform_eval(&zeros, s(3.0, 2.0)), s(1.0, 0.0));

        let half = SampleSet::new(vec![LN_2]).unwrap();
        assert_abs_diff_eq!(empirical_transform_eval(&half, s(1.0, 0.0)).re, 0.5, epsilon = 1e-15);

        let two = SampleSet::new(vec![1.0, 2.0]).unwrap();
        let v = empirical_transform_eval(&two, s(1.0, 0.0));
        assert_abs_diff_eq!(v.re, 0.25160, epsilon = 1e-5);
        assert_abs_diff_eq!(v.re, ((-1.0f64).exp() + (-2.0f64).exp()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_examples() {
        let grid = ContourGrid::new(1.0, 10.0, 100).unwrap();
        let ones = empirical_transform_grid(&SampleSet::new(vec![0.0]).unwrap(), &grid);
        assert!(ones.values().iter().all(|&z| z == s(1.0, 0.0)));

        let one = empirical_transform_grid(&SampleSet::new(vec![1.0]).unwrap(), &grid);
        assert_abs_diff_eq!(one.values()[grid.center()].re, (-1.0f64).exp(), epsilon = 1e-15);

        let grid = ContourGrid::new(1.0, PI, 2).unwrap();
        let two = empirical_transform_grid(&SampleSet::new(vec![1.0, 2.0]).unwrap(), &grid);
        let v = two.values();
        assert_eq!(v[0], v[4].conj());
        let direct = empirical_transform_eval(&SampleSet::new(vec![1.0, 2.0]).unwrap(), s(1.0, -PI));
        assert_abs_diff_eq!((v[0] - direct).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_matches_direct_evaluation() {
        let samples = SampleSet::new(vec![0.0, 0.013, 0.2, 0.7, 1.9, 5.5, 40.0]).unwrap();
        let grid = ContourGrid::new(0.7, 100.0, 2000).unwrap();
        let values = empirical_transform_grid(&samples, &grid);
        for (k, &z) in values.values().iter().enumerate() {
            let direct = empirical_transform_eval(&samples, grid.point(k));
            assert!((z - direct).norm() <= 1e-10 * direct.norm().max(1e-300), "k = {k}");
        }
    }

    #[test]
    fn grid_layout_is_symmetric() {
        let grid = ContourGrid::new(1.0, 3.0, 6).unwrap();
        let ys = grid.ys();
        assert_eq!(ys.len(), 13);
        assert_eq!(ys[0], -3.0);
        assert_eq!(ys[12], 3.0);
        assert_eq!(ys[grid.center()], 0.0);
        for k in 0..ys.len() {
            assert_eq!(ys[k], -ys[ys.len() - 1 - k]);
        }
        assert!(ContourGrid::new(1.0, 3.0, 5).is_err());
        assert!(ContourGrid::new(0.0, 3.0, 6).is_err());
    }

    #[test]
    fn analytic_examples() {
        let e20 = AnalyticModel::Exponential { rate: 20.0 };
        assert_eq!(e20.transform(s(0.0, 0.0)), s(1.0, 0.0));
        let e1 = AnalyticModel::Exponential { rate: 1.0 };
        assert_abs_diff_eq!(e1.transform(s(1.0, 0.0)).re, 0.5, epsilon = 1e-15);
        let cp = AnalyticModel::CompoundPoisson {
            intensity: 2.0,
            jobs: Box::new(e1),
        };
        assert_abs_diff_eq!(cp.transform(s(1.0, 0.0)).re, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(cp.transform(s(1.0, 0.0)).re, 0.36788, epsilon = 1e-5);

        let g = AnalyticModel::Gamma { shape: 2.5, scale: 0.5 };
        let v = g.transform(s(2.0, 0.0));
        assert_abs_diff_eq!(v.re, 2.0f64.powf(-2.5), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
        let d = AnalyticModel::Deterministic { point: 1.0 };
        assert_abs_diff_eq!((d.transform(s(0.0, PI)) - s(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn summary_statistics() {
        let set = |v: &[f64]| SampleSet::new(v.to_vec()).unwrap();
        assert_eq!(sample_mean(&set(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(sample_mean(&set(&[1.0, 3.0])), 2.0);
        assert_abs_diff_eq!(sample_mean(&set(&[0.2, 0.4, 0.9])), 0.5, epsilon = 1e-15);
        assert_eq!(zero_fraction(&set(&[0.0, 0.0])), 1.0);
        assert_eq!(zero_fraction(&set(&[1.0, 2.0, 3.0])), 0.0);
        assert_eq!(zero_fraction(&set(&[0.0, 1.5, 0.0, 2.0])), 0.5);

        let thresholded = SampleSet::with_zero_threshold(vec![0.0, 1e-9, 1.0], 1e-6).unwrap();
        assert_abs_diff_eq!(thresholded.zero_fraction(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(matches!(SampleSet::new(vec![]), Err(Error::EmptySamples)));
        assert!(matches!(
            SampleSet::new(vec![1.0, -0.5]),
            Err(Error::InvalidSample { line: 2, .. })
        ));
        assert!(SampleSet::new(vec![f64::NAN]).is_err());
        assert!(SampleSet::new(vec![f64::INFINITY]).is_err());
    }
}
