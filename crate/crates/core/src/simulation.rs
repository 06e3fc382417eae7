//! Synthetic data: compound sums, M/G/1 workload paths, and M/M/1 closed
//! forms used as ground truth.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::{AnalyticModel, SampleSet};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent seed for replication `r`, derived by a splitmix64 step.
    pub fn replication(self, r: u64) -> Seed {
        let mut z = self.0 ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn rng(self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JobModel {
    Exponential { rate: f64 },
    Deterministic { size: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl JobModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JobModel::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            JobModel::Deterministic { size } => size > 0.0 && size.is_finite(),
            JobModel::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid job model {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JobModel::Exponential { rate } => 1.0 / rate,
            JobModel::Deterministic { size } => size,
            JobModel::Gamma { shape, scale } => shape * scale,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JobModel::Exponential { rate } => 2.0 / (rate * rate),
            JobModel::Deterministic { size } => size * size,
            JobModel::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
        }
    }

    /// `P(B <= w)`.
    pub fn cdf(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        match *self {
            JobModel::Exponential { rate } => 1.0 - (-rate * w).exp(),
            JobModel::Deterministic { size } => (w >= size) as u8 as f64,
            JobModel::Gamma { shape, scale } => statrs::function::gamma::gamma_lr(shape, w / scale),
        }
    }

    pub fn analytic(&self) -> AnalyticModel {
        match *self {
            JobModel::Exponential { rate } => AnalyticModel::Exponential { rate },
            JobModel::Deterministic { size } => AnalyticModel::Deterministic { point: size },
            JobModel::Gamma { shape, scale } => AnalyticModel::Gamma { shape, scale },
        }
    }

    pub fn sampler(&self) -> Result<JobSampler> {
        self.validate()?;
        Ok(match *self {
            JobModel::Exponential { rate } => JobSampler::Exponential(Exp::new(rate).expect("validated")),
            JobModel::Deterministic { size } => JobSampler::Deterministic(size),
            JobModel::Gamma { shape, scale } => {
                JobSampler::Gamma(Gamma::new(shape, scale).expect("validated"))
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum JobSampler {
    Exponential(Exp<f64>),
    Deterministic(f64),
    Gamma(Gamma<f64>),
}

impl Distribution<f64> for JobSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JobSampler::Exponential(d) => d.sample(rng),
            JobSampler::Deterministic(v) => *v,
            JobSampler::Gamma(d) => d.sample(rng),
        }
    }
}

/// Law of the number of summands in a compound sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CountLaw {
    Poisson { mean: f64 },
    Binomial { m: u32, p: f64 },
    /// `P(N = k) = C(k+m-1, k) (1-p)^m p^k`.
    NegBinomial { m: u32, p: f64 },
}

impl CountLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CountLaw::Poisson { mean } => mean > 0.0 && mean.is_finite(),
            CountLaw::Binomial { m, p } | CountLaw::NegBinomial { m, p } => m >= 1 && p > 0.0 && p < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid count law {self:?}")))
        }
    }

    pub fn zero_probability(&self) -> f64 {
        match *self {
            CountLaw::Poisson { mean } => (-mean).exp(),
            CountLaw::Binomial { m, p } | CountLaw::NegBinomial { m, p } => (1.0 - p).powi(m as i32),
        }
    }

    /// `E[z^N]` evaluated at `z = Ỹ(s)`.
    pub fn generating(&self, z: Complex64) -> Complex64 {
        match *self {
            CountLaw::Poisson { mean } => (mean * (z - 1.0)).exp(),
            CountLaw::Binomial { m, p } => (p * z + (1.0 - p)).powu(m),
            CountLaw::NegBinomial { m, p } => {
                (1.0 - p).powi(m as i32) * (1.0 - p * z).powi(-(m as i32))
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            CountLaw::Poisson { mean } => Poisson::new(mean).expect("validated").sample(rng) as u64,
            CountLaw::Binomial { m, p } => Binomial::new(m as u64, p).expect("validated").sample(rng),
            CountLaw::NegBinomial { m, p } => {
                // failures (probability p) before the first success, m times
                let g = Geometric::new(1.0 - p).expect("validated");
                (0..m).map(|_| g.sample(rng)).sum()
            }
        }
    }
}

/// `n` draws of `Σ_{i=1}^N B_i`; draws with `N = 0` are exactly `0.0`.
pub fn sample_compound(seed: Seed, count: &CountLaw, jobs: &JobModel, n: usize) -> Result<SampleSet> {
    count.validate()?;
    let sampler = jobs.sampler()?;
    let mut rng = seed.rng();
    let values = (0..n)
        .map(|_| {
            let k = count.sample(&mut rng);
            (0..k).map(|_| sampler.sample(&mut rng)).sum()
        })
        .collect();
    SampleSet::new(values)
}

pub fn sample_compound_poisson(seed: Seed, intensity: f64, jobs: &JobModel, n: usize) -> Result<SampleSet> {
    sample_compound(seed, &CountLaw::Poisson { mean: intensity }, jobs, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSpec {
    pub lambda: f64,
    pub jobs: JobModel,
    pub delta: f64,
}

impl QueueSpec {
    pub fn rho(&self) -> f64 {
        self.lambda * self.jobs.mean()
    }

    pub fn validate(&self) -> Result<()> {
        self.jobs.validate()?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param(format!("delta = {} must be > 0", self.delta)));
        }
        if !(self.rho() < 1.0) {
            return Err(Error::param(format!("load rho = {} must be < 1", self.rho())));
        }
        Ok(())
    }

    /// Warm-up used when the stationary law cannot be sampled directly.
    pub fn default_warmup(&self) -> f64 {
        50.0 * self.jobs.mean() / (1.0 - self.rho())
    }
}

/// Observations from one simulated queue path.
#[derive(Debug, Clone, PartialEq)]
pub struct Mg1Trace {
    /// `Y(t0 + iδ)` for `i = 1..=n`, in time order.
    pub workload: SampleSet,
    /// Work arriving in `(t0 + (i-1)δ, t0 + iδ]`.
    pub interval_work: SampleSet,
}

/// Event-driven simulation of a unit-rate single-server queue.
///
/// With exponential jobs and no explicit warm-up, the initial workload is
/// drawn from the stationary law and no warm-up is run. Otherwise the queue
/// starts empty and runs for `warmup_time` (default
/// [`QueueSpec::default_warmup`]) before the first interval.
pub fn simulate_mg1(seed: Seed, spec: &QueueSpec, n: usize, warmup_time: Option<f64>) -> Result<Mg1Trace> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    if let Some(t) = warmup_time {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param(format!("warm-up time {t} must be >= 0")));
        }
    }
    let mut rng = seed.rng();
    let jobs = spec.jobs.sampler()?;
    let rho = spec.rho();

    let (mut work, warmup) = match (spec.jobs, warmup_time) {
        (JobModel::Exponential { rate }, None) => {
            let w0 = if spec.lambda > 0.0 && rng.random::<f64>() < rho {
                Exp::new(rate - spec.lambda).expect("rho < 1").sample(&mut rng)
            } else {
                0.0
            };
            (w0, 0.0)
        }
        (_, t) => (0.0, t.unwrap_or_else(|| spec.default_warmup())),
    };

    let gaps = (spec.lambda > 0.0).then(|| Exp::new(spec.lambda).expect("lambda > 0"));
    let next_gap = |rng: &mut SimRng| gaps.map_or(f64::INFINITY, |g| g.sample(rng));

    let mut now = 0.0;
    let mut next_arrival = next_gap(&mut rng);
    // advance to `until`, returning the work that arrived on the way
    let mut advance = |until: f64, work: &mut f64, now: &mut f64, rng: &mut SimRng| -> f64 {
        let mut arrived = 0.0;
        while next_arrival <= until {
            *work = (*work - (next_arrival - *now)).max(0.0);
            let b = jobs.sample(rng);
            *work += b;
            arrived += b;
            *now = next_arrival;
            next_arrival += next_gap(rng);
        }
        *work = (*work - (until - *now)).max(0.0);
        *now = until;
        arrived
    };

    advance(warmup, &mut work, &mut now, &mut rng);
    let mut workload = Vec::with_capacity(n);
    let mut interval_work = Vec::with_capacity(n);
    for i in 1..=n {
        let until = warmup + i as f64 * spec.delta;
        interval_work.push(advance(until, &mut work, &mut now, &mut rng));
        workload.push(work);
    }
    Ok(Mg1Trace {
        workload: SampleSet::new(workload)?,
        interval_work: SampleSet::new(interval_work)?,
    })
}

pub fn simulate_mg1_workload(seed: Seed, spec: &QueueSpec, n: usize, warmup_time: Option<f64>) -> Result<SampleSet> {
    Ok(simulate_mg1(seed, spec, n, warmup_time)?.workload)
}

fn check_mm1(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda > 0.0 && mu > 0.0 && lambda < mu && mu.is_finite()) {
        return Err(Error::param(format!("need 0 < lambda < mu, got lambda = {lambda}, mu = {mu}")));
    }
    Ok(())
}

/// Stationary M/M/1 workload distribution `1 - ρ e^{-(μ-λ)w}`.
pub fn mm1_stationary_cdf(lambda: f64, mu: f64, w: f64) -> Result<f64> {
    check_mm1(lambda, mu)?;
    if !(w >= 0.0) {
        return Err(Error::param(format!("w = {w} must be >= 0")));
    }
    Ok(1.0 - (lambda / mu) * (-(mu - lambda) * w).exp())
}

/// Inverse of [`mm1_stationary_cdf`] above the atom at zero.
pub fn mm1_percentile(lambda: f64, mu: f64, p: f64) -> Result<f64> {
    check_mm1(lambda, mu)?;
    let rho = lambda / mu;
    if !(p > 1.0 - rho + 1e-12 && p < 1.0) {
        return Err(Error::param(format!("level {p} must lie in (1 - rho, 1) = ({}, 1)", 1.0 - rho)));
    }
    Ok((rho / (1.0 - p)).ln() / (mu - lambda))
}
