//! Stimulus spaces, priors, tuning functions and Poisson population encoders.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, DOMAIN_POPULATION};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Convert a value in nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// A finite stimulus set with a strictly positive prior pmf.
#[derive(Debug, Clone)]
pub struct StimulusSpace {
    points: Vec<f64>,
    prior: Vec<f64>,
}

impl StimulusSpace {
    /// Prior must be strictly positive, sum to 1 within 1e-12, and points
    /// must be distinct.
    pub fn new(points: Vec<f64>, prior: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("stimulus space must be non-empty".into()));
        }
        if points.len() != prior.len() {
            return Err(Error::SizeMismatch(format!(
                "{} points vs {} prior entries",
                points.len(),
                prior.len()
            )));
        }
        if prior.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Config("prior entries must be strictly positive".into()));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("prior sums to {total}, not 1")));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("stimulus points must be distinct".into()));
        }
        Ok(Self { points, prior })
    }

    /// M points evenly spaced on [-T, T] with a uniform prior.
    pub fn uniform_grid(m: usize, t: f64) -> Result<Self> {
        let points = grid_points(m, t)?;
        let prior = make_prior(PriorKind::Uniform, &points)?;
        Self::new(points, prior)
    }

    /// Integer points {1, ..., M} with a uniform prior.
    pub fn integer_grid(m: usize) -> Result<Self> {
        let points: Vec<f64> = (1..=m).map(|i| i as f64).collect();
        let prior = make_prior(PriorKind::Uniform, &points)?;
        Self::new(points, prior)
    }

    /// Replace the prior, revalidating.
    pub fn with_prior(self, prior: Vec<f64>) -> Result<Self> {
        Self::new(self.points, prior)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
}

/// x_m = 2(m-1)T/(M-1) - T, evaluated in double precision.
pub fn grid_points(m: usize, t: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Config("M must be >= 1".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Config("half-range T must be positive".into()));
    }
    if m == 1 {
        return Ok(vec![0.0]);
    }
    Ok((0..m)
        .map(|i| 2.0 * (i as f64) * t / ((m - 1) as f64) - t)
        .collect())
}

/// Prior families available to experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorKind {
    Uniform,
    /// p(x_m) ∝ exp(-x_m^2 / (2 sigma^2)) on a symmetric point set.
    Gaussian { sigma: f64 },
    /// Same formula on a one-sided point set (e.g. {1..1000} with sigma = 500).
    HalfGaussian { sigma: f64 },
}

/// Build a normalized pmf over `points`.
pub fn make_prior(kind: PriorKind, points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Config("empty point set".into()));
    }
    let weights: Vec<f64> = match kind {
        PriorKind::Uniform => vec![1.0; points.len()],
        PriorKind::Gaussian { sigma } | PriorKind::HalfGaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::Config("sigma must be positive".into()));
            }
            // Shift by the maximum log-weight so the normalization cannot
            // underflow even when the grid sits far from the mode.
            let logs: Vec<f64> =
                points.iter().map(|&x| -x * x / (2.0 * sigma * sigma)).collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            logs.iter().map(|&l| (l - top).exp()).collect()
        }
    };
    let z: f64 = weights.iter().sum();
    let prior: Vec<f64> = weights.iter().map(|w| w / z).collect();
    if prior.iter().any(|&p| p == 0.0) {
        return Err(Error::Config(
            "prior underflows to zero at some grid points; widen sigma or shrink the grid".into(),
        ));
    }
    Ok(prior)
}

/// Shannon entropy of a pmf in nats.
pub fn entropy(prior: &[f64]) -> Result<f64> {
    if prior.is_empty() {
        return Err(Error::Config("empty pmf".into()));
    }
    if prior.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::Config("pmf entries must be finite and nonnegative".into()));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("pmf sums to {total}, not 1")));
    }
    Ok(prior
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum())
}

/// Mean-rate tuning function of a single neuron.
#[derive(Debug, Clone, PartialEq)]
pub enum TuningFunction {
    /// f(x) = A if x >= theta, else 0.
    Heaviside { center: f64, amplitude: f64 },
    /// f(x) = max(0, x - theta).
    RectifiedLinear { center: f64 },
    /// f(x_m) = B if m is in the support index set, else 0.
    RandomBinary { support: Vec<usize>, amplitude: f64 },
}

impl TuningFunction {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            TuningFunction::Heaviside { amplitude, .. } => {
                if *amplitude < 0.0 {
                    return Err(Error::Config("amplitude must be nonnegative".into()));
                }
            }
            TuningFunction::RectifiedLinear { .. } => {}
            TuningFunction::RandomBinary { support, amplitude } => {
                if *amplitude < 0.0 {
                    return Err(Error::Config("amplitude must be nonnegative".into()));
                }
                let mut seen = vec![false; m];
                for &i in support {
                    if i >= m {
                        return Err(Error::Config(format!("support index {i} out of range")));
                    }
                    if seen[i] {
                        return Err(Error::Config(format!("duplicate support index {i}")));
                    }
                    seen[i] = true;
                }
            }
        }
        Ok(())
    }

    /// Mean spike count at stimulus index `index` with value `x`.
    pub fn rate(&self, index: usize, x: f64) -> f64 {
        match self {
            TuningFunction::Heaviside { center, amplitude } => {
                if x >= *center {
                    *amplitude
                } else {
                    0.0
                }
            }
            TuningFunction::RectifiedLinear { center } => (x - center).max(0.0),
            TuningFunction::RandomBinary { support, amplitude } => {
                if support.contains(&index) {
                    *amplitude
                } else {
                    0.0
                }
            }
        }
    }
}

/// N neurons with conditionally independent Poisson responses; entry
/// (n, m) is the mean spike count of neuron n at stimulus m.
#[derive(Debug, Clone)]
pub struct PoissonPopulation {
    /// Row-major N x M.
    rates: Vec<f64>,
    n: usize,
    space: StimulusSpace,
}

impl PoissonPopulation {
    pub fn from_tunings(tunings: &[TuningFunction], space: StimulusSpace) -> Result<Self> {
        if tunings.is_empty() {
            return Err(Error::Config("population must have N >= 1 neurons".into()));
        }
        let m = space.len();
        let mut rates = Vec::with_capacity(tunings.len() * m);
        for tuning in tunings {
            tuning.validate(m)?;
            for (index, &x) in space.points().iter().enumerate() {
                rates.push(tuning.rate(index, x));
            }
        }
        Self::from_rates(rates, tunings.len(), space)
    }

    /// Build directly from a row-major N x M rate matrix.
    pub fn from_rates(rates: Vec<f64>, n: usize, space: StimulusSpace) -> Result<Self> {
        let m = space.len();
        if n == 0 || rates.len() != n * m {
            return Err(Error::SizeMismatch(format!(
                "rate matrix has {} entries, expected {}x{}",
                rates.len(),
                n,
                m
            )));
        }
        if rates.iter().any(|&r| r < 0.0 || !r.is_finite()) {
            return Err(Error::Config("rates must be finite and nonnegative".into()));
        }
        Ok(Self { rates, n, space })
    }

    pub fn num_neurons(&self) -> usize {
        self.n
    }

    pub fn num_stimuli(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &StimulusSpace {
        &self.space
    }

    #[inline]
    pub fn rate(&self, n: usize, m: usize) -> f64 {
        self.rates[n * self.space.len() + m]
    }

    /// Rates of neuron `n` across all stimuli.
    pub fn row(&self, n: usize) -> &[f64] {
        let m = self.space.len();
        &self.rates[n * m..(n + 1) * m]
    }

    /// Rates of all neurons at stimulus `m`.
    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.n).map(|n| self.rate(n, m)).collect()
    }

    /// Indices of neurons with a nonzero rate at each stimulus.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        let m = self.space.len();
        let mut supports = vec![Vec::new(); m];
        for n in 0..self.n {
            let row = self.row(n);
            for (j, &r) in row.iter().enumerate() {
                if r > 0.0 {
                    supports[j].push(n);
                }
            }
        }
        supports
    }
}

/// Centers uniformly spaced on [-T, T]; theta_1 = 0 for N = 1.
pub fn uniform_centers(n: usize, t: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("N must be >= 1".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Config("half-range T must be positive".into()));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let d = 2.0 * t / ((n - 1) as f64);
    Ok((0..n).map(|i| (i as f64) * d - t).collect())
}

/// Heaviside step population: rate A where x_m >= theta_n.
pub fn build_heaviside_population(
    n: usize,
    t: f64,
    a: f64,
    space: &StimulusSpace,
) -> Result<PoissonPopulation> {
    let tunings: Vec<TuningFunction> = uniform_centers(n, t)?
        .into_iter()
        .map(|center| TuningFunction::Heaviside { center, amplitude: a })
        .collect();
    PoissonPopulation::from_tunings(&tunings, space.clone())
}

/// Rectified-linear population: rate max(0, x_m - theta_n).
pub fn build_relu_population(n: usize, t: f64, space: &StimulusSpace) -> Result<PoissonPopulation> {
    let tunings: Vec<TuningFunction> = uniform_centers(n, t)?
        .into_iter()
        .map(|center| TuningFunction::RectifiedLinear { center })
        .collect();
    PoissonPopulation::from_tunings(&tunings, space.clone())
}

/// Random-binary population: each neuron responds with rate B to K distinct
/// stimuli sampled without replacement from its own substream of `seed`.
pub fn build_random_binary_population(
    n: usize,
    k: usize,
    b: f64,
    space: &StimulusSpace,
    seed: u64,
) -> Result<PoissonPopulation> {
    let m = space.len();
    if k > m {
        return Err(Error::Config(format!("support size K={k} exceeds M={m}")));
    }
    if n == 0 {
        return Err(Error::Config("N must be >= 1".into()));
    }
    let tunings: Vec<TuningFunction> = (0..n)
        .map(|neuron| {
            let support = sample_support(m, k, seed, neuron as u64);
            TuningFunction::RandomBinary { support, amplitude: b }
        })
        .collect();
    PoissonPopulation::from_tunings(&tunings, space.clone())
}

/// Partial Fisher-Yates: first K entries of a seeded shuffle of 0..M.
fn sample_support(m: usize, k: usize, seed: u64, neuron: u64) -> Vec<usize> {
    let mut rng = substream(seed, DOMAIN_POPULATION, neuron);
    let mut indices: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = i + rng.random_range(0..m - i);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}
