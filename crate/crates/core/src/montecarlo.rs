//! Ground-truth estimation: Monte-Carlo mutual information with bootstrap
//! standard deviation, plus an exact enumeration oracle for tiny instances.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::stimulus::PoissonPopulation;
use crate::rng::{substream, DOMAIN_BOOTSTRAP, DOMAIN_MC_SAMPLES};

/// Monte-Carlo configuration.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct McConfig {
    pub j_max: usize,
    pub i_max: usize,
    pub seed: u64,
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.j_max == 0 || self.i_max == 0 {
            return Err(Error::Config("j_max and i_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate with bootstrap spread.
#[derive(Debug, Clone)]
pub struct McEstimate {
    /// Plain sample mean of the per-sample information terms.
    pub i_mc_star: f64,
    /// Mean of the bootstrap replicate means.
    pub i_mc: f64,
    /// Population standard deviation of the replicate means.
    pub i_std: f64,
    /// Per-sample terms, retained for bootstrapping; length j_max.
    pub terms: Vec<f64>,
    pub seed: u64,
}

/// Poisson sampler: sequential-search inversion for small means, rejection
/// sampling (via rand_distr) above.
fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        let mut r = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let u: f64 = rng.random();
        while u > cdf {
            r += 1;
            p *= lambda / (r as f64);
            cdf += p;
            if r > 1_000 {
                break; // u in the far tail beyond f64 resolution
            }
        }
        r
    } else {
        let dist = rand_distr::Poisson::new(lambda).expect("validated positive rate");
        dist.sample(rng) as u64
    }
}

/// Per-stimulus tables used to evaluate ln p(r|x_m) quickly. The common
/// -sum ln r! term cancels between numerator and mixture, so it is dropped.
struct LogLikelihoodTables {
    /// ln rate, M x N row-major; -inf where the rate is 0.
    ln_rates: Vec<f64>,
    /// Total rate per stimulus.
    rate_sums: Vec<f64>,
    n: usize,
}

impl LogLikelihoodTables {
    fn new(pop: &PoissonPopulation) -> Self {
        let (n, m) = (pop.num_neurons(), pop.num_stimuli());
        let mut ln_rates = vec![f64::NEG_INFINITY; m * n];
        let mut rate_sums = vec![0.0; m];
        for stim in 0..m {
            for neuron in 0..n {
                let rate = pop.rate(neuron, stim);
                if rate > 0.0 {
                    ln_rates[stim * n + neuron] = rate.ln();
                }
                rate_sums[stim] += rate;
            }
        }
        Self { ln_rates, rate_sums, n }
    }

    /// ln p(r|x_m) up to the dropped -sum ln r! constant, for a sparse
    /// response given as (neuron, count) pairs with count > 0.
    #[inline]
    fn log_likelihood(&self, stim: usize, response: &[(usize, u64)]) -> f64 {
        let row = &self.ln_rates[stim * self.n..(stim + 1) * self.n];
        let mut acc = -self.rate_sums[stim];
        for &(neuron, count) in response {
            let l = row[neuron];
            if l == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += (count as f64) * l;
        }
        acc
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Draw j_max (stimulus, response) pairs and return the information terms
/// t_j = ln p(r_j|x_j) - ln p(r_j). Sample j uses substream (seed, j), so
/// the result is independent of evaluation order.
pub fn sample_information_terms(
    pop: &PoissonPopulation,
    prior: &[f64],
    cfg: &McConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = pop.num_stimuli();
    if prior.len() != m {
        return Err(Error::SizeMismatch("prior does not match population".into()));
    }
    let tables = LogLikelihoodTables::new(pop);
    let cdf: Vec<f64> = prior
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut terms = Vec::with_capacity(cfg.j_max);
    let mut response: Vec<(usize, u64)> = Vec::new();
    let mut log_liks = vec![0.0; m];
    for j in 0..cfg.j_max {
        let mut rng = substream(cfg.seed, DOMAIN_MC_SAMPLES, j as u64);
        // stimulus draw by prior inverse-cdf
        let u: f64 = rng.random();
        let stim = cdf.partition_point(|&c| c < u).min(m - 1);
        // Poisson response; zero-rate neurons emit 0 and draw nothing
        response.clear();
        for neuron in 0..pop.num_neurons() {
            let rate = pop.rate(neuron, stim);
            if rate > 0.0 {
                let count = sample_poisson(&mut rng, rate);
                if count > 0 {
                    response.push((neuron, count));
                }
            }
        }
        for (target, ll) in log_liks.iter_mut().enumerate() {
            *ll = tables.log_likelihood(target, &response) + prior[target].ln();
        }
        let ln_marginal = log_sum_exp(&log_liks);
        terms.push(log_liks[stim] - prior[stim].ln() - ln_marginal);
    }
    Ok(terms)
}

/// Full Monte-Carlo estimate with bootstrap standard deviation. Replicate i
/// resamples the cached terms with replacement using substream (seed, i).
pub fn estimate(pop: &PoissonPopulation, prior: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    let terms = sample_information_terms(pop, prior, cfg)?;
    let j_max = terms.len();
    let i_mc_star = terms.iter().sum::<f64>() / j_max as f64;

    let mut replicate_means = Vec::with_capacity(cfg.i_max);
    for i in 0..cfg.i_max {
        let mut rng = substream(cfg.seed, DOMAIN_BOOTSTRAP, i as u64);
        let mut sum = 0.0;
        for _ in 0..j_max {
            sum += terms[rng.random_range(0..j_max)];
        }
        replicate_means.push(sum / j_max as f64);
    }
    let i_mc = replicate_means.iter().sum::<f64>() / cfg.i_max as f64;
    let i_std = (replicate_means.iter().map(|r| (r - i_mc) * (r - i_mc)).sum::<f64>()
        / cfg.i_max as f64)
        .sqrt();
    Ok(McEstimate { i_mc_star, i_mc, i_std, terms, seed: cfg.seed })
}

/// Exact mutual information and the truncation mass it neglected.
#[derive(Debug, Clone, Copy)]
pub struct ExactMi {
    pub value: f64,
    /// Upper bound on the conditional probability mass outside the
    /// enumerated response set, maximized over stimuli.
    pub neglected_tail: f64,
}

/// Enumerate all response vectors over per-neuron truncated Poisson
/// supports and sum the mutual information directly. Guarded to N <= 3 and
/// per-neuron support <= 64.
pub fn exact_mi(pop: &PoissonPopulation, prior: &[f64], tail_tol: f64) -> Result<ExactMi> {
    let (n, m) = (pop.num_neurons(), pop.num_stimuli());
    if prior.len() != m {
        return Err(Error::SizeMismatch("prior does not match population".into()));
    }
    if n > 3 {
        return Err(Error::InstanceTooLarge(format!("N = {n} neurons, oracle allows N <= 3")));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::Domain("tail_tol must be positive".into()));
    }

    // Per-neuron pmf tables over a support shared across stimuli, cut where
    // the largest rate's tail drops below tail_tol.
    let mut tables: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n); // [neuron][stim][r]
    let mut support_sizes = Vec::with_capacity(n);
    for neuron in 0..n {
        let max_rate = (0..m).map(|s| pop.rate(neuron, s)).fold(0.0, f64::max);
        let r_max = crate::divergence::truncated_poisson_pmf(max_rate, tail_tol).len();
        if r_max > 64 {
            return Err(Error::InstanceTooLarge(format!(
                "neuron {neuron} needs a support of {r_max} > 64 counts at rate {max_rate}"
            )));
        }
        support_sizes.push(r_max);
        let per_stim: Vec<Vec<f64>> = (0..m)
            .map(|s| {
                let rate = pop.rate(neuron, s);
                let mut pmf = vec![0.0; r_max];
                pmf[0] = (-rate).exp();
                for r in 1..r_max {
                    pmf[r] = pmf[r - 1] * rate / (r as f64);
                }
                pmf
            })
            .collect();
        tables.push(per_stim);
    }

    let total_states: usize = support_sizes.iter().product();
    let mut info = 0.0;
    let mut covered = vec![0.0; m]; // enumerated conditional mass per stimulus
    let mut cond = vec![0.0; m];
    for state in 0..total_states {
        let mut rest = state;
        cond.iter_mut().for_each(|c| *c = 1.0);
        for neuron in 0..n {
            let r = rest % support_sizes[neuron];
            rest /= support_sizes[neuron];
            for s in 0..m {
                cond[s] *= tables[neuron][s][r];
            }
        }
        let marginal: f64 = cond.iter().zip(prior).map(|(c, p)| c * p).sum();
        for s in 0..m {
            covered[s] += cond[s];
            if cond[s] > 0.0 {
                info += prior[s] * cond[s] * (cond[s] / marginal).ln();
            }
        }
    }
    let neglected_tail = covered.iter().map(|c| 1.0 - c).fold(0.0, f64::max);
    Ok(ExactMi { value: info, neglected_tail })
}

/// Relative error DI = (metric - I_MC)/I_MC and DI_std = I_std/I_MC.
pub fn relative_error(metric_value: f64, mc: &McEstimate) -> Result<(f64, f64)> {
    if mc.i_mc == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    Ok(((metric_value - mc.i_mc) / mc.i_mc, mc.i_std / mc.i_mc))
}
