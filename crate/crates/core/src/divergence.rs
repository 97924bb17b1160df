//! Pairwise divergences between conditional response distributions.
//!
//! For conditionally independent Poisson neurons both the Kullback-Leibler
//! divergence and the Chernoff exponent have closed forms in the rate
//! matrix; `brute_force_divergence` sums the defining series over a
//! truncated response space and is the validation oracle for both.

use std::io::Write;

use crate::error::{Error, Result};
use crate::stimulus::PoissonPopulation;

/// Which divergence a matrix holds. `ChernoffCoefficient` stores the
/// exponent beta * D_beta, the quantity consumed by the information metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl,
    ChernoffCoefficient { beta: f64 },
    Bhattacharyya,
    ChernoffInformation,
}

/// M x M matrix of pairwise divergences in nats; +inf is representable.
#[derive(Debug, Clone)]
pub struct DivergenceMatrix {
    kind: DivergenceKind,
    size: usize,
    entries: Vec<f64>,
}

impl DivergenceMatrix {
    pub fn from_entries(kind: DivergenceKind, size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::SizeMismatch(format!(
                "{} entries for a {size}x{size} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|&d| d < 0.0 || d.is_nan()) {
            return Err(Error::Domain("divergences must be >= 0 and not NaN".into()));
        }
        Ok(Self { kind, size, entries })
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, m: usize, m_hat: usize) -> f64 {
        self.entries[m * self.size + m_hat]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.size..(m + 1) * self.size]
    }

    /// Row-major CSV dump; +inf entries are written as the literal `inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for m in 0..self.size {
            let row: Vec<String> = self
                .row(m)
                .iter()
                .map(|&d| if d.is_infinite() { "inf".to_string() } else { format!("{d}") })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// KL divergence between the Poisson response distributions of a stimulus
/// pair: sum over neurons of lam ln(lam/lam') + lam' - lam, with a +inf
/// term whenever lam > 0 and lam' = 0.
pub fn kl_pair(pop: &PoissonPopulation, m: usize, m_hat: usize) -> f64 {
    let mut total = 0.0;
    for n in 0..pop.num_neurons() {
        let lam = pop.rate(n, m);
        let lam_hat = pop.rate(n, m_hat);
        total += kl_term(lam, lam_hat);
        if total.is_infinite() {
            return f64::INFINITY;
        }
    }
    total
}

#[inline]
fn kl_term(lam: f64, lam_hat: f64) -> f64 {
    if lam == 0.0 {
        lam_hat
    } else if lam_hat == 0.0 {
        f64::INFINITY
    } else {
        lam * (lam / lam_hat).ln() + lam_hat - lam
    }
}

/// Chernoff exponent beta*D_beta between the Poisson response distributions
/// of a stimulus pair: sum over neurons of
/// (1-beta) lam + beta lam' - lam^(1-beta) lam'^beta.
pub fn chernoff_exponent_pair(pop: &PoissonPopulation, m: usize, m_hat: usize, beta: f64) -> f64 {
    let mut total = 0.0;
    for n in 0..pop.num_neurons() {
        let lam = pop.rate(n, m);
        let lam_hat = pop.rate(n, m_hat);
        total += chernoff_term(lam, lam_hat, beta);
    }
    total
}

#[inline]
fn chernoff_term(lam: f64, lam_hat: f64, beta: f64) -> f64 {
    // 0^c = 0 for c > 0, so the cross term vanishes when either rate is 0.
    let cross = if lam == 0.0 || lam_hat == 0.0 {
        0.0
    } else {
        lam.powf(1.0 - beta) * lam_hat.powf(beta)
    };
    (1.0 - beta) * lam + beta * lam_hat - cross
}

fn fill_matrix(
    pop: &PoissonPopulation,
    kind: DivergenceKind,
    pair: impl Fn(usize, usize, &[usize], &[usize]) -> f64,
) -> DivergenceMatrix {
    let m = pop.num_stimuli();
    let supports = pop.column_supports();
    let mut entries = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            entries[a * m + b] = pair(a, b, &supports[a], &supports[b]);
        }
    }
    DivergenceMatrix { kind, size: m, entries }
}

/// Merge two sorted support lists, applying `term` at every neuron where at
/// least one of the pair has a nonzero rate.
fn sum_over_union(
    support_a: &[usize],
    support_b: &[usize],
    mut term: impl FnMut(usize) -> f64,
) -> f64 {
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < support_a.len() || j < support_b.len() {
        let n = match (support_a.get(i), support_b.get(j)) {
            (Some(&a), Some(&b)) => {
                if a <= b {
                    if a == b {
                        j += 1;
                    }
                    i += 1;
                    a
                } else {
                    j += 1;
                    b
                }
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (None, Some(&b)) => {
                j += 1;
                b
            }
            (None, None) => unreachable!(),
        };
        total += term(n);
        if total.is_infinite() {
            return f64::INFINITY;
        }
    }
    total
}

/// Pairwise KL matrix D(x_m || x_m̂) for an independent Poisson population.
pub fn kl_matrix(pop: &PoissonPopulation) -> DivergenceMatrix {
    fill_matrix(pop, DivergenceKind::Kl, |a, b, sa, sb| {
        sum_over_union(sa, sb, |n| kl_term(pop.rate(n, a), pop.rate(n, b)))
    })
}

/// Pairwise Chernoff exponent matrix beta*D_beta, beta strictly in (0, 1).
pub fn chernoff_coefficient_matrix(pop: &PoissonPopulation, beta: f64) -> Result<DivergenceMatrix> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} outside (0, 1)")));
    }
    Ok(fill_matrix(
        pop,
        DivergenceKind::ChernoffCoefficient { beta },
        |a, b, sa, sb| {
            // Negative rounding residue can appear for near-identical columns.
            sum_over_union(sa, sb, |n| chernoff_term(pop.rate(n, a), pop.rate(n, b), beta)).max(0.0)
        },
    ))
}

/// Bhattacharyya distance matrix: the Chernoff exponent at beta = 1/2.
pub fn bhattacharyya_matrix(pop: &PoissonPopulation) -> DivergenceMatrix {
    let mut mat = chernoff_coefficient_matrix(pop, 0.5).expect("0.5 is inside (0, 1)");
    mat.kind = DivergenceKind::Bhattacharyya;
    mat
}

/// Squared Hellinger distance H_l^2 = 1 - exp(-beta_0 D_beta_0), beta_0 = 1/2.
pub fn hellinger_sq(pop: &PoissonPopulation, m: usize, m_hat: usize) -> f64 {
    if m == m_hat {
        return 0.0;
    }
    1.0 - (-chernoff_exponent_pair(pop, m, m_hat, 0.5)).exp()
}

/// Search interval clamp for the Chernoff information maximizer; the
/// supremum can sit on the open boundary for disjoint supports.
pub const CHERNOFF_BETA_MIN: f64 = 1e-6;
pub const CHERNOFF_BETA_MAX: f64 = 1.0 - 1e-6;

/// Result of the Chernoff information search.
#[derive(Debug, Clone, Copy)]
pub struct ChernoffInfo {
    /// max over beta of beta*D_beta, in nats.
    pub value: f64,
    /// Maximizing beta; `None` when the exponent was non-finite everywhere.
    pub beta: Option<f64>,
    /// True when the maximizer sits on the clamped interval boundary.
    pub clamped: bool,
}

/// Chernoff information C(x_m || x_m̂): ternary search of the concave
/// exponent beta -> beta*D_beta over the clamped interval, to within `tol`
/// of the true argmax.
pub fn chernoff_information(
    pop: &PoissonPopulation,
    m: usize,
    m_hat: usize,
    tol: f64,
) -> Result<ChernoffInfo> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    if m >= pop.num_stimuli() || m_hat >= pop.num_stimuli() {
        return Err(Error::Domain("stimulus index out of range".into()));
    }
    let g = |beta: f64| chernoff_exponent_pair(pop, m, m_hat, beta);
    if !g(0.5).is_finite() {
        return Ok(ChernoffInfo { value: f64::INFINITY, beta: None, clamped: false });
    }
    let (mut lo, mut hi) = (CHERNOFF_BETA_MIN, CHERNOFF_BETA_MAX);
    while hi - lo > tol {
        let third = (hi - lo) / 3.0;
        let (b1, b2) = (lo + third, hi - third);
        if g(b1) < g(b2) {
            lo = b1;
        } else {
            hi = b2;
        }
    }
    let beta = 0.5 * (lo + hi);
    let clamped = beta - CHERNOFF_BETA_MIN < tol || CHERNOFF_BETA_MAX - beta < tol;
    Ok(ChernoffInfo { value: g(beta), beta: Some(beta), clamped })
}

/// Truncated Poisson pmf table for rate `lambda`: entries 0..=r_max where
/// r_max is the smallest cut with tail mass below `tail_tol`.
pub fn truncated_poisson_pmf(lambda: f64, tail_tol: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let mut pmf = vec![(-lambda).exp()];
    let mut cdf = pmf[0];
    let mut r = 0usize;
    while 1.0 - cdf >= tail_tol {
        r += 1;
        let next = pmf[r - 1] * lambda / (r as f64);
        // Stop once terms no longer move the cdf; a tolerance below f64
        // resolution would otherwise grow the table forever.
        if next < f64::EPSILON * cdf && r as f64 > lambda {
            pmf.push(next);
            break;
        }
        pmf.push(next);
        cdf += next;
    }
    pmf
}

/// Product pmf over the response vectors of up to a few independent Poisson
/// neurons, truncated per neuron so each factor's tail mass is below
/// `tail_tol` for the larger of the two rates being compared.
pub fn poisson_product_pmfs(
    rates_p: &[f64],
    rates_q: &[f64],
    tail_tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rates_p.len() != rates_q.len() {
        return Err(Error::SizeMismatch("rate vectors differ in length".into()));
    }
    let tables: Vec<(Vec<f64>, Vec<f64>)> = rates_p
        .iter()
        .zip(rates_q)
        .map(|(&a, &b)| {
            let r_max = truncated_poisson_pmf(a.max(b), tail_tol).len();
            let pad = |lambda: f64| {
                let mut t = truncated_poisson_pmf(lambda, tail_tol);
                t.resize(r_max, 0.0);
                // recompute exactly on the shared support
                if lambda > 0.0 {
                    t[0] = (-lambda).exp();
                    for r in 1..r_max {
                        t[r] = t[r - 1] * lambda / (r as f64);
                    }
                }
                t
            };
            (pad(a), pad(b))
        })
        .collect();
    let mut p = vec![1.0];
    let mut q = vec![1.0];
    for (tp, tq) in &tables {
        let mut next_p = Vec::with_capacity(p.len() * tp.len());
        let mut next_q = Vec::with_capacity(q.len() * tq.len());
        for (&pp, &qq) in p.iter().zip(&q) {
            for (&a, &b) in tp.iter().zip(tq) {
                next_p.push(pp * a);
                next_q.push(qq * b);
            }
        }
        p = next_p;
        q = next_q;
    }
    Ok((p, q))
}

/// Divergences computable by `brute_force_divergence`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BruteForceKind {
    Kl,
    /// beta * D_beta = -ln sum p^(1-beta) q^beta.
    ChernoffExponent { beta: f64 },
}

/// Direct summation of the divergence definition over two explicit pmfs on
/// a common finite support. Validation oracle for the closed forms above.
pub fn brute_force_divergence(pmf_p: &[f64], pmf_q: &[f64], kind: BruteForceKind) -> Result<f64> {
    if pmf_p.len() != pmf_q.len() {
        return Err(Error::SizeMismatch("pmf supports differ in size".into()));
    }
    match kind {
        BruteForceKind::Kl => {
            let mut total = 0.0;
            for (&p, &q) in pmf_p.iter().zip(pmf_q) {
                if p == 0.0 {
                    continue;
                }
                if q == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += p * (p / q).ln();
            }
            Ok(total)
        }
        BruteForceKind::ChernoffExponent { beta } => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Domain(format!("beta = {beta} outside (0, 1)")));
            }
            let sum: f64 = pmf_p
                .iter()
                .zip(pmf_q)
                .filter(|(&p, &q)| p > 0.0 && q > 0.0)
                .map(|(&p, &q)| p.powf(1.0 - beta) * q.powf(beta))
                .sum();
            Ok(-sum.ln().min(0.0))
        }
    }
}
