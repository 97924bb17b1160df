//! Closed-form mutual-information approximations and bounds for discrete
//! stimulus spaces.
//!
//! All metrics share the shape -sum_m p_m ln(inner_m) + H(X), where the
//! inner sum runs either over all stimuli or only over the neighbor set of
//! m, with exponent D, e^-1 D, or beta*D_beta.

use serde::Serialize;

use crate::divergence::{chernoff_information, DivergenceKind, DivergenceMatrix};
use crate::error::{Error, Result};
use crate::stimulus::{entropy, nats_to_bits, PoissonPopulation};

/// Divergences at or below this are treated as structural zeros (aliases).
pub const ZERO_TOL: f64 = 1e-12;
/// Relative tolerance for nearest-divergence ties.
pub const TIE_TOL: f64 = 1e-9;

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Alias, nearest and combined neighbor sets per stimulus, tagged with the
/// divergence kind they were built from.
#[derive(Debug, Clone)]
pub struct NeighborSets {
    kind: DivergenceKind,
    size: usize,
    /// M̂_m: indices with (near-)zero divergence from m.
    pub aliases: Vec<Vec<usize>>,
    /// M̌_m: non-alias minimizers of the divergence from m.
    pub nearest: Vec<Vec<usize>>,
    /// M_m = (M̌_m ∪ M̂_m) - {m}.
    pub combined: Vec<Vec<usize>>,
}

impl NeighborSets {
    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Build neighbor sets from a divergence matrix. Aliases are entries at or
/// below `zero_tol`; the nearest set collects all finite non-alias entries
/// within relative `tie_tol` of the minimum.
pub fn neighbor_sets(div: &DivergenceMatrix, zero_tol: f64, tie_tol: f64) -> Result<NeighborSets> {
    if !(zero_tol > 0.0) || !(tie_tol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    let size = div.size();
    let mut aliases = Vec::with_capacity(size);
    let mut nearest = Vec::with_capacity(size);
    let mut combined = Vec::with_capacity(size);
    for m in 0..size {
        let row = div.row(m);
        let mut alias = Vec::new();
        let mut min = f64::INFINITY;
        for (m_hat, &d) in row.iter().enumerate() {
            if m_hat == m {
                continue;
            }
            if d <= zero_tol {
                alias.push(m_hat);
            } else if d < min {
                min = d;
            }
        }
        let mut near = Vec::new();
        if min.is_finite() {
            let cutoff = min * (1.0 + tie_tol);
            for (m_hat, &d) in row.iter().enumerate() {
                if m_hat != m && d > zero_tol && d <= cutoff {
                    near.push(m_hat);
                }
            }
        }
        let mut all: Vec<usize> = alias.iter().chain(near.iter()).copied().collect();
        all.sort_unstable();
        aliases.push(alias);
        nearest.push(near);
        combined.push(all);
    }
    Ok(NeighborSets { kind: div.kind(), size, aliases, nearest, combined })
}

fn validate_prior(div: &DivergenceMatrix, prior: &[f64]) -> Result<f64> {
    if prior.len() != div.size() {
        return Err(Error::SizeMismatch(format!(
            "prior has {} entries, divergence matrix is {}x{}",
            prior.len(),
            div.size(),
            div.size()
        )));
    }
    entropy(prior)
}

fn require_kl(div: &DivergenceMatrix) -> Result<()> {
    if div.kind() != DivergenceKind::Kl {
        return Err(Error::Domain(format!(
            "expected a KL divergence matrix, got {:?}",
            div.kind()
        )));
    }
    Ok(())
}

/// The stored exponent is already beta*D_beta for Chernoff-family matrices.
fn exponent_beta(div: &DivergenceMatrix) -> Result<f64> {
    match div.kind() {
        DivergenceKind::ChernoffCoefficient { beta } => Ok(beta),
        DivergenceKind::Bhattacharyya => Ok(0.5),
        other => Err(Error::Domain(format!(
            "expected a Chernoff-exponent matrix, got {other:?}"
        ))),
    }
}

/// -sum_m p_m ln( sum_m̂ (p_m̂/p_m)^alpha exp(-scale * D) ) + H(X).
///
/// Exponents are <= 0 and the m̂ = m term is exactly 1, so the inner sum is
/// accumulated in linear space.
fn unrestricted_sum(div: &DivergenceMatrix, prior: &[f64], scale: f64, alpha: f64) -> f64 {
    let h = entropy(prior).expect("validated by caller");
    let size = div.size();
    let mut total = 0.0;
    for m in 0..size {
        let row = div.row(m);
        let mut inner = 0.0;
        for m_hat in 0..size {
            let d = row[m_hat];
            if d.is_infinite() {
                continue; // exp(-inf) = 0
            }
            let ratio = if alpha == 1.0 {
                prior[m_hat] / prior[m]
            } else {
                (prior[m_hat] / prior[m]).powf(alpha)
            };
            inner += ratio * (-scale * d).exp();
        }
        total -= prior[m] * inner.ln();
    }
    total + h
}

/// Restricted analogue: 1 + sum over the combined neighbor set only,
/// optionally dropping the prior ratio (the I_D family).
fn restricted_sum(
    div: &DivergenceMatrix,
    sets: &NeighborSets,
    prior: &[f64],
    scale: f64,
    alpha: f64,
    with_ratio: bool,
) -> f64 {
    let h = entropy(prior).expect("validated by caller");
    let mut total = 0.0;
    for m in 0..div.size() {
        let row = div.row(m);
        let mut inner = 1.0;
        for &m_hat in &sets.combined[m] {
            let d = row[m_hat];
            if d.is_infinite() {
                continue;
            }
            let ratio = if !with_ratio {
                1.0
            } else if alpha == 1.0 {
                prior[m_hat] / prior[m]
            } else {
                (prior[m_hat] / prior[m]).powf(alpha)
            };
            inner += ratio * (-scale * d).exp();
        }
        total -= prior[m] * inner.ln();
    }
    total + h
}

fn validate_sets(div: &DivergenceMatrix, sets: &NeighborSets) -> Result<()> {
    if sets.size() != div.size() {
        return Err(Error::SizeMismatch("neighbor sets built for a different M".into()));
    }
    if sets.kind() != div.kind() {
        return Err(Error::Domain(format!(
            "neighbor sets built from {:?}, matrix is {:?}",
            sets.kind(),
            div.kind()
        )));
    }
    Ok(())
}

/// Upper bound I_u: unrestricted sum with exponent D.
pub fn i_u(div_kl: &DivergenceMatrix, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_prior(div_kl, prior)?;
    Ok(unrestricted_sum(div_kl, prior, 1.0, 1.0))
}

/// Approximation I_e: unrestricted sum with exponent e^-1 D.
pub fn i_e(div_kl: &DivergenceMatrix, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_prior(div_kl, prior)?;
    Ok(unrestricted_sum(div_kl, prior, INV_E, 1.0))
}

/// Lower bound I_{beta,alpha}: unrestricted sum with exponent beta*D_beta
/// and prior-ratio power alpha.
pub fn i_beta_alpha(div_chernoff: &DivergenceMatrix, prior: &[f64], alpha: f64) -> Result<f64> {
    exponent_beta(div_chernoff)?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    validate_prior(div_chernoff, prior)?;
    Ok(unrestricted_sum(div_chernoff, prior, 1.0, alpha))
}

/// Restricted approximation I_d: neighbor sum with exponent e^-1 D.
pub fn i_d(div_kl: &DivergenceMatrix, sets: &NeighborSets, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_sets(div_kl, sets)?;
    validate_prior(div_kl, prior)?;
    Ok(restricted_sum(div_kl, sets, prior, INV_E, 1.0, true))
}

/// Restricted upper bound I_u^d: neighbor sum with unscaled exponent D.
pub fn i_u_d(div_kl: &DivergenceMatrix, sets: &NeighborSets, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_sets(div_kl, sets)?;
    validate_prior(div_kl, prior)?;
    Ok(restricted_sum(div_kl, sets, prior, 1.0, 1.0, true))
}

/// Restricted lower bound I_{beta,alpha}^d over the beta-neighbor sets.
pub fn i_beta_alpha_d(
    div_chernoff: &DivergenceMatrix,
    sets: &NeighborSets,
    prior: &[f64],
    alpha: f64,
) -> Result<f64> {
    exponent_beta(div_chernoff)?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    validate_sets(div_chernoff, sets)?;
    validate_prior(div_chernoff, prior)?;
    Ok(restricted_sum(div_chernoff, sets, prior, 1.0, alpha, true))
}

/// I_D: as I_d but without the prior ratio inside the sum.
pub fn i_big_d(div_kl: &DivergenceMatrix, sets: &NeighborSets, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_sets(div_kl, sets)?;
    validate_prior(div_kl, prior)?;
    Ok(restricted_sum(div_kl, sets, prior, INV_E, 1.0, false))
}

/// First-order Taylor form I_D^0 = -sum_m p_m sum_neighbors exp(-e^-1 D) + H(X).
pub fn i_big_d0(div_kl: &DivergenceMatrix, sets: &NeighborSets, prior: &[f64]) -> Result<f64> {
    require_kl(div_kl)?;
    validate_sets(div_kl, sets)?;
    let h = validate_prior(div_kl, prior)?;
    let mut total = 0.0;
    for m in 0..div_kl.size() {
        let row = div_kl.row(m);
        let inner: f64 = sets.combined[m]
            .iter()
            .map(|&m_hat| row[m_hat])
            .filter(|d| d.is_finite())
            .map(|d| (-INV_E * d).exp())
            .sum();
        total -= prior[m] * inner;
    }
    Ok(total + h)
}

/// Chernoff-information bound h_c + H(X): unrestricted sum with exponent
/// C(x_m||x_m̂), each C found by ternary search to within `tol`.
pub fn h_c_bound(pop: &PoissonPopulation, prior: &[f64], tol: f64) -> Result<f64> {
    let size = pop.num_stimuli();
    if prior.len() != size {
        return Err(Error::SizeMismatch("prior does not match population".into()));
    }
    let h = entropy(prior)?;
    let mut total = 0.0;
    for m in 0..size {
        let mut inner = 0.0;
        for m_hat in 0..size {
            let c = if m == m_hat {
                0.0
            } else {
                chernoff_information(pop, m, m_hat, tol)?.value
            };
            if c.is_infinite() {
                continue;
            }
            inner += prior[m_hat] / prior[m] * (-c).exp();
        }
        total -= prior[m] * inner.ln();
    }
    Ok(total + h)
}

/// Readings of the h_d exponent "beta_m D_beta": pairing the per-pair
/// maximizing beta_m with a divergence of unspecified order is ambiguous,
/// so the caller must pick a reading explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HdInterpretation {
    /// beta_m D_{beta_m} = C(x_m||x_m̂); h_d coincides with h_c.
    ChernoffExponent,
    /// beta_m multiplied by D_beta at a caller-fixed order beta.
    FixedOrder { beta: f64 },
}

/// h_d + H(X) under an explicit reading of its exponent. No ordering
/// relative to h_c is asserted or implied.
pub fn h_d_bound(
    pop: &PoissonPopulation,
    prior: &[f64],
    tol: f64,
    interpretation: HdInterpretation,
) -> Result<f64> {
    match interpretation {
        HdInterpretation::ChernoffExponent => h_c_bound(pop, prior, tol),
        HdInterpretation::FixedOrder { beta } => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Domain(format!("beta = {beta} outside (0, 1)")));
            }
            let size = pop.num_stimuli();
            if prior.len() != size {
                return Err(Error::SizeMismatch("prior does not match population".into()));
            }
            let h = entropy(prior)?;
            let mut total = 0.0;
            for m in 0..size {
                let mut inner = 0.0;
                for m_hat in 0..size {
                    let exponent = if m == m_hat {
                        0.0
                    } else {
                        let info = chernoff_information(pop, m, m_hat, tol)?;
                        match info.beta {
                            // beta_m * D_beta = beta_m / beta * (beta*D_beta)
                            Some(beta_m) => {
                                beta_m / beta
                                    * crate::divergence::chernoff_exponent_pair(
                                        pop, m, m_hat, beta,
                                    )
                            }
                            None => f64::INFINITY,
                        }
                    };
                    if exponent.is_infinite() {
                        continue;
                    }
                    inner += prior[m_hat] / prior[m] * (-exponent).exp();
                }
                total -= prior[m] * inner.ln();
            }
            Ok(total + h)
        }
    }
}

/// A metric value in both units.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricValue {
    pub nats: f64,
    pub bits: f64,
}

/// Named metric values plus the configuration fingerprint that produced
/// them; insertion order is preserved for serialization.
#[derive(Debug, Clone)]
pub struct MetricReport {
    entries: Vec<(String, MetricValue)>,
    pub fingerprint: String,
}

impl MetricReport {
    pub fn new(fingerprint: impl Into<String>) -> Self {
        Self { entries: Vec::new(), fingerprint: fingerprint.into() }
    }

    /// Stored values must be finite.
    pub fn insert(&mut self, name: impl Into<String>, nats: f64) -> Result<()> {
        let name = name.into();
        if !nats.is_finite() {
            return Err(Error::NonFiniteOutput(name));
        }
        self.entries.push((name, MetricValue { nats, bits: nats_to_bits(nats) }));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<MetricValue> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(String, MetricValue)] {
        &self.entries
    }

    /// JSON object: metric name -> { nats, bits }, plus the fingerprint.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (name, value) in &self.entries {
            map.insert(name.clone(), serde_json::json!({ "nats": value.nats, "bits": value.bits }));
        }
        serde_json::json!({ "fingerprint": self.fingerprint, "metrics": map })
    }
}
