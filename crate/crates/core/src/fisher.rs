//! Continuous-stimulus asymptotics from Fisher information and prior
//! curvature on a quadrature grid.

use crate::error::{Error, Result};

/// Evaluators for J(x), P(x) and p(x) over an explicit quadrature grid.
///
/// Matrices are K x K row-major. The grid carries positive weights and the
/// weighted density must integrate to 1 within 1e-6.
pub struct CurvatureField {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    fisher: Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>,
    prior_curvature: Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>,
    prior_density: Box<dyn Fn(&[f64]) -> f64 + Sync>,
}

impl CurvatureField {
    pub fn new(
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        fisher: impl Fn(&[f64]) -> Vec<f64> + Sync + 'static,
        prior_curvature: impl Fn(&[f64]) -> Vec<f64> + Sync + 'static,
        prior_density: impl Fn(&[f64]) -> f64 + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() != weights.len() {
            return Err(Error::Config("grid points and weights must match and be non-empty".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Config("grid point dimension mismatch".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("quadrature weights must be positive".into()));
        }
        let field = Self {
            dim,
            points,
            weights,
            fisher: Box::new(fisher),
            prior_curvature: Box::new(prior_curvature),
            prior_density: Box::new(prior_density),
        };
        let mass = field.total_mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "quadrature density integrates to {mass}, not 1"
            )));
        }
        Ok(field)
    }

    /// 1-D field on a uniform grid with trapezoidal weights.
    pub fn new_1d(
        lo: f64,
        hi: f64,
        steps: usize,
        fisher: impl Fn(f64) -> f64 + Sync + 'static,
        prior_curvature: impl Fn(f64) -> f64 + Sync + 'static,
        prior_density: impl Fn(f64) -> f64 + Sync + 'static,
    ) -> Result<Self> {
        if !(hi > lo) || steps < 2 {
            return Err(Error::Config("grid requires hi > lo and at least 2 steps".into()));
        }
        let dx = (hi - lo) / ((steps - 1) as f64);
        let points: Vec<Vec<f64>> =
            (0..steps).map(|i| vec![lo + (i as f64) * dx]).collect();
        let weights: Vec<f64> = (0..steps)
            .map(|i| if i == 0 || i == steps - 1 { 0.5 * dx } else { dx })
            .collect();
        Self::new(
            1,
            points,
            weights,
            move |x| vec![fisher(x[0])],
            move |x| vec![prior_curvature(x[0])],
            move |x| prior_density(x[0]),
        )
    }

    /// 1-D linear-Gaussian test model: x ~ N(0, sigma^2), n_obs observations
    /// with noise variance noise_var, so J = n_obs/noise_var is constant and
    /// P = 1/sigma^2. The exact channel MI is (1/2) ln(1 + n sigma^2/noise_var).
    pub fn linear_gaussian(
        sigma: f64,
        n_obs: f64,
        noise_var: f64,
        half_width_sigmas: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(sigma > 0.0) || !(noise_var > 0.0) || !(n_obs > 0.0) {
            return Err(Error::Config("sigma, noise_var and n_obs must be positive".into()));
        }
        let lim = half_width_sigmas * sigma;
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let inv_var = 1.0 / (sigma * sigma);
        Self::new_1d(
            -lim,
            lim,
            steps,
            move |_| n_obs / noise_var,
            move |_| inv_var,
            move |x| norm * (-x * x * inv_var / 2.0).exp(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().map(|p| p.as_slice()).zip(self.weights.iter().copied())
    }

    fn total_mass(&self) -> f64 {
        self.grid().map(|(x, w)| w * (self.prior_density)(x)).sum()
    }

    /// Differential entropy -sum w p ln p over the grid.
    pub fn entropy(&self) -> f64 {
        self.grid()
            .map(|(x, w)| {
                let p = (self.prior_density)(x);
                if p > 0.0 {
                    -w * p * p.ln()
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn g_at(&self, x: &[f64]) -> Vec<f64> {
        let j = (self.fisher)(x);
        let p = (self.prior_curvature)(x);
        j.iter().zip(&p).map(|(a, b)| a + b).collect()
    }
}

/// ln det of a symmetric positive-definite matrix via Cholesky; None when
/// the matrix is not positive definite.
pub fn ln_det_spd(mat: &[f64], k: usize) -> Option<f64> {
    debug_assert_eq!(mat.len(), k * k);
    let mut l = vec![0.0; k * k];
    let mut ln_det = 0.0;
    for i in 0..k {
        for j in 0..=i {
            let mut sum = mat[i * k + j];
            for t in 0..j {
                sum -= l[i * k + t] * l[j * k + t];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                let d = sum.sqrt();
                l[i * k + i] = d;
                ln_det += 2.0 * d.ln();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    Some(ln_det)
}

fn expectation_half_ln_det(
    field: &CurvatureField,
    matrix_at: impl Fn(&[f64]) -> Vec<f64>,
    offset: f64,
) -> Result<f64> {
    let k = field.dim();
    let mut total = 0.0;
    for (index, (x, w)) in field.grid().enumerate() {
        let p = (field.prior_density)(x);
        if p == 0.0 {
            continue;
        }
        let mat = matrix_at(x);
        let ln_det = ln_det_spd(&mat, k)
            .ok_or_else(|| Error::SingularCurvature { index, point: x.to_vec() })?;
        total += 0.5 * w * p * (ln_det + offset);
    }
    Ok(total + field.entropy())
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// I_G = (1/2) < ln det(G(x)/(2 pi e)) > + H(X) with G = J + P.
pub fn i_g(field: &CurvatureField) -> Result<f64> {
    let k = field.dim() as f64;
    expectation_half_ln_det(field, |x| field.g_at(x), -k * (TWO_PI * std::f64::consts::E).ln())
}

/// I_F: as I_G with J alone in place of G.
pub fn i_f(field: &CurvatureField) -> Result<f64> {
    let k = field.dim() as f64;
    expectation_half_ln_det(field, |x| (field.fisher)(x), -k * (TWO_PI * std::f64::consts::E).ln())
}

/// I_gamma = (1/2) < ln det(gamma G(x)/(2 pi)) > + H(X), gamma = beta(1-beta).
pub fn i_gamma(field: &CurvatureField, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} outside (0, 1)")));
    }
    let gamma = beta * (1.0 - beta);
    let k = field.dim() as f64;
    expectation_half_ln_det(field, |x| field.g_at(x), k * (gamma.ln() - TWO_PI.ln()))
}

/// Pointwise 1-D Poisson Fisher information J(x) = sum_n f'_n(x)^2 / f_n(x).
///
/// `rates[n][i]` and `derivs[n][i]` are the tuning value and derivative of
/// neuron n at grid point i. Zero-rate, zero-derivative points contribute 0;
/// a zero rate with a nonzero derivative is singular.
pub fn poisson_fisher_1d(
    rates: &[Vec<f64>],
    derivs: &[Vec<f64>],
    grid: &[f64],
) -> Result<Vec<f64>> {
    if rates.len() != derivs.len() {
        return Err(Error::SizeMismatch("rates and derivs differ in neuron count".into()));
    }
    if rates.iter().chain(derivs.iter()).any(|v| v.len() != grid.len()) {
        return Err(Error::SizeMismatch("tuning tables do not match the grid".into()));
    }
    let mut j = vec![0.0; grid.len()];
    for (n, (f, fp)) in rates.iter().zip(derivs).enumerate() {
        for i in 0..grid.len() {
            if f[i] == 0.0 {
                if fp[i] != 0.0 {
                    return Err(Error::Domain(format!(
                        "neuron {n} has zero rate but nonzero derivative at x = {}",
                        grid[i]
                    )));
                }
            } else {
                j[i] += fp[i] * fp[i] / f[i];
            }
        }
    }
    Ok(j)
}
