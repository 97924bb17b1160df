//! Config-driven experiment runner: builds populations over an N sweep,
//! computes the requested metrics and the Monte-Carlo reference, and emits
//! CSV rows plus a JSON sidecar.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::divergence::{
    chernoff_coefficient_matrix, kl_matrix, DivergenceKind, DivergenceMatrix,
};
use crate::error::{Error, Result};
use crate::fisher::{i_f, i_g, i_gamma, poisson_fisher_1d, CurvatureField};
use crate::metrics::{
    h_c_bound, i_beta_alpha, i_beta_alpha_d, i_big_d, i_big_d0, i_d, i_e, i_u, i_u_d,
    neighbor_sets, MetricReport, NeighborSets, TIE_TOL, ZERO_TOL,
};
use crate::montecarlo::{estimate, exact_mi, relative_error, McConfig};
use crate::stimulus::{
    build_heaviside_population, build_random_binary_population, build_relu_population, entropy,
    grid_points, make_prior, nats_to_bits, PoissonPopulation, PriorKind, StimulusSpace,
};

/// Tolerance for the per-pair Chernoff information search in h_c.
const CHERNOFF_SEARCH_TOL: f64 = 1e-9;

/// A full experiment description; unknown JSON keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSpec,
    pub stimulus: StimulusSpec,
    /// Population sizes, strictly increasing.
    pub n_sweep: Vec<usize>,
    pub metrics: Vec<MetricSpec>,
    pub mc: McSpec,
    pub seed: u64,
    /// Optional continuous-stimulus asymptotics computed per N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fisher: Option<FisherSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Heaviside { t: f64, a: f64 },
    RectifiedLinear { t: f64 },
    RandomBinary { k: usize, b: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusSpec {
    pub points: PointsSpec,
    pub prior: PriorSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsSpec {
    /// M points evenly spaced on [-T, T].
    Range { m: usize, t: f64 },
    /// Integer points {1, ..., M}.
    Integers { m: usize },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Uniform,
    Gaussian { sigma: f64 },
    HalfGaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub j_max: usize,
    pub i_max: usize,
}

/// Requestable information metrics; names match the output column prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum MetricSpec {
    #[serde(rename = "I_u")]
    IU,
    #[serde(rename = "I_e")]
    IE,
    #[serde(rename = "I_beta_alpha")]
    IBetaAlpha { beta: f64, alpha: f64 },
    #[serde(rename = "I_d")]
    Id,
    #[serde(rename = "I_u_d")]
    IUd,
    #[serde(rename = "I_beta_alpha_d")]
    IBetaAlphaD { beta: f64, alpha: f64 },
    #[serde(rename = "I_D")]
    IBigD,
    #[serde(rename = "I_D0")]
    IBigD0,
    #[serde(rename = "h_c_plus_H")]
    HcPlusH,
    #[serde(rename = "H_X")]
    HX,
}

impl MetricSpec {
    pub fn column_name(&self) -> String {
        match self {
            MetricSpec::IU => "I_u".into(),
            MetricSpec::IE => "I_e".into(),
            MetricSpec::IBetaAlpha { beta, alpha } => format!("I_beta_alpha({beta},{alpha})"),
            MetricSpec::Id => "I_d".into(),
            MetricSpec::IUd => "I_u_d".into(),
            MetricSpec::IBetaAlphaD { beta, alpha } => {
                format!("I_beta_alpha_d({beta},{alpha})")
            }
            MetricSpec::IBigD => "I_D".into(),
            MetricSpec::IBigD0 => "I_D0".into(),
            MetricSpec::HcPlusH => "h_c_plus_H".into(),
            MetricSpec::HX => "H_X".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherSpec {
    pub model: FisherModelSpec,
    pub grid: GridSpec,
    pub metrics: Vec<FisherMetricSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FisherModelSpec {
    /// x ~ N(0, sigma^2) observed N times with Gaussian noise; the sweep's
    /// N plays the role of the observation count.
    LinearGaussian { sigma: f64, noise_var: f64 },
    /// N Gaussian-bump Poisson tuning curves with centers spread over the
    /// grid and a flat prior on [lo, hi].
    PoissonGaussianBumps { amplitude: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum FisherMetricSpec {
    #[serde(rename = "I_G")]
    IG,
    #[serde(rename = "I_F")]
    IF,
    #[serde(rename = "I_gamma")]
    IGamma { beta: f64 },
}

impl FisherMetricSpec {
    pub fn column_name(&self) -> String {
        match self {
            FisherMetricSpec::IG => "I_G".into(),
            FisherMetricSpec::IF => "I_F".into(),
            FisherMetricSpec::IGamma { beta } => format!("I_gamma({beta})"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweep.is_empty() {
            return Err(Error::Config("n_sweep must be non-empty".into()));
        }
        if self.n_sweep[0] == 0 {
            return Err(Error::Config("n_sweep values must be >= 1".into()));
        }
        if self.n_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_sweep must be strictly increasing".into()));
        }
        if self.mc.j_max == 0 || self.mc.i_max == 0 {
            return Err(Error::Config("mc.j_max and mc.i_max must be >= 1".into()));
        }
        self.build_space()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_space(&self) -> Result<StimulusSpace> {
        let points = match &self.stimulus.points {
            PointsSpec::Range { m, t } => grid_points(*m, *t)?,
            PointsSpec::Integers { m } => (1..=*m).map(|i| i as f64).collect(),
            PointsSpec::Explicit { values } => values.clone(),
        };
        let kind = match self.stimulus.prior {
            PriorSpec::Uniform => PriorKind::Uniform,
            PriorSpec::Gaussian { sigma } => PriorKind::Gaussian { sigma },
            PriorSpec::HalfGaussian { sigma } => PriorKind::HalfGaussian { sigma },
        };
        let prior = make_prior(kind, &points)?;
        StimulusSpace::new(points, prior)
    }

    pub fn build_population(&self, n: usize, space: &StimulusSpace) -> Result<PoissonPopulation> {
        match &self.model {
            ModelSpec::Heaviside { t, a } => build_heaviside_population(n, *t, *a, space),
            ModelSpec::RectifiedLinear { t } => build_relu_population(n, *t, space),
            ModelSpec::RandomBinary { k, b } => {
                build_random_binary_population(n, *k, *b, space, self.seed)
            }
        }
    }

    fn mc_config(&self) -> McConfig {
        McConfig { j_max: self.mc.j_max, i_max: self.mc.i_max, seed: self.seed }
    }
}

/// Built-in experiment presets fig1..fig6.
pub fn preset_names() -> &'static [&'static str] {
    &["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"]
}

/// Default population-size sweep used by the presets.
pub fn default_n_sweep() -> Vec<usize> {
    vec![1, 2, 3, 4, 6, 10, 14, 20, 30, 50, 100, 200, 400, 700, 1000]
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let grid_21 = StimulusSpec {
        points: PointsSpec::Range { m: 21, t: 10.0 },
        prior: PriorSpec::Uniform,
    };
    let gaussian_21 = StimulusSpec {
        points: PointsSpec::Range { m: 21, t: 10.0 },
        prior: PriorSpec::Gaussian { sigma: 5.0 },
    };
    let objects_uniform = StimulusSpec {
        points: PointsSpec::Integers { m: 1000 },
        prior: PriorSpec::Uniform,
    };
    let objects_half_gaussian = StimulusSpec {
        points: PointsSpec::Integers { m: 1000 },
        prior: PriorSpec::HalfGaussian { sigma: 500.0 },
    };
    let (model, stimulus) = match name {
        "fig1" => (ModelSpec::Heaviside { t: 10.0, a: 10.0 }, grid_21),
        "fig2" => (ModelSpec::Heaviside { t: 10.0, a: 10.0 }, gaussian_21),
        "fig3" => (ModelSpec::RectifiedLinear { t: 10.0 }, grid_21),
        "fig4" => (ModelSpec::RectifiedLinear { t: 10.0 }, gaussian_21),
        "fig5" => (ModelSpec::RandomBinary { k: 10, b: 10.0 }, objects_uniform),
        "fig6" => (ModelSpec::RandomBinary { k: 10, b: 10.0 }, objects_half_gaussian),
        other => return Err(Error::Config(format!("unknown preset '{other}'"))),
    };
    Ok(ExperimentConfig {
        name: name.to_string(),
        model,
        stimulus,
        n_sweep: default_n_sweep(),
        metrics: vec![MetricSpec::IE, MetricSpec::Id, MetricSpec::IBigD],
        mc: McSpec { j_max: 100_000, i_max: 100 },
        seed: 20260823,
        fisher: None,
    })
}

/// Result rows with a fixed column order; all values are finite.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        debug_assert_eq!(row.len(), self.columns.len());
        for (column, &value) in self.columns.iter().zip(&row) {
            if !value.is_finite() {
                return Err(Error::NonFiniteOutput(column.clone()));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.rows.get(row).map(|r| r[idx])
    }

    /// Row index for a given N.
    pub fn row_for_n(&self, n: usize) -> Option<usize> {
        self.rows.iter().position(|r| r[0] == n as f64)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(column, &value)| {
                    if column == "N" {
                        format!("{}", value as u64)
                    } else {
                        format!("{value}")
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Everything derived from one KL matrix, shared across metrics.
struct KlContext {
    matrix: DivergenceMatrix,
    sets: NeighborSets,
}

/// Compute the requested metrics for a single population/prior.
pub fn compute_metrics(
    pop: &PoissonPopulation,
    prior: &[f64],
    specs: &[MetricSpec],
    fingerprint: &str,
) -> Result<MetricReport> {
    let needs_kl = specs.iter().any(|s| {
        matches!(
            s,
            MetricSpec::IU
                | MetricSpec::IE
                | MetricSpec::Id
                | MetricSpec::IUd
                | MetricSpec::IBigD
                | MetricSpec::IBigD0
        )
    });
    let kl = if needs_kl {
        let matrix = kl_matrix(pop);
        let sets = neighbor_sets(&matrix, ZERO_TOL, TIE_TOL)?;
        Some(KlContext { matrix, sets })
    } else {
        None
    };

    // One Chernoff-exponent matrix (and neighbor sets when needed) per beta.
    let mut chernoff: BTreeMap<u64, (DivergenceMatrix, Option<NeighborSets>)> = BTreeMap::new();
    for spec in specs {
        match spec {
            MetricSpec::IBetaAlpha { beta, .. } => {
                chernoff
                    .entry(beta.to_bits())
                    .or_insert((chernoff_coefficient_matrix(pop, *beta)?, None));
            }
            MetricSpec::IBetaAlphaD { beta, .. } => {
                let entry = chernoff
                    .entry(beta.to_bits())
                    .or_insert((chernoff_coefficient_matrix(pop, *beta)?, None));
                if entry.1.is_none() {
                    entry.1 = Some(neighbor_sets(&entry.0, ZERO_TOL, TIE_TOL)?);
                }
            }
            _ => {}
        }
    }

    let mut report = MetricReport::new(fingerprint);
    for spec in specs {
        let kl_ctx = || kl.as_ref().expect("KL context prepared above");
        let value = match spec {
            MetricSpec::IU => i_u(&kl_ctx().matrix, prior)?,
            MetricSpec::IE => i_e(&kl_ctx().matrix, prior)?,
            MetricSpec::IBetaAlpha { beta, alpha } => {
                let (matrix, _) = &chernoff[&beta.to_bits()];
                i_beta_alpha(matrix, prior, *alpha)?
            }
            MetricSpec::Id => i_d(&kl_ctx().matrix, &kl_ctx().sets, prior)?,
            MetricSpec::IUd => i_u_d(&kl_ctx().matrix, &kl_ctx().sets, prior)?,
            MetricSpec::IBetaAlphaD { beta, alpha } => {
                let (matrix, sets) = &chernoff[&beta.to_bits()];
                i_beta_alpha_d(matrix, sets.as_ref().expect("sets prepared"), prior, *alpha)?
            }
            MetricSpec::IBigD => i_big_d(&kl_ctx().matrix, &kl_ctx().sets, prior)?,
            MetricSpec::IBigD0 => i_big_d0(&kl_ctx().matrix, &kl_ctx().sets, prior)?,
            MetricSpec::HcPlusH => h_c_bound(pop, prior, CHERNOFF_SEARCH_TOL)?,
            MetricSpec::HX => entropy(prior)?,
        };
        report.insert(spec.column_name(), value)?;
    }
    Ok(report)
}

/// Build the curvature field for a given sweep N.
fn build_fisher_field(spec: &FisherSpec, n: usize) -> Result<CurvatureField> {
    let grid = spec.grid;
    match spec.model {
        FisherModelSpec::LinearGaussian { sigma, noise_var } => {
            if !(sigma > 0.0) || !(noise_var > 0.0) {
                return Err(Error::Config("sigma and noise_var must be positive".into()));
            }
            let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            let inv_var = 1.0 / (sigma * sigma);
            let j = n as f64 / noise_var;
            CurvatureField::new_1d(
                grid.lo,
                grid.hi,
                grid.steps,
                move |_| j,
                move |_| inv_var,
                move |x| norm * (-x * x * inv_var / 2.0).exp(),
            )
        }
        FisherModelSpec::PoissonGaussianBumps { amplitude, width } => {
            if !(amplitude > 0.0) || !(width > 0.0) {
                return Err(Error::Config("amplitude and width must be positive".into()));
            }
            let points: Vec<f64> = (0..grid.steps)
                .map(|i| {
                    grid.lo + (grid.hi - grid.lo) * (i as f64) / ((grid.steps - 1) as f64)
                })
                .collect();
            let centers: Vec<f64> = if n == 1 {
                vec![0.5 * (grid.lo + grid.hi)]
            } else {
                (0..n)
                    .map(|i| grid.lo + (grid.hi - grid.lo) * (i as f64) / ((n - 1) as f64))
                    .collect()
            };
            let mut rates = Vec::with_capacity(n);
            let mut derivs = Vec::with_capacity(n);
            for &c in &centers {
                let f: Vec<f64> = points
                    .iter()
                    .map(|&x| amplitude * (-(x - c) * (x - c) / (2.0 * width * width)).exp())
                    .collect();
                let fp: Vec<f64> = points
                    .iter()
                    .zip(&f)
                    .map(|(&x, &fx)| -(x - c) / (width * width) * fx)
                    .collect();
                rates.push(f);
                derivs.push(fp);
            }
            let j_values = poisson_fisher_1d(&rates, &derivs, &points)?;
            let lo = grid.lo;
            let hi = grid.hi;
            let dx = (hi - lo) / ((grid.steps - 1) as f64);
            let density = 1.0 / (hi - lo);
            let steps = grid.steps;
            CurvatureField::new_1d(
                lo,
                hi,
                steps,
                move |x| {
                    let idx = (((x - lo) / dx).round() as usize).min(j_values.len() - 1);
                    j_values[idx]
                },
                |_| 0.0,
                move |_| density,
            )
        }
    }
}

fn fisher_value(field: &CurvatureField, spec: &FisherMetricSpec) -> Result<f64> {
    match spec {
        FisherMetricSpec::IG => i_g(field),
        FisherMetricSpec::IF => i_f(field),
        FisherMetricSpec::IGamma { beta } => i_gamma(field, *beta),
    }
}

fn table_columns(cfg: &ExperimentConfig, with_mc: bool) -> Vec<String> {
    let mut columns = vec!["N".to_string()];
    if with_mc {
        columns.extend(
            ["I_MC_nats", "I_MC_bits", "I_std_nats"].iter().map(|s| s.to_string()),
        );
    }
    for spec in &cfg.metrics {
        let name = spec.column_name();
        columns.push(format!("{name}_nats"));
        columns.push(format!("{name}_bits"));
        if with_mc {
            columns.push(format!("DI_{name}"));
        }
    }
    if let Some(fisher) = &cfg.fisher {
        for spec in &fisher.metrics {
            let name = spec.column_name();
            columns.push(format!("{name}_nats"));
            columns.push(format!("{name}_bits"));
            if with_mc {
                columns.push(format!("DI_{name}"));
            }
        }
    }
    columns
}

fn with_n_context<T>(n: usize, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("N = {n}: {msg}")),
        Error::Domain(msg) => Error::Domain(format!("N = {n}: {msg}")),
        other => other,
    })
}

/// Run the full experiment: metrics, MC estimate and relative errors per N.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_inner(cfg, true)
}

/// Metrics-only run (no Monte-Carlo columns).
pub fn run_metrics(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_inner(cfg, false)
}

fn run_inner(cfg: &ExperimentConfig, with_mc: bool) -> Result<ResultTable> {
    cfg.validate()?;
    let space = cfg.build_space()?;
    let mut table = ResultTable { columns: table_columns(cfg, with_mc), rows: Vec::new() };
    for &n in &cfg.n_sweep {
        let pop = with_n_context(n, cfg.build_population(n, &space))?;
        let fingerprint = format!("{} N={} seed={}", cfg.name, n, cfg.seed);
        let report =
            with_n_context(n, compute_metrics(&pop, space.prior(), &cfg.metrics, &fingerprint))?;

        let mut row = vec![n as f64];
        let mc = if with_mc {
            let est = with_n_context(n, estimate(&pop, space.prior(), &cfg.mc_config()))?;
            row.push(est.i_mc);
            row.push(nats_to_bits(est.i_mc));
            row.push(est.i_std);
            Some(est)
        } else {
            None
        };
        let push_metric = |row: &mut Vec<f64>, nats: f64| -> Result<()> {
            row.push(nats);
            row.push(nats_to_bits(nats));
            if let Some(mc) = &mc {
                let (di, _) = relative_error(nats, mc)?;
                row.push(di);
            }
            Ok(())
        };
        for spec in &cfg.metrics {
            let value = report.get(&spec.column_name()).expect("computed above");
            with_n_context(n, push_metric(&mut row, value.nats))?;
        }
        if let Some(fisher) = &cfg.fisher {
            let field = with_n_context(n, build_fisher_field(fisher, n))?;
            for spec in &fisher.metrics {
                let value = with_n_context(n, fisher_value(&field, spec))?;
                with_n_context(n, push_metric(&mut row, value))?;
            }
        }
        with_n_context(n, table.push_row(row))?;
    }
    Ok(table)
}

/// Exact-MI oracle sweep; refuses instances beyond the enumeration guard.
pub fn run_oracle(cfg: &ExperimentConfig, tail_tol: f64) -> Result<ResultTable> {
    cfg.validate()?;
    let space = cfg.build_space()?;
    let mut table = ResultTable {
        columns: vec![
            "N".into(),
            "I_exact_nats".into(),
            "I_exact_bits".into(),
            "neglected_tail".into(),
        ],
        rows: Vec::new(),
    };
    for &n in &cfg.n_sweep {
        let pop = with_n_context(n, cfg.build_population(n, &space))?;
        let exact = with_n_context(n, exact_mi(&pop, space.prior(), tail_tol))?;
        table.push_row(vec![
            n as f64,
            exact.value,
            nats_to_bits(exact.value),
            exact.neglected_tail,
        ])?;
    }
    Ok(table)
}

/// Divergence-matrix dump for a single N.
pub fn run_divergence(
    cfg: &ExperimentConfig,
    n: usize,
    kind: DivergenceKind,
) -> Result<DivergenceMatrix> {
    let space = cfg.build_space()?;
    let pop = cfg.build_population(n, &space)?;
    Ok(match kind {
        DivergenceKind::Kl => kl_matrix(&pop),
        DivergenceKind::ChernoffCoefficient { beta } => chernoff_coefficient_matrix(&pop, beta)?,
        DivergenceKind::Bhattacharyya => crate::divergence::bhattacharyya_matrix(&pop),
        DivergenceKind::ChernoffInformation => {
            let m = pop.num_stimuli();
            let mut entries = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        entries[a * m + b] =
                            crate::divergence::chernoff_information(&pop, a, b, 1e-9)?.value;
                    }
                }
            }
            DivergenceMatrix::from_entries(DivergenceKind::ChernoffInformation, m, entries)?
        }
    })
}

/// JSON sidecar with the full config echo and the seed actually used.
pub fn write_sidecar(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let sidecar = serde_json::json!({
        "config": cfg,
        "seed": cfg.seed,
        "mc": { "j_max": cfg.mc.j_max, "i_max": cfg.mc.i_max },
    });
    std::fs::write(path, serde_json::to_string_pretty(&sidecar).expect("serializes"))?;
    Ok(())
}
