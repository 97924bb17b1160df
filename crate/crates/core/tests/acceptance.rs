//! End-to-end acceptance suite. Each test prints a single pass/fail line
//! for its criterion (run with `--nocapture` to see them); all tolerances
//! are pinned here.
//!
//! Run with `cargo test --test acceptance`; the full suite takes a few
//! minutes because several criteria need Monte-Carlo reference runs.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use popinfo::divergence::{
    bhattacharyya_matrix, brute_force_divergence, chernoff_coefficient_matrix, hellinger_sq,
    kl_matrix, poisson_product_pmfs, BruteForceKind,
};
use popinfo::experiment::preset;
use popinfo::fisher::{i_g, i_gamma, poisson_fisher_1d, CurvatureField};
use popinfo::metrics::{
    i_beta_alpha, i_big_d, i_big_d0, i_d, i_e, i_u, neighbor_sets, TIE_TOL, ZERO_TOL,
};
use popinfo::montecarlo::{estimate, exact_mi, McConfig};
use popinfo::stimulus::{PoissonPopulation, StimulusSpace};

const MC_JMAX: usize = 100_000;
const MC_IMAX: usize = 100;
const BETA_ONE: f64 = 0.36787944117144233; // e^{-1}
const FULL_SWEEP: [usize; 15] = [1, 2, 3, 4, 6, 10, 14, 20, 30, 50, 100, 200, 400, 700, 1000];
const LARGE_N: [usize; 4] = [200, 400, 700, 1000];

/// Per-(preset, N) computed quantities, shared across criteria.
#[derive(Clone)]
struct Computed {
    i_u: f64,
    i_e: f64,
    i_d: f64,
    i_big_d: f64,
    i_big_d0: f64,
    i_beta1: f64,
}

fn population(name: &str, n: usize) -> PoissonPopulation {
    let cfg = preset(name).unwrap();
    let space = cfg.build_space().unwrap();
    cfg.build_population(n, &space).unwrap()
}

fn metric_cache() -> &'static Mutex<HashMap<(String, usize), Computed>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, usize), Computed>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn mc_cache() -> &'static Mutex<HashMap<(String, usize), (f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, usize), (f64, f64)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn metrics_for(name: &str, n: usize) -> Computed {
    if let Some(hit) = metric_cache().lock().unwrap().get(&(name.to_string(), n)) {
        return hit.clone();
    }
    let pop = population(name, n);
    let prior = pop.space().prior().to_vec();
    let kl = kl_matrix(&pop);
    let sets = neighbor_sets(&kl, ZERO_TOL, TIE_TOL).unwrap();
    let chern = chernoff_coefficient_matrix(&pop, BETA_ONE).unwrap();
    let computed = Computed {
        i_u: i_u(&kl, &prior).unwrap(),
        i_e: i_e(&kl, &prior).unwrap(),
        i_d: i_d(&kl, &sets, &prior).unwrap(),
        i_big_d: i_big_d(&kl, &sets, &prior).unwrap(),
        i_big_d0: i_big_d0(&kl, &sets, &prior).unwrap(),
        i_beta1: i_beta_alpha(&chern, &prior, 1.0).unwrap(),
    };
    metric_cache().lock().unwrap().insert((name.to_string(), n), computed.clone());
    computed
}

fn mc_for(name: &str, n: usize) -> (f64, f64) {
    if let Some(&hit) = mc_cache().lock().unwrap().get(&(name.to_string(), n)) {
        return hit;
    }
    let cfg = preset(name).unwrap();
    let pop = population(name, n);
    let mc = McConfig { j_max: MC_JMAX, i_max: MC_IMAX, seed: cfg.seed };
    let est = estimate(&pop, pop.space().prior(), &mc).unwrap();
    mc_cache().lock().unwrap().insert((name.to_string(), n), (est.i_mc, est.i_std));
    (est.i_mc, est.i_std)
}

/// Random tiny instances with exactly enumerable mutual information.
fn tiny_instances(count: usize) -> Vec<PoissonPopulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=3usize);
            let m = rng.random_range(2..=6usize);
            let rates: Vec<f64> = (0..n * m).map(|_| rng.random_range(0.0..5.0)).collect();
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let z: f64 = weights.iter().sum();
            let prior: Vec<f64> = weights.iter().map(|w| w / z).collect();
            let points: Vec<f64> = (0..m).map(|i| i as f64).collect();
            let space = StimulusSpace::new(points, prior).unwrap();
            PoissonPopulation::from_rates(rates, n, space).unwrap()
        })
        .collect()
}

fn report(label: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("{label}: PASS");
    } else {
        println!("{label}: FAIL");
        for f in &failures {
            println!("  {f}");
        }
        panic!("{label} failed with {} violation(s)", failures.len());
    }
}

#[test]
fn criterion_1_saturation_at_full_population() {
    let mut failures = Vec::new();
    // Tolerances: 3 bootstrap sigmas plus 1e-9 nats of accumulated rounding
    // (at saturation every sample term is identical and the sigma is 0).
    let ln21 = 21.0f64.ln();
    let (i_mc, i_std) = mc_for("fig1", 1000);
    if (i_mc - ln21).abs() > 3.0 * i_std + 1e-9 {
        failures.push(format!(
            "fig1 N=1000: I_MC = {i_mc}, expected ln 21 = {ln21} within 3*{i_std}"
        ));
    }
    let ln1000 = 1000.0f64.ln();
    let (i_mc, i_std) = mc_for("fig5", 1000);
    if (i_mc - ln1000).abs() > 3.0 * i_std + 0.05 {
        failures.push(format!(
            "fig5 N=1000: I_MC = {i_mc}, expected ln 1000 = {ln1000} within 3*{i_std} + 0.05"
        ));
    }
    report("criterion 1 (saturation at N=1000)", failures);
}

#[test]
fn criterion_2_large_population_accuracy() {
    let mut failures = Vec::new();
    for name in ["fig1", "fig2", "fig5", "fig6"] {
        for n in LARGE_N {
            let (i_mc, _) = mc_for(name, n);
            let m = metrics_for(name, n);
            for (metric, value) in [("DI_e", m.i_e), ("DI_d", m.i_d)] {
                let di = (value - i_mc) / i_mc;
                if di.abs() > 0.02 {
                    failures.push(format!("{name} N={n}: {metric} = {di}"));
                }
            }
        }
    }
    for name in ["fig3", "fig4"] {
        for n in LARGE_N {
            let (i_mc, _) = mc_for(name, n);
            let m = metrics_for(name, n);
            let di = (m.i_e - i_mc) / i_mc;
            if di.abs() > 0.02 {
                failures.push(format!("{name} N={n}: DI_e = {di}"));
            }
            // the restricted-sum variants only need to respect the orderings
            if m.i_e > m.i_d + 1e-10 {
                failures.push(format!("{name} N={n}: i_e = {} > i_d = {}", m.i_e, m.i_d));
            }
            if m.i_big_d0 > m.i_big_d + 1e-10 {
                failures.push(format!(
                    "{name} N={n}: i_D0 = {} > i_D = {}",
                    m.i_big_d0, m.i_big_d
                ));
            }
        }
    }
    report("criterion 2 (relative error <= 2% for N >= 200)", failures);
}

#[test]
fn criterion_3_bound_chain_on_exact_instances() {
    let mut failures = Vec::new();
    let slack = 1e-9;
    for (idx, pop) in tiny_instances(100).iter().enumerate() {
        let prior = pop.space().prior().to_vec();
        let exact = exact_mi(pop, &prior, 1e-12).unwrap();
        let kl = kl_matrix(pop);
        let upper = i_u(&kl, &prior).unwrap();
        if exact.value > upper + slack {
            failures.push(format!("instance {idx}: exact = {} > i_u = {upper}", exact.value));
        }
        for beta in [0.25, 0.5, 0.75] {
            let chern = chernoff_coefficient_matrix(pop, beta).unwrap();
            for alpha in [0.5, 1.0, 2.0] {
                let lower = i_beta_alpha(&chern, &prior, alpha).unwrap();
                if lower > exact.value + slack {
                    failures.push(format!(
                        "instance {idx}: i_beta_alpha({beta},{alpha}) = {lower} > exact = {}",
                        exact.value
                    ));
                }
            }
        }
    }
    report("criterion 3 (lower/upper bounds straddle exact MI)", failures);
}

#[test]
fn criterion_4_exponential_bound_chain() {
    let mut failures = Vec::new();
    let le = |a: f64, b: f64| a <= b + 1e-12 * (1.0 + b.abs());
    for (idx, pop) in tiny_instances(100).iter().enumerate() {
        let prior = pop.space().prior().to_vec();
        let kl = kl_matrix(pop);
        let chern = chernoff_coefficient_matrix(pop, BETA_ONE).unwrap();
        let lower = i_beta_alpha(&chern, &prior, 1.0).unwrap();
        let mid = i_e(&kl, &prior).unwrap();
        let upper = i_u(&kl, &prior).unwrap();
        if !(le(lower, mid) && le(mid, upper)) {
            failures.push(format!("instance {idx}: {lower} <= {mid} <= {upper} violated"));
        }
    }
    for name in ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"] {
        for n in FULL_SWEEP {
            let m = metrics_for(name, n);
            if !(le(m.i_beta1, m.i_e) && le(m.i_e, m.i_u)) {
                failures.push(format!(
                    "{name} N={n}: {} <= {} <= {} violated",
                    m.i_beta1, m.i_e, m.i_u
                ));
            }
        }
    }
    report("criterion 4 (i_beta_alpha(1/e,1) <= i_e <= i_u everywhere)", failures);
}

#[test]
fn criterion_5_identities() {
    let mut failures = Vec::new();
    // restricted-sum variants coincide bit-exactly under a uniform prior
    for name in ["fig1", "fig3", "fig5"] {
        for n in FULL_SWEEP {
            let m = metrics_for(name, n);
            if m.i_d.to_bits() != m.i_big_d.to_bits() {
                failures.push(format!(
                    "{name} N={n}: i_d = {} differs from i_D = {}",
                    m.i_d, m.i_big_d
                ));
            }
        }
    }
    // first-order variant never exceeds the full restricted sum
    for name in ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"] {
        for n in FULL_SWEEP {
            let m = metrics_for(name, n);
            if m.i_big_d0 > m.i_big_d + 1e-12 {
                failures.push(format!(
                    "{name} N={n}: i_D0 = {} > i_D = {}",
                    m.i_big_d0, m.i_big_d
                ));
            }
        }
    }
    // i_gamma(1/2) = i_G - (K/2) ln(4/e) on synthetic 1-D curvature fields
    let offset = 0.5 * (4.0f64 / std::f64::consts::E).ln();
    let fields = [
        CurvatureField::linear_gaussian(2.0, 5.0, 1.0, 8.0, 4001).unwrap(),
        CurvatureField::linear_gaussian(0.5, 1.0, 3.0, 8.0, 4001).unwrap(),
        CurvatureField::new_1d(
            0.0,
            1.0,
            2001,
            |x| 40.0 + 30.0 * (2.0 * x - 1.0).powi(2),
            |_| 0.0,
            |_| 1.0,
        )
        .unwrap(),
    ];
    for (idx, field) in fields.iter().enumerate() {
        let ig = i_g(field).unwrap();
        let igamma = i_gamma(field, 0.5).unwrap();
        if (igamma - (ig - offset)).abs() > 1e-12 {
            failures.push(format!(
                "field {idx}: i_gamma(1/2) = {igamma}, i_G - offset = {}",
                ig - offset
            ));
        }
    }
    report("criterion 5 (uniform-prior and gamma identities)", failures);
}

#[test]
fn criterion_6_binary_tuning_near_equality() {
    let mut failures = Vec::new();
    for name in ["fig1", "fig2", "fig5", "fig6"] {
        for n in FULL_SWEEP {
            let m = metrics_for(name, n);
            let gap = (m.i_e - m.i_d).abs();
            if gap > 5e-3 {
                failures.push(format!("{name} N={n}: |i_e - i_d| = {gap}"));
            }
            // The gap vanishes for large N; with step tunings every non-alias
            // divergence is at least the common amplitude away, so by N=200
            // the beyond-nearest terms are already below fp noise. Random
            // sparse tunings converge more slowly (rarely-covered stimuli
            // keep finite next-nearest divergences alive into the hundreds
            // of neurons), so the tight check applies at saturation only.
            let tight = match name {
                "fig1" | "fig2" => n >= 200,
                _ => n >= 1000,
            };
            if tight && gap > 1e-9 {
                failures.push(format!("{name} N={n}: |i_e - i_d| = {gap} > 1e-9"));
            }
        }
    }
    let m1 = metrics_for("fig1", 1);
    if m1.i_e != m1.i_d {
        failures.push(format!("fig1 N=1: i_e = {} != i_d = {}", m1.i_e, m1.i_d));
    }
    report("criterion 6 (i_e matches i_d under binary tunings)", failures);
}

#[test]
fn criterion_7_divergences_match_brute_force() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    for case in 0..50 {
        let neurons = rng.random_range(1..=3usize);
        let a: Vec<f64> = (0..neurons).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..neurons).map(|_| rng.random_range(0.0..10.0)).collect();
        let rates: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        let mut columns = vec![0.0; neurons * 2];
        for n in 0..neurons {
            columns[n * 2] = rates[n];
            columns[n * 2 + 1] = rates[neurons + n];
        }
        let space = StimulusSpace::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let pop = PoissonPopulation::from_rates(columns, neurons, space).unwrap();
        let (p, q) = poisson_product_pmfs(&a, &b, 1e-16).unwrap();

        let kl_closed = kl_matrix(&pop).get(0, 1);
        let kl_oracle = brute_force_divergence(&p, &q, BruteForceKind::Kl).unwrap();
        if kl_closed.is_finite() || kl_oracle.is_finite() {
            if (kl_closed - kl_oracle).abs() > 1e-10 * (1.0 + kl_oracle.abs()) {
                failures.push(format!("case {case}: KL {kl_closed} vs oracle {kl_oracle}"));
            }
        }
        for beta in [0.1, 0.5, 0.9] {
            let closed = chernoff_coefficient_matrix(&pop, beta).unwrap().get(0, 1);
            let oracle = brute_force_divergence(
                &p,
                &q,
                BruteForceKind::ChernoffExponent { beta },
            )
            .unwrap();
            if (closed - oracle).abs() > 1e-10 * (1.0 + oracle.abs()) {
                failures.push(format!(
                    "case {case}: beta = {beta}, {closed} vs oracle {oracle}"
                ));
            }
        }
        // Bhattacharyya-Hellinger identity: b0*D_b0 = -ln(1 - H^2)
        let bhat = bhattacharyya_matrix(&pop).get(0, 1);
        let h2 = hellinger_sq(&pop, 0, 1);
        if (bhat - (-(1.0 - h2).ln())).abs() > 1e-12 * (1.0 + bhat.abs()) {
            failures.push(format!("case {case}: Bhattacharyya {bhat} vs Hellinger {h2}"));
        }
    }
    report("criterion 7 (closed forms match brute-force summation)", failures);
}

#[test]
fn criterion_8_mc_calibration() {
    let mut failures = Vec::new();
    // N=2, M=3, modest rates: exactly enumerable and cheap to sample
    let space = StimulusSpace::new(vec![0.0, 1.0, 2.0], vec![0.3, 0.45, 0.25]).unwrap();
    let pop = PoissonPopulation::from_rates(
        vec![0.5, 2.0, 3.0, 1.5, 0.2, 2.5],
        2,
        space,
    )
    .unwrap();
    let prior = pop.space().prior().to_vec();
    let exact = exact_mi(&pop, &prior, 1e-13).unwrap().value;

    let mut covered = 0usize;
    let mut errors: HashMap<usize, Vec<f64>> = HashMap::new();
    for seed in 0..100u64 {
        for j_max in [1_000usize, 10_000, 100_000] {
            let cfg = McConfig { j_max, i_max: MC_IMAX, seed };
            let est = estimate(&pop, &prior, &cfg).unwrap();
            errors.entry(j_max).or_default().push((est.i_mc - exact).abs());
            if j_max == 100_000 && (est.i_mc - exact).abs() <= 3.0 * est.i_std {
                covered += 1;
            }
        }
    }
    if covered < 95 {
        failures.push(format!("only {covered}/100 seeds within 3 sigma at j_max = 1e5"));
    }
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        v[v.len() / 2]
    };
    let med3 = median(errors.remove(&1_000).unwrap());
    let med4 = median(errors.remove(&10_000).unwrap());
    let med5 = median(errors.remove(&100_000).unwrap());
    if !(med3 > med4 && med4 > med5) {
        failures.push(format!(
            "median |error| not decreasing: {med3} (1e3), {med4} (1e4), {med5} (1e5)"
        ));
    }
    report("criterion 8 (MC estimator calibrated against exact MI)", failures);
}

#[test]
fn criterion_9_fisher_oracles() {
    let mut failures = Vec::new();
    // 1-D linear-Gaussian channel: exact MI = (1/2) ln(1 + n sigma^2 / var)
    for (sigma, n_obs, noise_var) in [(2.0, 5.0, 1.0), (1.0, 20.0, 0.5)] {
        let field = CurvatureField::linear_gaussian(sigma, n_obs, noise_var, 10.0, 20001).unwrap();
        let exact = 0.5 * (1.0 + n_obs * sigma * sigma / noise_var).ln();
        let ig = i_g(&field).unwrap();
        if (ig - exact).abs() > 1e-6 {
            failures.push(format!(
                "linear-Gaussian sigma={sigma} n={n_obs}: i_G = {ig}, exact = {exact}"
            ));
        }
    }

    // Poisson Fisher information vs finite differences of the expected
    // log-likelihood curvature, J(x) = -<d^2/dx^2 ln p(r|x)>.
    let amp = 5.0;
    let width = 1.0;
    let f = |x: f64| amp * (-x * x / (2.0 * width * width)).exp();
    let fp = |x: f64| -x / (width * width) * f(x);
    let grid = [0.25, 0.75, 1.5];
    let rates: Vec<Vec<f64>> = vec![grid.iter().map(|&x| f(x)).collect()];
    let derivs: Vec<Vec<f64>> = vec![grid.iter().map(|&x| fp(x)).collect()];
    let j = poisson_fisher_1d(&rates, &derivs, &grid).unwrap();

    // expected log-likelihood g(x0, x) = sum_r Pois(r; f(x0)) ln Pois(r; f(x))
    let expected_ll = |x0: f64, x: f64| -> f64 {
        let lam0 = f(x0);
        let lam = f(x);
        let mut pmf = (-lam0).exp();
        let mut ln_rfact = 0.0;
        let mut total = pmf * (-lam - ln_rfact); // r = 0 term
        for r in 1..80 {
            pmf *= lam0 / (r as f64);
            ln_rfact += (r as f64).ln();
            total += pmf * ((r as f64) * lam.ln() - lam - ln_rfact);
        }
        total
    };
    let h = 1e-3;
    for (idx, &x) in grid.iter().enumerate() {
        let oracle = -(expected_ll(x, x + h) - 2.0 * expected_ll(x, x) + expected_ll(x, x - h))
            / (h * h);
        if (j[idx] - oracle).abs() > 1e-4 * oracle.abs() {
            failures.push(format!("x = {x}: J = {}, finite-difference = {oracle}", j[idx]));
        }
    }
    report("criterion 9 (Fisher asymptotics match closed-form oracles)", failures);
}
