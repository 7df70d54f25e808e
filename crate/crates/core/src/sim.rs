//! Monte Carlo designs and coverage experiments.
//!
//! The clustered designs draw each observation's covariates as the sum of an
//! idiosyncratic and a cluster-level component, both mean-zero Gaussian with
//! Toeplitz covariance rho^|i-j| (or a two-point mixture of Gaussians for
//! the heavy-tailed variants). Observations are assigned uniformly to G0
//! nominal clusters and empty clusters are discarded. Errors decompose the
//! same way and are mapped through the probability integral transform so
//! the latent error is standard logistic; outcomes are the sign of the
//! latent index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::ape::{estimate_all, estimate_ape, estimate_nuisance, plug_in_alpha};
use crate::bootstrap::{bootstrap_maxima, simultaneous_intervals, BootstrapConfig, Interval};
use crate::config::Settings;
use crate::data::{ClusteredDataset, DesignMatrix};
use crate::error::{Error, Result};
use crate::logit::{lambda_prime, logit};
use crate::rng::derive_seed;

const STREAM_ORACLE: u64 = 0x6f7261636c65; // "oracle"
const STREAM_REP: u64 = 0x726570; // "rep"
const STREAM_BOOT: u64 = 0x626f6f74; // "boot"

/// Simulation designs. M1-M5 are Gaussian with rho = .1/.3/.5/.7/.9; M6-M10
/// repeat them with mixture (outlier) covariates. Fig1 is the small i.i.d.
/// debiasing design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DgpModel {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
    M9,
    M10,
    Fig1,
}

impl DgpModel {
    pub const ALL: [DgpModel; 11] = [
        DgpModel::M1,
        DgpModel::M2,
        DgpModel::M3,
        DgpModel::M4,
        DgpModel::M5,
        DgpModel::M6,
        DgpModel::M7,
        DgpModel::M8,
        DgpModel::M9,
        DgpModel::M10,
        DgpModel::Fig1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DgpModel::M1 => "M1",
            DgpModel::M2 => "M2",
            DgpModel::M3 => "M3",
            DgpModel::M4 => "M4",
            DgpModel::M5 => "M5",
            DgpModel::M6 => "M6",
            DgpModel::M7 => "M7",
            DgpModel::M8 => "M8",
            DgpModel::M9 => "M9",
            DgpModel::M10 => "M10",
            DgpModel::Fig1 => "Fig1",
        }
    }

    pub fn default_rho(&self) -> f64 {
        match self {
            DgpModel::M1 | DgpModel::M6 => 0.1,
            DgpModel::M2 | DgpModel::M7 => 0.3,
            DgpModel::M3 | DgpModel::M8 | DgpModel::Fig1 => 0.5,
            DgpModel::M4 | DgpModel::M9 => 0.7,
            DgpModel::M5 | DgpModel::M10 => 0.9,
        }
    }

    pub fn is_mixture(&self) -> bool {
        matches!(
            self,
            DgpModel::M6 | DgpModel::M7 | DgpModel::M8 | DgpModel::M9 | DgpModel::M10
        )
    }
}

impl std::str::FromStr for DgpModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<DgpModel> {
        let lower = s.to_ascii_lowercase();
        DgpModel::ALL
            .iter()
            .find(|m| m.name().to_ascii_lowercase() == lower)
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown DGP '{s}'; available: {}",
                    DgpModel::ALL
                        .iter()
                        .map(|m| m.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DgpSpec {
    pub model: DgpModel,
    pub rho: f64,
    pub beta2: f64,
    /// Nominal cluster count; the realized G drops empty clusters.
    pub g0: usize,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl DgpSpec {
    /// Clustered design under the scaling rule p = 1.5 G0, n = 2.5 G0.
    pub fn scaled(model: DgpModel, beta2: f64, g0: usize, seed: u64) -> DgpSpec {
        DgpSpec {
            model,
            rho: model.default_rho(),
            beta2,
            g0,
            n: (2.5 * g0 as f64).round() as usize,
            p: (1.5 * g0 as f64).round() as usize,
            seed,
        }
    }

    /// The small i.i.d. debiasing design: n = 200 singleton clusters, p = 10,
    /// slopes (0.1, -1, 1, 0, ...), Toeplitz 0.5.
    pub fn fig1(seed: u64) -> DgpSpec {
        DgpSpec {
            model: DgpModel::Fig1,
            rho: 0.5,
            beta2: -1.0,
            g0: 200,
            n: 200,
            p: 10,
            seed,
        }
    }

    /// True coefficient vector: intercept 1, beta2, then 1/3..1/20, zeros
    /// (clustered designs); (0.1, -1, 1, 0, ...) for Fig1.
    pub fn beta0(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.p];
        if self.model == DgpModel::Fig1 {
            let vals = [0.1, -1.0, 1.0];
            for (j, v) in vals.iter().enumerate().take(self.p) {
                beta[j] = *v;
            }
        } else {
            beta[0] = 1.0;
            if self.p > 1 {
                beta[1] = self.beta2;
            }
            for j in 2..self.p.min(20) {
                beta[j] = 1.0 / (j as f64 + 1.0);
            }
        }
        beta
    }

    /// Non-fatal oddities in the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.model != DgpModel::Fig1 {
            let standard = [0.1, 0.3, 0.5, 0.7, 0.9];
            if !standard.iter().any(|r| (r - self.rho).abs() < 1e-12) {
                out.push(format!(
                    "rho = {} is outside the standard grid {{0.1, 0.3, 0.5, 0.7, 0.9}}",
                    self.rho
                ));
            }
        }
        out
    }
}

/// Standard normal CDF (West's double-precision algorithm).
pub(crate) fn norm_cdf(x: f64) -> f64 {
    let z = x.abs();
    let c = if z > 37.0 {
        0.0
    } else {
        let e = (-z * z / 2.0).exp();
        if z < 7.071_067_811_865_475 {
            let b = 3.526_249_659_989_11e-2 * z + 0.700_383_064_443_688;
            let b = b * z + 6.373_962_203_531_65;
            let b = b * z + 33.912_866_078_383;
            let b = b * z + 112.079_291_497_871;
            let b = b * z + 221.213_596_169_931;
            let b = b * z + 220.206_867_912_376;
            let d = 8.838_834_764_831_84e-2 * z + 1.755_667_163_182_64;
            let d = d * z + 16.064_177_579_207;
            let d = d * z + 86.780_732_202_946_1;
            let d = d * z + 296.564_248_779_674;
            let d = d * z + 637.333_633_378_831;
            let d = d * z + 793.826_512_519_948;
            let d = d * z + 440.413_735_824_752;
            e * b / d
        } else {
            let b = z + 0.65;
            let b = z + 4.0 / b;
            let b = z + 3.0 / b;
            let b = z + 2.0 / b;
            let b = z + 1.0 / b;
            e / (b * 2.506_628_274_631_000_5)
        }
    };
    if x > 0.0 {
        1.0 - c
    } else {
        c
    }
}

/// One N(0, Sigma(rho)) draw via the AR(1) recursion; every coordinate has
/// unit variance and corr(x_i, x_j) = rho^|i-j|.
fn ar1_into(rng: &mut ChaCha8Rng, rho: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let scale = (1.0 - rho * rho).sqrt();
    out[0] = rng.sample(StandardNormal);
    for t in 1..out.len() {
        let e: f64 = rng.sample(StandardNormal);
        out[t] = rho * out[t - 1] + scale * e;
    }
}

/// One covariate-component draw: Gaussian, or the mixture
/// Z0 - 1.5 * B * Z1 with Z1 ~ N(1, Sigma) and B ~ Bernoulli(0.1).
fn component_into(rng: &mut ChaCha8Rng, rho: f64, mixture: bool, out: &mut [f64], scratch: &mut [f64]) {
    ar1_into(rng, rho, out);
    if mixture && rng.gen::<f64>() < 0.1 {
        ar1_into(rng, rho, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o -= 1.5 * (1.0 + s);
        }
    }
}

/// Latent logistic error from two normal pieces: the probability integral
/// transform of their N(0,1) sum.
#[inline]
fn logistic_error(u1_plus_u2: f64) -> f64 {
    logit(norm_cdf(u1_plus_u2).clamp(1e-300, 1.0 - 1e-16))
}

/// Draw one dataset. Deterministic in the spec (bitwise).
pub fn simulate_dgp(spec: &DgpSpec) -> ClusteredDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let beta = spec.beta0();

    if spec.model == DgpModel::Fig1 {
        // i.i.d. observations, one cluster each, no intercept column
        let mut y = Vec::with_capacity(spec.n);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n);
        let mut x = vec![0.0; spec.p];
        for _ in 0..spec.n {
            ar1_into(&mut rng, spec.rho, &mut x);
            let z: f64 = rng.sample(StandardNormal);
            let u = logistic_error(z);
            let lin: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            y.push(f64::from(u8::from(lin + u > 0.0)));
            rows.push(x.clone());
        }
        let design = DesignMatrix::from_rows(&rows);
        let offsets: Vec<usize> = (0..=spec.n).collect();
        let ids: Vec<String> = (0..spec.n).map(|i| format!("i{i}")).collect();
        return ClusteredDataset::from_parts(y, design, offsets, ids, None, None)
            .expect("generated dataset is well-formed");
    }

    let slopes = spec.p - 1;
    let mixture = spec.model.is_mixture();
    let half_sd = 0.5f64.sqrt();
    let mut scratch = vec![0.0; slopes];

    // cluster-level pieces, drawn for every nominal cluster
    let mut x2 = vec![vec![0.0f64; slopes]; spec.g0];
    let mut u2 = vec![0.0f64; spec.g0];
    for g in 0..spec.g0 {
        component_into(&mut rng, spec.rho, mixture, &mut x2[g], &mut scratch);
        let z: f64 = rng.sample(StandardNormal);
        u2[g] = half_sd * z;
    }

    // observations: uniform cluster assignment, idiosyncratic pieces
    let mut per_cluster: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); spec.g0];
    let mut x1 = vec![0.0f64; slopes];
    for _ in 0..spec.n {
        let g = rng.gen_range(0..spec.g0);
        component_into(&mut rng, spec.rho, mixture, &mut x1, &mut scratch);
        let z: f64 = rng.sample(StandardNormal);
        let u1 = half_sd * z;
        let mut row = Vec::with_capacity(spec.p);
        row.push(1.0);
        for j in 0..slopes {
            row.push(x1[j] + x2[g][j]);
        }
        let lin: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let u = logistic_error(u1 + u2[g]);
        let y = f64::from(u8::from(lin + u > 0.0));
        per_cluster[g].push((y, row));
    }

    // discard empty clusters, keep nominal order
    let mut y = Vec::with_capacity(spec.n);
    let mut rows = Vec::with_capacity(spec.n);
    let mut offsets = vec![0usize];
    let mut ids = Vec::new();
    for (g, cluster) in per_cluster.into_iter().enumerate() {
        if cluster.is_empty() {
            continue;
        }
        for (yi, xi) in cluster {
            y.push(yi);
            rows.push(xi);
        }
        offsets.push(y.len());
        ids.push(format!("g{g}"));
    }
    let design = DesignMatrix::from_rows(&rows);
    let mut ds = ClusteredDataset::from_parts(y, design, offsets, ids, None, Some(0))
        .expect("generated dataset is well-formed");
    ds.set_intercept_col(Some(0));
    ds
}

/// Monte Carlo estimate of E[lambda'(x'beta0)] under the spec's marginal
/// covariate law, with its standard error. Shared by every target's true
/// APE: alpha_k = beta0_k * this mean.
pub fn oracle_lambda_prime_mean(spec: &DgpSpec, oracle_n: usize, seed: u64) -> (f64, f64) {
    let beta = spec.beta0();
    let last_nonzero = beta.iter().rposition(|b| *b != 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    if spec.model == DgpModel::Fig1 {
        let want = last_nonzero + 1;
        let mut x = vec![0.0; want];
        for _ in 0..oracle_n {
            ar1_into(&mut rng, spec.rho, &mut x);
            let lin: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let v = lambda_prime(lin);
            sum += v;
            sum_sq += v * v;
        }
    } else {
        // x_j = component + component for the slope block; intercept is 1
        let want = last_nonzero.max(1); // slope coordinates needed
        let mixture = spec.model.is_mixture();
        let mut c1 = vec![0.0; want];
        let mut c2 = vec![0.0; want];
        let mut scratch = vec![0.0; want];
        for _ in 0..oracle_n {
            component_into(&mut rng, spec.rho, mixture, &mut c1, &mut scratch);
            component_into(&mut rng, spec.rho, mixture, &mut c2, &mut scratch);
            let mut lin = beta[0];
            for j in 1..=last_nonzero {
                lin += beta[j] * (c1[j - 1] + c2[j - 1]);
            }
            let v = lambda_prime(lin);
            sum += v;
            sum_sq += v * v;
        }
    }
    let n = oracle_n as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// True APE for one target under the spec, by simulation from the marginal
/// covariate law (`oracle_n` independent draws). Exact zero for a zero
/// coefficient.
pub fn oracle_true_ape(spec: &DgpSpec, k: usize, oracle_n: usize) -> (f64, f64) {
    let beta = spec.beta0();
    let bk = beta.get(k).copied().unwrap_or(0.0);
    if bk == 0.0 {
        return (0.0, 0.0);
    }
    let seed = derive_seed(spec.seed, STREAM_ORACLE);
    let (mean, se) = oracle_lambda_prime_mean(spec, oracle_n, seed);
    (bk * mean, bk.abs() * se)
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub reps: usize,
    pub bootstrap_b: usize,
    /// Significance level a; intervals target 1 - a joint coverage.
    pub level: f64,
    pub seed: u64,
    /// The clustered experiments use the unnormalized variant by default.
    pub studentize: bool,
    pub oracle_n: usize,
    pub settings: Settings,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            reps: 300,
            bootstrap_b: 300,
            level: 0.05,
            seed: 0,
            studentize: false,
            oracle_n: 3_000_000,
            settings: Settings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub model: String,
    pub rho: f64,
    pub beta2: f64,
    pub g0: usize,
    pub n: usize,
    pub p: usize,
    pub targets: Vec<usize>,
    pub reps: usize,
    pub successes: usize,
    pub failures: usize,
    pub b: usize,
    pub level: f64,
    pub studentize: bool,
    pub seed: u64,
    pub oracle_n: usize,
    /// Fraction of successful replications whose simultaneous intervals
    /// contain every true APE.
    pub coverage: f64,
    pub mc_se: f64,
    /// Mean (APE-scale) bias per target over successful replications.
    pub mean_bias: Vec<f64>,
    pub true_ape: Vec<f64>,
    pub oracle_se: f64,
    pub failure_messages: Vec<String>,
}

pub(crate) fn all_covered(intervals: &[Interval], truths: &[f64]) -> bool {
    intervals
        .iter()
        .zip(truths)
        .all(|(iv, t)| iv.ape_lower <= *t && *t <= iv.ape_upper)
}

/// Coverage experiment: per replication simulate, estimate every target,
/// bootstrap the critical value, and check that all intervals contain the
/// true APEs. Failures are excluded and counted.
pub fn run_coverage(spec: &DgpSpec, targets: &[usize], cfg: &CoverageConfig) -> Result<CoverageReport> {
    if cfg.reps < 1 {
        return Err(Error::Config("coverage needs reps >= 1".into()));
    }
    if targets.is_empty() {
        return Err(Error::Config("coverage needs a nonempty target set".into()));
    }
    let beta = spec.beta0();
    let oracle_seed = derive_seed(cfg.seed, STREAM_ORACLE);
    let (lp_mean, lp_se) = oracle_lambda_prime_mean(spec, cfg.oracle_n, oracle_seed);
    let true_ape: Vec<f64> = targets.iter().map(|&k| beta[k] * lp_mean).collect();

    let rep_results: Vec<std::result::Result<(bool, Vec<f64>), String>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(derive_seed(cfg.seed, STREAM_REP), rep as u64);
            let mut rep_spec = spec.clone();
            rep_spec.seed = rep_seed;
            let ds = simulate_dgp(&rep_spec);
            let results = estimate_all(&ds, targets, &cfg.settings).map_err(|e| e.to_string())?;
            let boot = bootstrap_maxima(
                &results,
                &BootstrapConfig {
                    b: cfg.bootstrap_b,
                    level_a: cfg.level,
                    studentize: cfg.studentize,
                    seed: derive_seed(rep_seed, STREAM_BOOT),
                },
            )
            .map_err(|e| e.to_string())?;
            let intervals = simultaneous_intervals(&boot, &results);
            let covered = all_covered(&intervals, &true_ape);
            let biases = results
                .iter()
                .zip(&true_ape)
                .map(|(r, t)| r.ape - t)
                .collect();
            Ok((covered, biases))
        })
        .collect();

    let mut successes = 0usize;
    let mut covered_count = 0usize;
    let mut bias_sums = vec![0.0f64; targets.len()];
    let mut failure_messages = Vec::new();
    for r in rep_results {
        match r {
            Ok((covered, biases)) => {
                successes += 1;
                covered_count += usize::from(covered);
                for (acc, b) in bias_sums.iter_mut().zip(&biases) {
                    *acc += b;
                }
            }
            Err(msg) => {
                if failure_messages.len() < 10 {
                    failure_messages.push(msg);
                }
            }
        }
    }
    let failures = cfg.reps - successes;
    let coverage = if successes > 0 {
        covered_count as f64 / successes as f64
    } else {
        f64::NAN
    };
    let mc_se = if successes > 0 {
        (coverage * (1.0 - coverage) / successes as f64).sqrt()
    } else {
        f64::NAN
    };
    let mean_bias = bias_sums
        .iter()
        .map(|s| if successes > 0 { s / successes as f64 } else { f64::NAN })
        .collect();

    Ok(CoverageReport {
        model: spec.model.name().to_string(),
        rho: spec.rho,
        beta2: spec.beta2,
        g0: spec.g0,
        n: spec.n,
        p: spec.p,
        targets: targets.to_vec(),
        reps: cfg.reps,
        successes,
        failures,
        b: cfg.bootstrap_b,
        level: cfg.level,
        studentize: cfg.studentize,
        seed: cfg.seed,
        oracle_n: cfg.oracle_n,
        coverage,
        mc_se,
        mean_bias,
        true_ape,
        oracle_se: lp_se,
        failure_messages,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DebiasReport {
    pub reps: usize,
    pub failures: usize,
    /// Mean APE-scale post-double-selection estimate for the second slope.
    pub mean_ds: f64,
    /// Mean APE-scale direct plug-in at the lasso coefficients.
    pub mean_naive: f64,
    pub true_ape: f64,
    pub oracle_se: f64,
}

/// The debiasing experiment on the small i.i.d. design: compare the
/// post-double-selection estimator of the second slope's APE against the
/// naive plug-in at the lasso fit.
pub fn debias_study(reps: usize, oracle_n: usize, seed: u64, settings: &Settings) -> Result<DebiasReport> {
    let k = 1usize;
    let base = DgpSpec::fig1(seed);
    let (true_ape, oracle_se) = oracle_true_ape(&base, k, oracle_n);

    let per_rep: Vec<std::result::Result<(f64, f64), String>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(derive_seed(seed, STREAM_REP), rep as u64);
            let spec = DgpSpec::fig1(rep_seed);
            let ds = simulate_dgp(&spec);
            let bundle = estimate_nuisance(&ds, &[k], settings).map_err(|e| e.to_string())?;
            let result = estimate_ape(&ds, &bundle, k, settings).map_err(|e| e.to_string())?;
            let g_over_n = result.g_over_n();
            let naive = plug_in_alpha(&ds, &bundle.beta_hat.coef, k) * g_over_n;
            Ok((result.ape, naive))
        })
        .collect();

    let mut ds_sum = 0.0;
    let mut naive_sum = 0.0;
    let mut successes = 0usize;
    for r in per_rep {
        if let Ok((ds_ape, naive)) = r {
            ds_sum += ds_ape;
            naive_sum += naive;
            successes += 1;
        }
    }
    if successes == 0 {
        return Err(Error::Config("every debiasing replication failed".into()));
    }
    Ok(DebiasReport {
        reps,
        failures: reps - successes,
        mean_ds: ds_sum / successes as f64,
        mean_naive: naive_sum / successes as f64,
        true_ape,
        oracle_se,
    })
}
