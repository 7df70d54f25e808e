//! Post-double-selection average partial effects.
//!
//! For each target k: lasso + post-lasso logit give the pilot coefficients
//! and weights; a nodewise lasso and an auxiliary-response lasso select the
//! remaining nuisance supports; the final pooled logit restricted to the
//! support union produces the rescaled APE alpha_k, and the orthogonal score
//! yields per-cluster contributions for the variance and the bootstrap.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Settings;
use crate::data::ClusteredDataset;
use crate::error::{Error, Result};
use crate::lasso::{solve_lasso_logit, solve_weighted_lasso, SelectionFit};
use crate::logit::{fit_restricted_logit, fit_restricted_wls, lambda as logistic, lambda_prime,
    one_minus_two_lambda, RestrictedFit};
use crate::nodewise::{nodewise_fit, theta_row, NodewiseRow, ThetaRow};
use crate::penalty::{loadings_logit, loadings_weighted};

/// Everything estimated for one target k beyond the shared pilot quantities.
#[derive(Debug, Clone)]
pub struct PerTarget {
    pub k: usize,
    /// Post-lasso logit refit on support(beta_hat) with k always included;
    /// its k-th coordinate feeds the auxiliary regressor.
    pub beta_tilde_k: RestrictedFit,
    /// Auxiliary response S_ig = beta_tilde_k[k] * (1 - 2 lambda(x'beta_tilde)).
    pub s_hat: Vec<f64>,
    /// Lasso-selected nodewise support, mapped to original column indices.
    pub gamma_support: Vec<usize>,
    pub nodewise: NodewiseRow,
    pub zeta_hat: SelectionFit,
    pub zeta_tilde: RestrictedFit,
    pub theta: ThetaRow,
    /// mu = zeta_tilde + theta_tilde, length p.
    pub mu: Vec<f64>,
}

/// Shared pilot estimates plus the per-target nuisance fits.
#[derive(Debug, Clone)]
pub struct NuisanceBundle {
    pub beta_hat: SelectionFit,
    pub beta_tilde: RestrictedFit,
    /// x' beta_tilde, cached.
    pub eta_tilde: Vec<f64>,
    /// Regression weights lambda'(x' beta_tilde), in (0, 1/4].
    pub f_hat_sq: Vec<f64>,
    pub targets: Vec<PerTarget>,
}

impl NuisanceBundle {
    pub fn target(&self, k: usize) -> Option<&PerTarget> {
        self.targets.iter().find(|t| t.k == k)
    }
}

/// Point estimate, variance, and cached per-cluster scores for one target.
#[derive(Debug, Clone)]
pub struct ApeResult {
    pub k: usize,
    /// Rescaled APE: cluster-averaged sum of beta_k * lambda'(x'beta_check).
    pub alpha_tilde: f64,
    /// APE on the per-observation scale: (G/n) * alpha_tilde.
    pub ape: f64,
    pub sigma_tilde: f64,
    pub support_union: Vec<usize>,
    /// Per-cluster orthogonal-score sums used by the multiplier bootstrap
    /// (these use the k-th coordinate of the per-target refit).
    pub scores: Vec<f64>,
    /// Per-cluster score sums entering the variance estimate (these use the
    /// plain post-lasso coordinate unless configured otherwise);
    /// sigma_tilde^2 is exactly their mean square.
    pub variance_scores: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub g: usize,
    pub n: usize,
}

/// JSON-facing summary, one object per target.
#[derive(Debug, Clone, Serialize)]
pub struct ApeSummary {
    pub k: usize,
    pub alpha_tilde: f64,
    pub ape: f64,
    pub sigma_tilde: f64,
    pub support_size: usize,
    pub converged: bool,
}

impl ApeResult {
    pub fn summary(&self) -> ApeSummary {
        ApeSummary {
            k: self.k,
            alpha_tilde: self.alpha_tilde,
            ape: self.ape,
            sigma_tilde: self.sigma_tilde,
            support_size: self.support_union.len(),
            converged: self.converged,
        }
    }

    /// (G/n), the factor converting the rescaled APE to the APE.
    pub fn g_over_n(&self) -> f64 {
        self.g as f64 / self.n as f64
    }
}

fn sorted_union(base: &[usize], extra: usize) -> Vec<usize> {
    let mut out = base.to_vec();
    if !out.contains(&extra) {
        out.push(extra);
    }
    out.sort_unstable();
    out
}

/// Run the nuisance stage for every k in `targets`: the shared lasso +
/// post-lasso logit pilot (with the iterated penalty loadings), then the
/// per-target refit, nodewise regression, auxiliary-response lasso, and the
/// combined nuisance vector mu.
pub fn estimate_nuisance(
    ds: &ClusteredDataset,
    targets: &[usize],
    settings: &Settings,
) -> Result<NuisanceBundle> {
    let p = ds.p();
    for &k in targets {
        if k >= p {
            return Err(Error::Shape(format!("target {k} out of range (p = {p})")));
        }
    }
    let pcfg = &settings.penalty;
    let scfg = &settings.solver;

    // pilot: lasso logit with m-bar loading refinements, post-lasso refits
    let mut penalty = loadings_logit(ds, None, 0, pcfg)?;
    let mut beta_hat = solve_lasso_logit(ds, &penalty, scfg, None)
        .map_err(|e| e.in_context("pilot lasso logit (m = 0)"))?;
    let mut beta_tilde = fit_restricted_logit(ds, &beta_hat.support)
        .map_err(|e| e.in_context("pilot post-lasso logit (m = 0)"))?;
    for m in 1..=pcfg.m_bar {
        penalty = loadings_logit(ds, Some(&beta_tilde.beta), m, pcfg)?;
        beta_hat = solve_lasso_logit(ds, &penalty, scfg, Some(&beta_hat.coef))
            .map_err(|e| e.in_context(&format!("pilot lasso logit (m = {m})")))?;
        beta_tilde = fit_restricted_logit(ds, &beta_hat.support)
            .map_err(|e| e.in_context(&format!("pilot post-lasso logit (m = {m})")))?;
    }

    let eta_tilde = ds.design().all().predict(&beta_tilde.pairs());
    let f_hat_sq: Vec<f64> = eta_tilde.iter().map(|e| lambda_prime(*e)).collect();
    if f_hat_sq.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain(
            "a regression weight underflowed to zero (saturated pilot fit)".into(),
        ));
    }
    let one_minus_two: Vec<f64> = eta_tilde.iter().map(|e| one_minus_two_lambda(*e)).collect();

    let per_target: Result<Vec<PerTarget>> = targets
        .par_iter()
        .map(|&k| {
            estimate_one_target(ds, k, settings, &beta_hat, &f_hat_sq, &one_minus_two)
                .map_err(|e| e.in_context(&format!("target {k}")))
        })
        .collect();

    Ok(NuisanceBundle {
        beta_hat,
        beta_tilde,
        eta_tilde,
        f_hat_sq,
        targets: per_target?,
    })
}

fn estimate_one_target(
    ds: &ClusteredDataset,
    k: usize,
    settings: &Settings,
    beta_hat: &SelectionFit,
    f_hat_sq: &[f64],
    one_minus_two: &[f64],
) -> Result<PerTarget> {
    let pcfg = &settings.penalty;
    let scfg = &settings.solver;
    let g = ds.g();

    // refit with the target column always retained
    let support_k = sorted_union(&beta_hat.support, k);
    let beta_tilde_k =
        fit_restricted_logit(ds, &support_k).map_err(|e| e.in_context("per-target refit"))?;
    let bkk = beta_tilde_k.beta[k];
    let s_hat: Vec<f64> = one_minus_two.iter().map(|v| bkk * v).collect();

    let (nodewise, gamma_hat) =
        nodewise_fit(ds, f_hat_sq, k, settings).map_err(|e| e.in_context("nodewise"))?;
    let gamma_view = ds.design().drop_col(k);
    let gamma_support: Vec<usize> =
        gamma_hat.support.iter().map(|&j| gamma_view.orig_col(j)).collect();

    // auxiliary-response lasso with its own loading iterations
    let design = ds.design().all();
    let mut penalty = loadings_weighted(ds, f_hat_sq, &s_hat, None, 0, None, pcfg)?;
    let mut zeta_hat = solve_weighted_lasso(&s_hat, &design, f_hat_sq, &penalty, g, scfg, None)
        .map_err(|e| e.in_context("auxiliary lasso (m = 0)"))?;
    let mut zeta_tilde = fit_restricted_wls(&s_hat, &design, f_hat_sq, &zeta_hat.support)
        .map_err(|e| e.in_context("auxiliary post-lasso (m = 0)"))?;
    for m in 1..=pcfg.m_bar {
        penalty = loadings_weighted(ds, f_hat_sq, &s_hat, Some(&zeta_tilde.beta), m, None, pcfg)?;
        zeta_hat =
            solve_weighted_lasso(&s_hat, &design, f_hat_sq, &penalty, g, scfg, Some(&zeta_hat.coef))
                .map_err(|e| e.in_context(&format!("auxiliary lasso (m = {m})")))?;
        zeta_tilde = fit_restricted_wls(&s_hat, &design, f_hat_sq, &zeta_hat.support)
            .map_err(|e| e.in_context(&format!("auxiliary post-lasso (m = {m})")))?;
    }

    let theta = theta_row(&nodewise, f_hat_sq, g);
    let mu: Vec<f64> = zeta_tilde
        .beta
        .iter()
        .zip(&theta.theta_tilde)
        .map(|(z, t)| z + t)
        .collect();
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("nuisance vector mu for target {k} is not finite")));
    }

    Ok(PerTarget {
        k,
        beta_tilde_k,
        s_hat,
        gamma_support,
        nodewise,
        zeta_hat,
        zeta_tilde,
        theta,
        mu,
    })
}

/// T_k = {k} u support(beta_hat) u support(zeta_hat^k) u support(gamma_hat^k),
/// nodewise indices mapped back to original columns.
pub fn support_union(bundle: &NuisanceBundle, k: usize) -> Result<Vec<usize>> {
    let t = bundle
        .target(k)
        .ok_or_else(|| Error::Shape(format!("bundle has no fits for target {k}")))?;
    let mut set: Vec<usize> = Vec::new();
    set.push(k);
    set.extend_from_slice(&bundle.beta_hat.support);
    set.extend_from_slice(&t.zeta_hat.support);
    set.extend_from_slice(&t.gamma_support);
    set.sort_unstable();
    set.dedup();
    Ok(set)
}

/// Final restricted logit on the support union, the rescaled APE, and the
/// cached per-cluster orthogonal scores.
pub fn estimate_ape(
    ds: &ClusteredDataset,
    bundle: &NuisanceBundle,
    k: usize,
    settings: &Settings,
) -> Result<ApeResult> {
    let t = bundle
        .target(k)
        .ok_or_else(|| Error::Shape(format!("bundle has no fits for target {k}")))?;
    let union = support_union(bundle, k)?;
    let beta_check = fit_restricted_logit(ds, &union)
        .map_err(|e| e.in_context(&format!("final refit on {} columns", union.len())))?;

    let g = ds.g();
    let n = ds.n();
    let g_over_n = g as f64 / n as f64;
    let design = ds.design().all();
    let eta_check = design.predict(&beta_check.pairs());
    let bk = beta_check.beta[k];
    let alpha_tilde: f64 =
        eta_check.iter().map(|e| bk * lambda_prime(*e)).sum::<f64>() / g as f64;
    let ape = g_over_n * alpha_tilde;

    // per-observation orthogonal-score pieces at the pilot fit
    let mu_x = design.predict(
        &t.mu
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect::<Vec<_>>(),
    );
    let b_var = if settings.variance.use_beta_tilde_k {
        t.beta_tilde_k.beta[k]
    } else {
        bundle.beta_tilde.beta[k]
    };
    let b_boot = t.beta_tilde_k.beta[k];
    let mut boot_obs = vec![0.0f64; n];
    let mut var_obs = vec![0.0f64; n];
    for i in 0..n {
        let fp = lambda_prime(bundle.eta_tilde[i]);
        let resid = ds.y()[i] - logistic(bundle.eta_tilde[i]);
        let common = alpha_tilde * g_over_n + mu_x[i] * resid;
        boot_obs[i] = common - b_boot * fp;
        var_obs[i] = common - b_var * fp;
    }
    let scores = ds.cluster_sums(&boot_obs);
    let variance_scores = ds.cluster_sums(&var_obs);
    let sigma_sq =
        variance_scores.iter().map(|s| s * s).sum::<f64>() / g as f64;

    Ok(ApeResult {
        k,
        alpha_tilde,
        ape,
        sigma_tilde: sigma_sq.sqrt(),
        support_union: union,
        scores,
        variance_scores,
        converged: beta_check.converged,
        iterations: beta_check.iterations,
        g,
        n,
    })
}

/// Full pipeline for a target set: nuisance stage once, then one ApeResult
/// per target (deterministic order).
pub fn estimate_all(
    ds: &ClusteredDataset,
    targets: &[usize],
    settings: &Settings,
) -> Result<Vec<ApeResult>> {
    let bundle = estimate_nuisance(ds, targets, settings)?;
    targets
        .par_iter()
        .map(|&k| estimate_ape(ds, &bundle, k, settings))
        .collect()
}

/// The Neyman orthogonal score for one observation:
/// alpha * (G/n) - beta_k * lambda'(x'beta) + mu'x * (y - lambda(x'beta)).
pub fn orthogonal_score(
    y: f64,
    x: &[f64],
    k: usize,
    alpha: f64,
    beta: &[f64],
    mu: &[f64],
    g: usize,
    n: usize,
) -> f64 {
    let xb: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
    let mux: f64 = x.iter().zip(mu).map(|(a, b)| a * b).sum();
    alpha * (g as f64 / n as f64) - beta[k] * lambda_prime(xb) + mux * (y - logistic(xb))
}

/// Plug-in rescaled APE at an arbitrary coefficient vector:
/// (1/G) sum_g sum_i beta_k * lambda'(x'beta).
pub fn plug_in_alpha(ds: &ClusteredDataset, beta: &[f64], k: usize) -> f64 {
    let pairs: Vec<(usize, f64)> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| (j, *b))
        .collect();
    let eta = ds.design().all().predict(&pairs);
    eta.iter().map(|e| beta[k] * lambda_prime(*e)).sum::<f64>() / ds.g() as f64
}
