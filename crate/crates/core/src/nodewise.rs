//! Cluster nodewise post-lasso rows of the approximate inverse of the
//! weighted Gram matrix: regress one covariate on the rest under the
//! estimated weights, refit unpenalized on the selected support, and read
//! off the residual variance tau^2 and the row of T^-2 C.

use crate::config::Settings;
use crate::data::ClusteredDataset;
use crate::error::{Error, Result};
use crate::lasso::{solve_weighted_lasso, SelectionFit};
use crate::logit::fit_restricted_wls;
use crate::penalty::loadings_weighted;

/// Guards the division by tau^2 only; far below any plausible eigenvalue
/// scale.
const TAU_MIN: f64 = 1e-12;

/// One nodewise regression: post-lasso coefficients over the columns other
/// than `k` (problem indexing skips k) and the weighted residual variance.
#[derive(Debug, Clone)]
pub struct NodewiseRow {
    pub k: usize,
    /// Post-lasso coefficients, length p - 1, zero off the support.
    pub gamma_tilde: Vec<f64>,
    pub tau_sq: f64,
    /// Support selected by the lasso stage (problem indexing).
    pub support: Vec<usize>,
}

/// One row of the approximate precision estimate, embedded into p columns.
#[derive(Debug, Clone)]
pub struct ThetaRow {
    pub k: usize,
    pub theta_tilde: Vec<f64>,
}

/// Map a (p-1)-vector over columns-without-k back into p slots, placing
/// `diag` at slot k.
pub fn embed_skipping(k: usize, values: &[f64], diag: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    out.extend_from_slice(&values[..k]);
    out.push(diag);
    out.extend_from_slice(&values[k..]);
    out
}

/// Inverse of `embed_skipping`: drop slot k.
pub fn extract_skipping(k: usize, full: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(full.len() - 1);
    out.extend_from_slice(&full[..k]);
    out.extend_from_slice(&full[k + 1..]);
    out
}

/// Lasso (with the iterated weighted loadings) then post-lasso WLS of
/// covariate `k` on the remaining columns, then the residual variance
/// tau^2 = (1/G) sum_g sum_i f^2 (d - x'gamma)^2.
///
/// Also returns the lasso stage so callers can build support unions.
pub fn nodewise_fit(
    ds: &ClusteredDataset,
    f_hat_sq: &[f64],
    k: usize,
    settings: &Settings,
) -> Result<(NodewiseRow, SelectionFit)> {
    let p = ds.p();
    if k >= p {
        return Err(Error::Shape(format!("nodewise target {k} out of range (p = {p})")));
    }
    let g = ds.g();
    let target = ds.design().all().col_dense(k);
    let design = ds.design().drop_col(k);

    if p == 1 {
        // no regressors once k is excluded
        let tau_sq = tau_sq_of(ds, f_hat_sq, &target, &design, &[]);
        if tau_sq <= TAU_MIN {
            return Err(Error::NearSingular { k, tau_sq });
        }
        let row = NodewiseRow { k, gamma_tilde: Vec::new(), tau_sq, support: Vec::new() };
        let empty = SelectionFit {
            coef: Vec::new(),
            support: Vec::new(),
            objective: 0.0,
            kkt_violation: 0.0,
            iterations: 0,
        };
        return Ok((row, empty));
    }

    let pcfg = &settings.penalty;
    let scfg = &settings.solver;
    let mut penalty = loadings_weighted(ds, f_hat_sq, &target, None, 0, Some(k), pcfg)?;
    let mut hat = solve_weighted_lasso(&target, &design, f_hat_sq, &penalty, g, scfg, None)?;
    let mut tilde = fit_restricted_wls(&target, &design, f_hat_sq, &hat.support)?;
    for m in 1..=pcfg.m_bar {
        penalty = loadings_weighted(ds, f_hat_sq, &target, Some(&tilde.beta), m, Some(k), pcfg)?;
        hat = solve_weighted_lasso(&target, &design, f_hat_sq, &penalty, g, scfg, Some(&hat.coef))?;
        tilde = fit_restricted_wls(&target, &design, f_hat_sq, &hat.support)?;
    }

    let tau_sq = tau_sq_of(ds, f_hat_sq, &target, &design, &tilde.pairs());
    if tau_sq <= TAU_MIN {
        return Err(Error::NearSingular { k, tau_sq });
    }
    let row = NodewiseRow { k, gamma_tilde: tilde.beta, tau_sq, support: hat.support.clone() };
    Ok((row, hat))
}

fn tau_sq_of(
    ds: &ClusteredDataset,
    f_hat_sq: &[f64],
    target: &[f64],
    design: &crate::data::DesignRef<'_>,
    pairs: &[(usize, f64)],
) -> f64 {
    let fitted = design.predict(pairs);
    let mut acc = 0.0;
    for i in 0..ds.n() {
        let r = target[i] - fitted[i];
        acc += f_hat_sq[i] * r * r;
    }
    acc / ds.g() as f64
}

/// |tau^2 - d' F^2 (d - X gamma) / G|: zero (to rounding) at any fit that
/// satisfies the post-lasso normal equations.
pub fn tau_sq_identity_check(row: &NodewiseRow, ds: &ClusteredDataset, f_hat_sq: &[f64]) -> f64 {
    let target = ds.design().all().col_dense(row.k);
    let design = ds.design().drop_col(row.k);
    let pairs: Vec<(usize, f64)> = row
        .gamma_tilde
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect();
    let fitted = design.predict(&pairs);
    let mut cross = 0.0;
    for i in 0..ds.n() {
        cross += target[i] * f_hat_sq[i] * (target[i] - fitted[i]);
    }
    cross /= ds.g() as f64;
    (row.tau_sq - cross).abs()
}

/// Embed the nodewise row into a full theta row:
/// [-gamma, 1 at slot k] * (1/(G tau^2)) * sum f^2.
pub fn theta_row(row: &NodewiseRow, f_hat_sq: &[f64], g: usize) -> ThetaRow {
    let scale = f_hat_sq.iter().sum::<f64>() / (g as f64 * row.tau_sq);
    let negated: Vec<f64> = row.gamma_tilde.iter().map(|v| -v).collect();
    let mut theta_tilde = embed_skipping(row.k, &negated, 1.0);
    for v in theta_tilde.iter_mut() {
        *v *= scale;
    }
    ThetaRow { k: row.k, theta_tilde }
}
