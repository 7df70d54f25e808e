//! Numerically stable logistic primitives plus unpenalized pooled logit and
//! weighted least squares restricted to a given support.
//!
//! Both fits minimize cluster-averaged objectives: (1/G) sum_g sum_i loss.
//! The minimizer does not depend on the normalization, so the WLS helper
//! averages over rows instead of clusters.

use crate::data::{ClusteredDataset, DesignRef};
use crate::error::{Error, Result};

/// Logistic CDF. The two branches share exp(-|t|); for t < 0 the complement
/// 1 - 1/(1+e^t) is exact by Sterbenz, so lambda(t) + lambda(-t) == 1.
#[inline]
pub fn lambda(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        1.0 - 1.0 / (1.0 + t.exp())
    }
}

/// Logistic density lambda'(t) = e^{-|t|} / (1 + e^{-|t|})^2, in (0, 1/4].
/// Computed directly so it stays positive far into the tails (|t| < ~745).
#[inline]
pub fn lambda_prime(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    let d = 1.0 + e;
    (e / d / d).min(0.25)
}

/// 1 - 2*lambda(t) = -tanh(t/2); the sign flips where lambda crosses 1/2.
#[inline]
pub fn one_minus_two_lambda(t: f64) -> f64 {
    -(0.5 * t).tanh()
}

/// log(1 + exp(t)), stable over the whole double range.
#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic quantile log(u / (1-u)).
#[inline]
pub fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

/// Pooled logit negative log-likelihood, cluster-averaged.
pub fn logit_loss(ds: &ClusteredDataset, eta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (yi, ei) in ds.y().iter().zip(eta) {
        acc += -yi * ei + softplus(*ei);
    }
    acc / ds.g() as f64
}

/// An unpenalized fit restricted to a support; coefficients off the support
/// are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedFit {
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

impl RestrictedFit {
    fn zeros(p: usize) -> RestrictedFit {
        RestrictedFit {
            beta: vec![0.0; p],
            support: Vec::new(),
            converged: true,
            iterations: 0,
            final_gradient_norm: 0.0,
        }
    }

    /// Nonzero (index, coefficient) pairs.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.support.iter().map(|&j| (j, self.beta[j])).collect()
    }
}

const COEF_TOL: f64 = 1e-8;
const GRAD_TOL: f64 = 1e-9;
const MAX_NEWTON_ITER: usize = 100;
const MAX_HALVINGS: usize = 50;
/// |beta_j| beyond this means lambda has saturated numerically.
const SEPARATION_CAP: f64 = 30.0;
const RIDGE_LADDER: [f64; 3] = [0.0, 1e-10, 1e-8];

/// Cholesky solve of a symmetric positive-definite system (row-major `a`),
/// with an escalating diagonal ridge on factorization failure.
pub(crate) fn solve_sym_ridge(a: &[f64], b: &[f64], s: usize) -> Option<Vec<f64>> {
    'ridge: for ridge in RIDGE_LADDER {
        let mut l = a.to_vec();
        for d in 0..s {
            l[d * s + d] += ridge;
        }
        // in-place lower Cholesky
        for j in 0..s {
            for k in 0..j {
                let ljk = l[j * s + k];
                for i in j..s {
                    l[i * s + j] -= l[i * s + k] * ljk;
                }
            }
            let d = l[j * s + j];
            if !(d > 0.0) || !d.is_finite() {
                continue 'ridge;
            }
            let inv = 1.0 / d.sqrt();
            for i in j..s {
                l[i * s + j] *= inv;
            }
        }
        // forward/back substitution
        let mut x = b.to_vec();
        for j in 0..s {
            for k in 0..j {
                x[j] -= l[j * s + k] * x[k];
            }
            x[j] /= l[j * s + j];
        }
        for j in (0..s).rev() {
            for k in j + 1..s {
                x[j] -= l[k * s + j] * x[k];
            }
            x[j] /= l[j * s + j];
        }
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    None
}

fn check_support(support: &[usize], ncols: usize) -> Result<()> {
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Shape("support must be sorted and unique".into()));
        }
    }
    if let Some(&last) = support.last() {
        if last >= ncols {
            return Err(Error::Shape(format!(
                "support index {last} out of range (ncols = {ncols})"
            )));
        }
    }
    Ok(())
}

/// Pooled logit restricted to `support`, by damped Newton with step-halving.
/// Converges when the coefficient step or the restricted gradient max-norm
/// is small; errors on separation or a Hessian that stays singular after the
/// ridge ladder.
pub fn fit_restricted_logit(ds: &ClusteredDataset, support: &[usize]) -> Result<RestrictedFit> {
    let p = ds.p();
    check_support(support, p)?;
    if support.is_empty() {
        // the loss is constant over the zero vector
        return Ok(RestrictedFit::zeros(p));
    }
    let s = support.len();
    let n = ds.n();
    let g = ds.g() as f64;
    let design = ds.design().all();
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| design.col_dense(j)).collect();

    let mut beta_s = vec![0.0f64; s];
    let mut eta = vec![0.0f64; n];
    let mut loss = logit_loss_eta(ds, &eta);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;

    for iter in 0..MAX_NEWTON_ITER {
        iterations = iter + 1;
        // restricted gradient (1/G) X_S'(lambda - y) and Hessian (1/G) X_S' W X_S
        let mut grad = vec![0.0f64; s];
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            let mu = lambda(eta[i]);
            w[i] = lambda_prime(eta[i]);
            let r = mu - ds.y()[i];
            for (a, col) in cols.iter().enumerate() {
                grad[a] += r * col[i];
            }
        }
        for ga in grad.iter_mut() {
            *ga /= g;
        }
        grad_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad_norm <= GRAD_TOL {
            converged = true;
            break;
        }

        let mut hess = vec![0.0f64; s * s];
        for a in 0..s {
            for b in a..s {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += w[i] * cols[a][i] * cols[b][i];
                }
                acc /= g;
                hess[a * s + b] = acc;
                hess[b * s + a] = acc;
            }
        }
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let step = solve_sym_ridge(&hess, &rhs, s).ok_or_else(|| Error::Singular {
            context: format!("restricted logit Hessian on support {support:?}"),
        })?;

        // step-halving line search on the loss
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta_s.iter().zip(&step).map(|(b, d)| b + t * d).collect();
            let mut eta_c = vec![0.0f64; n];
            for (a, col) in cols.iter().enumerate() {
                let ba = cand[a];
                if ba != 0.0 {
                    for i in 0..n {
                        eta_c[i] += ba * col[i];
                    }
                }
            }
            let loss_c = logit_loss_eta(ds, &eta_c);
            if loss_c <= loss {
                let max_delta = beta_s
                    .iter()
                    .zip(&cand)
                    .fold(0.0f64, |m, (o, c)| m.max((c - o).abs()));
                beta_s = cand;
                eta = eta_c;
                loss = loss_c;
                accepted = true;
                if max_delta < COEF_TOL {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // cannot decrease along the Newton direction: already optimal to
            // working precision
            converged = true;
            break;
        }
        if beta_s.iter().any(|b| b.abs() > SEPARATION_CAP) {
            return Err(Error::Separation {
                context: format!("restricted logit on support {support:?}"),
            });
        }
        if converged {
            break;
        }
    }

    if !converged {
        return Err(Error::NonConvergence {
            context: format!("restricted logit on support {support:?}"),
            kkt_violation: grad_norm,
        });
    }

    let mut beta = vec![0.0f64; p];
    for (a, &j) in support.iter().enumerate() {
        beta[j] = beta_s[a];
    }
    Ok(RestrictedFit {
        beta,
        support: support.to_vec(),
        converged,
        iterations,
        final_gradient_norm: grad_norm,
    })
}

fn logit_loss_eta(ds: &ClusteredDataset, eta: &[f64]) -> f64 {
    logit_loss(ds, eta)
}

/// Weighted least squares of `y` on the support columns of `x`. Solved by
/// normal equations with the same ridge ladder; coefficients off the support
/// are exactly zero. All-zero weights are rejected.
pub fn fit_restricted_wls(
    y: &[f64],
    x: &DesignRef<'_>,
    weights: &[f64],
    support: &[usize],
) -> Result<RestrictedFit> {
    let ncols = x.ncols();
    let n = x.nrows();
    check_support(support, ncols)?;
    if y.len() != n || weights.len() != n {
        return Err(Error::Shape(format!(
            "wls: y has {} entries, weights {}, design {} rows",
            y.len(),
            weights.len(),
            n
        )));
    }
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::Domain("wls: negative weight".into()));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::Domain("wls: all weights are zero".into()));
    }
    if support.is_empty() {
        return Ok(RestrictedFit::zeros(ncols));
    }

    let s = support.len();
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| x.col_dense(j)).collect();
    let scale = 1.0 / n as f64;
    let mut a = vec![0.0f64; s * s];
    let mut b = vec![0.0f64; s];
    for i in 0..n {
        let wi = weights[i];
        if wi == 0.0 {
            continue;
        }
        let wy = wi * y[i];
        for r in 0..s {
            let xr = cols[r][i];
            b[r] += wy * xr;
            let wxr = wi * xr;
            for c in r..s {
                a[r * s + c] += wxr * cols[c][i];
            }
        }
    }
    for r in 0..s {
        b[r] *= scale;
        for c in r..s {
            a[r * s + c] *= scale;
            a[c * s + r] = a[r * s + c];
        }
    }

    let sol = solve_sym_ridge(&a, &b, s).ok_or_else(|| Error::Singular {
        context: format!("wls normal equations on support {support:?}"),
    })?;

    // residual orthogonality diagnostic: max_j |(1/n) sum w r x_j|
    let mut resid = y.to_vec();
    for (r, col) in sol.iter().zip(&cols) {
        if *r != 0.0 {
            for i in 0..n {
                resid[i] -= r * col[i];
            }
        }
    }
    let mut grad_norm = 0.0f64;
    for col in &cols {
        let mut acc = 0.0;
        for i in 0..n {
            acc += weights[i] * resid[i] * col[i];
        }
        grad_norm = grad_norm.max((acc * scale).abs());
    }

    let mut beta = vec![0.0f64; ncols];
    for (r, &j) in support.iter().enumerate() {
        beta[j] = sol[r];
    }
    Ok(RestrictedFit {
        beta,
        support: support.to_vec(),
        converged: true,
        iterations: 1,
        final_gradient_norm: grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Cluster;

    fn dataset(rows: Vec<(String, f64, Vec<f64>)>) -> ClusteredDataset {
        let mut order: Vec<String> = Vec::new();
        let mut grouped: std::collections::HashMap<String, Vec<(f64, Vec<f64>)>> =
            std::collections::HashMap::new();
        for (id, y, x) in rows {
            if !grouped.contains_key(&id) {
                order.push(id.clone());
            }
            grouped.entry(id).or_default().push((y, x));
        }
        let clusters = order
            .into_iter()
            .map(|id| Cluster { rows: grouped.remove(&id).unwrap(), id })
            .collect();
        ClusteredDataset::from_clusters(clusters).unwrap()
    }

    #[test]
    fn link_identities() {
        let mut t = -30.0;
        while t <= 30.0 {
            let lp = lambda_prime(t);
            let viaprod = lambda(t) * (1.0 - lambda(t));
            assert!((lp - viaprod).abs() <= 1e-14, "t={t}: {lp} vs {viaprod}");
            assert_eq!(lambda(t) + lambda(-t), 1.0, "t={t}");
            t += 0.137;
        }
        assert!(softplus(-745.0).is_finite() && softplus(-745.0) >= 0.0);
        assert!(softplus(745.0).is_finite());
        assert!((softplus(745.0) - 745.0).abs() < 1e-12);
        // softplus(t) ~ log(2) at zero
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(lambda_prime(0.0) == 0.25);
    }

    #[test]
    fn intercept_only_mle_is_log_odds() {
        // 1 success out of 4 => beta = log(0.25/0.75)
        let ds = dataset(vec![
            ("a".into(), 1.0, vec![1.0]),
            ("a".into(), 0.0, vec![1.0]),
            ("b".into(), 0.0, vec![1.0]),
            ("b".into(), 0.0, vec![1.0]),
        ]);
        let fit = fit_restricted_logit(&ds, &[0]).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - (0.25f64 / 0.75).ln()).abs() < 1e-9);
    }

    #[test]
    fn empty_support_returns_zeros() {
        let ds = dataset(vec![("a".into(), 1.0, vec![1.0, 2.0])]);
        let fit = fit_restricted_logit(&ds, &[]).unwrap();
        assert_eq!(fit.beta, vec![0.0, 0.0]);
        assert!(fit.converged);
    }

    #[test]
    fn separation_is_detected() {
        // y perfectly ordered by x: coefficient diverges
        let mut rows = Vec::new();
        for i in 0..20 {
            let x = i as f64 - 9.5;
            rows.push((format!("c{i}"), f64::from(u8::from(x > 0.0)), vec![x]));
        }
        let ds = dataset(rows);
        let err = fit_restricted_logit(&ds, &[0]).unwrap_err();
        assert!(matches!(err, Error::Separation { .. }), "{err:?}");
    }

    #[test]
    fn two_dim_fit_matches_grid_search() {
        // fixed small dataset, oracle = refined 2-d grid search on the loss
        let mut rows = Vec::new();
        let mut state = 9u64;
        let mut unif = || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / 9007199254740992.0
        };
        for i in 0..60 {
            let x1 = unif() * 2.0 - 1.0;
            let x2 = unif() * 2.0 - 1.0;
            let pr = lambda(0.8 * x1 - 0.5 * x2);
            let y = f64::from(u8::from(unif() < pr));
            rows.push((format!("g{}", i % 15), y, vec![x1, x2]));
        }
        let ds = dataset(rows);
        let fit = fit_restricted_logit(&ds, &[0, 1]).unwrap();

        let loss_at = |b1: f64, b2: f64| {
            let eta: Vec<f64> = (0..ds.n())
                .map(|i| b1 * ds.design().entry(i, 0) + b2 * ds.design().entry(i, 1))
                .collect();
            logit_loss(&ds, &eta)
        };
        // staged grid refinement around the box [-4, 4]^2; each stage
        // re-centers on the grid argmin and keeps two old cells of slack
        let (mut c1, mut c2, mut half) = (0.0, 0.0, 4.0);
        let m = 100usize;
        for _ in 0..4 {
            let (mut best, mut b1, mut b2) = (f64::INFINITY, c1, c2);
            for a in 0..=m {
                for b in 0..=m {
                    let t1 = c1 - half + 2.0 * half * a as f64 / m as f64;
                    let t2 = c2 - half + 2.0 * half * b as f64 / m as f64;
                    let l = loss_at(t1, t2);
                    if l < best {
                        best = l;
                        b1 = t1;
                        b2 = t2;
                    }
                }
            }
            c1 = b1;
            c2 = b2;
            half = 4.0 * half / m as f64;
        }
        assert!(
            (fit.beta[0] - c1).abs() < 1e-4 && (fit.beta[1] - c2).abs() < 1e-4,
            "newton ({}, {}) vs grid ({c1}, {c2})",
            fit.beta[0],
            fit.beta[1]
        );
    }

    #[test]
    fn logit_first_order_condition_holds_on_support() {
        let mut rows = Vec::new();
        let mut state = 77u64;
        let mut unif = || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / 9007199254740992.0
        };
        for i in 0..80 {
            let x = vec![1.0, unif() * 2.0 - 1.0, unif() * 2.0 - 1.0];
            let pr = lambda(-0.3 + x[1] * 0.9);
            rows.push((format!("g{}", i % 20), f64::from(u8::from(unif() < pr)), x));
        }
        let ds = dataset(rows);
        let support = vec![0usize, 1, 2];
        let fit = fit_restricted_logit(&ds, &support).unwrap();
        let eta: Vec<f64> = (0..ds.n())
            .map(|i| (0..3).map(|j| fit.beta[j] * ds.design().entry(i, j)).sum())
            .collect();
        for &j in &support {
            let mut acc = 0.0;
            for i in 0..ds.n() {
                acc += (ds.y()[i] - lambda(eta[i])) * ds.design().entry(i, j);
            }
            acc /= ds.g() as f64;
            assert!(acc.abs() <= 1e-7, "foc violated at {j}: {acc}");
        }
    }

    #[test]
    fn fits_are_invariant_to_cluster_and_row_order() {
        let mut rows = Vec::new();
        let mut state = 5u64;
        let mut unif = || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / 9007199254740992.0
        };
        for i in 0..40 {
            let x = vec![1.0, unif() - 0.5];
            let y = f64::from(u8::from(unif() < 0.4));
            rows.push((format!("g{}", i % 8), y, x));
        }
        let ds1 = dataset(rows.clone());
        rows.reverse();
        let ds2 = dataset(rows);
        let f1 = fit_restricted_logit(&ds1, &[0, 1]).unwrap();
        let f2 = fit_restricted_logit(&ds2, &[0, 1]).unwrap();
        for j in 0..2 {
            assert!((f1.beta[j] - f2.beta[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn wls_single_regressor_closed_form() {
        let x_rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let design = crate::data::DesignMatrix::from_rows(&x_rows);
        let y = [2.0, 3.9, 6.1];
        let w = [1.0, 1.0, 1.0];
        let fit = fit_restricted_wls(&y, &design.all(), &w, &[0]).unwrap();
        let num: f64 = (0..3).map(|i| x_rows[i][0] * y[i]).sum();
        let den: f64 = (0..3).map(|i| x_rows[i][0] * x_rows[i][0]).sum();
        assert!((fit.beta[0] - num / den).abs() < 1e-12);
    }

    #[test]
    fn wls_all_zero_weights_is_an_error() {
        let design = crate::data::DesignMatrix::from_rows(&[vec![1.0], vec![2.0]]);
        let err = fit_restricted_wls(&[1.0, 2.0], &design.all(), &[0.0, 0.0], &[0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn wls_matches_explicit_normal_equation_inverse() {
        // 4-column random problem vs an explicit Gauss-Jordan solve
        let mut state = 31u64;
        let mut unif = || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / 9007199254740992.0
        };
        let n = 50;
        let s = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..s).map(|_| unif() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| unif() * 4.0 - 2.0).collect();
        let w: Vec<f64> = (0..n).map(|_| 0.05 + 0.2 * unif()).collect();
        let design = crate::data::DesignMatrix::from_rows(&rows);
        let fit = fit_restricted_wls(&y, &design.all(), &w, &[0, 1, 2, 3]).unwrap();

        // oracle: dense X'WX and X'Wy solved by Gauss-Jordan elimination
        let mut a = vec![vec![0.0f64; s + 1]; s];
        for i in 0..n {
            for r in 0..s {
                for c in 0..s {
                    a[r][c] += w[i] * rows[i][r] * rows[i][c];
                }
                a[r][s] += w[i] * rows[i][r] * y[i];
            }
        }
        for col in 0..s {
            let piv = (col..s)
                .max_by(|&x, &z| a[x][col].abs().total_cmp(&a[z][col].abs()))
                .unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for c in col..=s {
                a[col][c] /= d;
            }
            for r in 0..s {
                if r != col {
                    let f = a[r][col];
                    for c in col..=s {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        for j in 0..s {
            assert!(
                (fit.beta[j] - a[j][s]).abs() < 1e-8,
                "coef {j}: {} vs {}",
                fit.beta[j],
                a[j][s]
            );
        }
        // residual orthogonality, relative
        let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        for j in 0..s {
            let mut acc = 0.0;
            for i in 0..n {
                let pred: f64 = (0..s).map(|c| fit.beta[c] * rows[i][c]).sum();
                acc += w[i] * (y[i] - pred) * rows[i][j];
            }
            assert!(acc.abs() / scale < 1e-8, "orthogonality at {j}: {acc}");
        }
    }

    #[test]
    fn wls_empty_support_is_zero() {
        let design = crate::data::DesignMatrix::from_rows(&[vec![1.0, 2.0]]);
        let fit = fit_restricted_wls(&[1.0], &design.all(), &[1.0], &[]).unwrap();
        assert_eq!(fit.beta, vec![0.0, 0.0]);
    }
}
