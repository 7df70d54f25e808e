//! Penalty levels and iterative diagonal loadings for the three penalized
//! problems.
//!
//! Levels: lambda = c * sqrt(G) * Phi^-1(1 - gamma/(2p)) for the logit lasso,
//! with 2p(p-1) and 2p^2 in place of 2p for the nodewise and weighted
//! problems. Loadings start from a design-moment formula at m = 0 and are
//! refined from cluster-level score second moments once a pilot fit exists:
//!
//!   logit    m=0: l_j = 1/2 * { (1/G) sum_g n_g sum_i x_ij^2 }^(1/2)
//!            m>0: l_j = { (1/G) sum_g ( sum_i (y - L(x'b)) x_ij )^2 }^(1/2)
//!   weighted m=0: l_k = 2 max_{g,i} |f x_ik| { (1/G) sum_g ( sum_i f t )^2 }^(1/2)
//!            m>0: l_k = 2 { (1/G) sum_g ( sum_i f^2 (t - x'c) x_ik )^2 }^(1/2)
//!
//! where t is the working response (a covariate column for the nodewise
//! problem, the auxiliary regressor for the weighted one) and f = sqrt(f^2)
//! the estimated regression weight.

use crate::config::PenaltyConfig;
use crate::data::ClusteredDataset;
use crate::error::{Error, Result};
use crate::logit::lambda as logistic;

/// Which penalized problem a (lambda, loadings) pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    LogitBeta,
    NodewiseGamma,
    WeightedZeta,
}

/// Per-coordinate diagonal loadings plus the scalar level for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyLoadings {
    pub lambda: f64,
    pub loadings: Vec<f64>,
    pub iteration: usize,
    pub kind: PenaltyKind,
}

impl PenaltyLoadings {
    fn checked(self) -> Result<PenaltyLoadings> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Domain(format!("penalty level {} invalid", self.lambda)));
        }
        if self.loadings.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Domain("penalty loading is negative or non-finite".into()));
        }
        Ok(self)
    }
}

// Wichura's AS241 PPND16 rational approximations (double-precision branch).
const A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Standard normal quantile Phi^-1(q) for q in (0,1), accurate to roughly
/// machine precision (AS241, PPND16).
pub fn inv_norm_cdf(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("inv_norm_cdf: q = {q} outside (0,1)")));
    }
    let r = q - 0.5;
    if r.abs() <= 0.425 {
        let s = 0.180625 - r * r;
        return Ok(r * poly(&A, s) / poly(&B, s));
    }
    let tail = if r < 0.0 { q } else { 1.0 - q };
    let t = (-tail.ln()).sqrt();
    let x = if t <= 5.0 {
        let s = t - 1.6;
        poly(&C, s) / poly(&D, s)
    } else {
        let s = t - 5.0;
        poly(&E, s) / poly(&F, s)
    };
    Ok(if r < 0.0 { -x } else { x })
}

/// Penalty level for one problem kind. Requires G >= 3; honors
/// `lambda_override` when set.
pub fn lambda_for(kind: PenaltyKind, g: usize, p: usize, cfg: &PenaltyConfig) -> Result<f64> {
    if let Some(lambda) = cfg.lambda_override {
        return Ok(lambda);
    }
    if g < 3 {
        return Err(Error::Domain(format!("penalty level needs G >= 3, got {g}")));
    }
    if p < 1 {
        return Err(Error::Domain("penalty level needs p >= 1".into()));
    }
    let gamma = cfg.gamma_rule().value(g);
    let p = p as f64;
    let denom = match kind {
        PenaltyKind::LogitBeta => 2.0 * p,
        PenaltyKind::NodewiseGamma => {
            if p < 2.0 {
                return Err(Error::Domain(
                    "nodewise penalty level needs p >= 2".into(),
                ));
            }
            2.0 * p * (p - 1.0)
        }
        PenaltyKind::WeightedZeta => 2.0 * p * p,
    };
    // Phi^-1(1 - t) evaluated as -Phi^-1(t): identical by symmetry and it
    // avoids rounding the tiny tail against 1
    let quantile = -inv_norm_cdf(gamma / denom)?;
    Ok(cfg.c * (g as f64).sqrt() * quantile)
}

fn zero_intercept_loading(
    loadings: &mut [f64],
    ds: &ClusteredDataset,
    excluded_col: Option<usize>,
    cfg: &PenaltyConfig,
) {
    if cfg.penalize_intercept {
        return;
    }
    let Some(ic) = ds.intercept_col() else { return };
    let view_idx = match excluded_col {
        Some(k) if ic == k => return,
        Some(k) if ic > k => ic - 1,
        _ => ic,
    };
    if view_idx < loadings.len() {
        loadings[view_idx] = 0.0;
    }
}

/// Loadings for the lasso logit. `beta_tilde` is the post-lasso pilot from
/// the previous loading iteration; required for m >= 1.
pub fn loadings_logit(
    ds: &ClusteredDataset,
    beta_tilde: Option<&[f64]>,
    m: usize,
    cfg: &PenaltyConfig,
) -> Result<PenaltyLoadings> {
    let g = ds.g() as f64;
    let design = ds.design().all();
    let p = ds.p();
    let mut loadings = vec![0.0f64; p];
    if m == 0 {
        // per-observation weight n_g of the observation's own cluster
        let ng: Vec<f64> = (0..ds.n())
            .map(|i| ds.cluster_size(ds.row_cluster()[i] as usize) as f64)
            .collect();
        for (j, l) in loadings.iter_mut().enumerate() {
            *l = 0.5 * (design.weighted_sq_col(j, &ng) / g).sqrt();
        }
    } else {
        let beta = beta_tilde.ok_or_else(|| {
            Error::Domain("loadings_logit: m >= 1 needs the previous post-lasso fit".into())
        })?;
        if beta.len() != p {
            return Err(Error::Shape("loadings_logit: beta length != p".into()));
        }
        let pairs: Vec<(usize, f64)> = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, b)| (j, *b))
            .collect();
        let eta = design.predict(&pairs);
        let score: Vec<f64> = ds
            .y()
            .iter()
            .zip(&eta)
            .map(|(y, e)| y - logistic(*e))
            .collect();
        for (j, l) in loadings.iter_mut().enumerate() {
            *l = design.cluster_sq_mean(j, &score, ds).sqrt();
        }
    }
    zero_intercept_loading(&mut loadings, ds, None, cfg);
    let lambda = lambda_for(PenaltyKind::LogitBeta, ds.g(), p, cfg)?;
    PenaltyLoadings { lambda, loadings, iteration: m, kind: PenaltyKind::LogitBeta }.checked()
}

/// Loadings for a weighted lasso: the nodewise problem when `excluded_col`
/// is set (target = that covariate column), the auxiliary-response problem
/// otherwise. `coef_tilde` is the previous post-lasso fit over the problem's
/// own column indexing; required for m >= 1.
pub fn loadings_weighted(
    ds: &ClusteredDataset,
    f_hat_sq: &[f64],
    target: &[f64],
    coef_tilde: Option<&[f64]>,
    m: usize,
    excluded_col: Option<usize>,
    cfg: &PenaltyConfig,
) -> Result<PenaltyLoadings> {
    let n = ds.n();
    if f_hat_sq.len() != n || target.len() != n {
        return Err(Error::Shape("loadings_weighted: weight/target length != n".into()));
    }
    if f_hat_sq.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("loadings_weighted: nonpositive weight".into()));
    }
    debug_assert!(f_hat_sq.iter().all(|w| *w <= 0.25 + 1e-12));
    let design = match excluded_col {
        Some(k) => ds.design().drop_col(k),
        None => ds.design().all(),
    };
    let cols = design.ncols();
    let g = ds.g() as f64;
    let kind = match excluded_col {
        Some(_) => PenaltyKind::NodewiseGamma,
        None => PenaltyKind::WeightedZeta,
    };
    let mut loadings = vec![0.0f64; cols];
    if m == 0 {
        let f_hat: Vec<f64> = f_hat_sq.iter().map(|w| w.sqrt()).collect();
        let ft: Vec<f64> = f_hat.iter().zip(target).map(|(f, t)| f * t).collect();
        let base = (ds.cluster_sums(&ft).iter().map(|s| s * s).sum::<f64>() / g).sqrt();
        for (k, l) in loadings.iter_mut().enumerate() {
            *l = 2.0 * design.max_abs_scaled(k, &f_hat) * base;
        }
    } else {
        let coef = coef_tilde.ok_or_else(|| {
            Error::Domain("loadings_weighted: m >= 1 needs the previous post-lasso fit".into())
        })?;
        if coef.len() != cols {
            return Err(Error::Shape(
                "loadings_weighted: coefficient length != problem columns".into(),
            ));
        }
        let pairs: Vec<(usize, f64)> = coef
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, b)| (j, *b))
            .collect();
        let fitted = design.predict(&pairs);
        let v: Vec<f64> = (0..n)
            .map(|i| f_hat_sq[i] * (target[i] - fitted[i]))
            .collect();
        for (k, l) in loadings.iter_mut().enumerate() {
            *l = 2.0 * design.cluster_sq_mean(k, &v, ds).sqrt();
        }
    }
    zero_intercept_loading(&mut loadings, ds, excluded_col, cfg);
    let lambda = lambda_for(kind, ds.g(), ds.p(), cfg)?;
    PenaltyLoadings { lambda, loadings, iteration: m, kind }.checked()
}
