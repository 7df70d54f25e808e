//! Runtime settings: penalty rule parameters, solver tolerances, and the
//! variance-estimator switch. Field names match the config-file keys
//! (`penalty.c`, `solver.tol`, ...).

use serde::{Deserialize, Serialize};

/// Confidence parameter rule for the penalty level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaRule {
    /// 0.1 / log(G), clamped to [1/G, 1/log G].
    Default,
    /// A fixed value, used verbatim.
    Fixed(f64),
}

impl GammaRule {
    pub fn value(&self, g: usize) -> f64 {
        match self {
            GammaRule::Default => {
                let lg = (g as f64).ln();
                let raw = 0.1 / lg;
                raw.clamp(1.0 / g as f64, 1.0 / lg)
            }
            GammaRule::Fixed(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    /// Slack constant c in lambda = c * sqrt(G) * Phi^-1(...).
    pub c: f64,
    /// Confidence parameter gamma; `None` selects the default rule.
    pub gamma: Option<f64>,
    /// Number of loading-refinement iterations (m-bar).
    pub m_bar: usize,
    /// When false, a dataset-declared intercept column gets a zero loading.
    pub penalize_intercept: bool,
    /// Force a specific lambda for every penalized problem (testing aid).
    pub lambda_override: Option<f64>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            c: 1.1,
            gamma: None,
            m_bar: 1,
            penalize_intercept: true,
            lambda_override: None,
        }
    }
}

impl PenaltyConfig {
    pub fn gamma_rule(&self) -> GammaRule {
        match self.gamma {
            Some(v) => GammaRule::Fixed(v),
            None => GammaRule::Default,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// KKT certificate tolerance for the penalized solvers.
    pub tol: f64,
    /// Maximum outer (reweighting) iterations for the lasso logit.
    pub max_outer: usize,
    /// Maximum coordinate-descent sweeps per inner solve.
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_outer: 200,
            max_sweeps: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VarianceConfig {
    /// Use the per-target refit coefficient in the variance scores instead of
    /// the plain post-lasso one (sensitivity switch; default is the literal
    /// per-formula behavior, which differs between variance and bootstrap).
    pub use_beta_tilde_k: bool,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            use_beta_tilde_k: false,
        }
    }
}

/// Bundle of all tunables consumed by the estimation pipeline.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub penalty: PenaltyConfig,
    pub solver: SolverConfig,
    pub variance: VarianceConfig,
}
