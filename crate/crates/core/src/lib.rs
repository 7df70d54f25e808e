//! Post-double-selection estimation, cluster-robust variance estimation, and
//! multiplier-cluster-bootstrap simultaneous inference for average partial
//! effects of high-dimensional lasso logit, plus a simulation lab for
//! Monte Carlo coverage experiments.

pub mod ape;
pub mod bootstrap;
pub mod config;
pub mod data;
pub mod error;
pub mod lasso;
pub mod logit;
pub mod nodewise;
pub mod penalty;
pub mod rng;
pub mod sim;

pub use ape::{estimate_all, estimate_ape, estimate_nuisance, support_union, ApeResult, NuisanceBundle};
pub use bootstrap::{bootstrap_maxima, simultaneous_intervals, test_statistic, BootstrapConfig,
    BootstrapOutcome, Interval};
pub use config::{PenaltyConfig, Settings, SolverConfig, VarianceConfig};
pub use data::{load_long_csv, load_sparse_triplets, validate, write_long_csv, Cluster,
    ClusteredDataset, CsvSchema, DesignMatrix, Finding, SparseOptions, ValidateOptions};
pub use error::{Error, Result};
pub use lasso::{kkt_check, solve_lasso_logit, solve_weighted_lasso, KktReport, LassoProblem,
    SelectionFit};
pub use logit::{fit_restricted_logit, fit_restricted_wls, RestrictedFit};
pub use nodewise::{nodewise_fit, tau_sq_identity_check, theta_row, NodewiseRow, ThetaRow};
pub use penalty::{inv_norm_cdf, lambda_for, loadings_logit, loadings_weighted, PenaltyKind,
    PenaltyLoadings};
pub use sim::{debias_study, oracle_true_ape, run_coverage, simulate_dgp, CoverageConfig,
    CoverageReport, DebiasReport, DgpModel, DgpSpec};
