//! Cox proportional hazards regression with change-points in the regression
//! coefficients.
//!
//! The crate fits models with `m` change-points by maximizing the (optionally
//! ridge-regularized) log-partial likelihood, selects `m` with change-point
//! aware information criteria (AIC, AIC_naive, AIC_xi and TIC), and ships the
//! Monte Carlo machinery used to check those criteria:
//!
//! - [`survival`]: data model, risk sets, softmax moments and Kaplan-Meier curves
//! - [`likelihood`]: log-partial likelihood, derivatives and per-segment Newton fits
//! - [`search`]: exact change-point search by dynamic programming over event times
//! - [`criteria`]: plug-in matrices, the change-point bias constant and the criteria
//! - [`oracle`]: two-sided drifted Brownian motion, closed forms and path simulation
//! - [`simulation`]: piecewise-hazard data generation and the bias/selection experiments

pub mod criteria;
mod error;
pub mod likelihood;
pub mod linalg;
pub mod normal;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod search;
pub mod simulation;
pub mod stats;
pub mod survival;

pub use criteria::{
    aic, aic_naive, aic_xi, c_hat, rank_models, tic, AVariant, CriterionKind, CriterionReport,
    SegmentMatrices,
};
pub use error::{Error, Result};
pub use likelihood::{fit_segments, log_partial_likelihood, RidgeConfig, SegmentFit};
pub use oracle::{BmSimConfig, DriftedBmSpec};
pub use search::{search, CandidateRule, ChangePointModelFit, SearchConfig};
pub use simulation::{TruthSpec, ExperimentReport};
pub use survival::{SegmentPartition, Subject, SurvivalDataset};

/// Crate version embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
