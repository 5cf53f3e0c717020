//! Cellwise-robust statistics.
//!
//! Classical robust methods treat whole cases (rows) as either clean or
//! contaminated. This crate instead targets *cellwise* outliers: individual
//! entries of a data matrix that deviate, while the rest of their row is
//! fine. It provides
//!
//! * [`data`] — the tabular [`data::DataMatrix`] with missing-value support,
//!   CSV ingestion and robust per-column summaries (median, MAD, Qn);
//! * [`kernels`] — the bounded hyperbolic-tangent rho family, its psi/weight
//!   functions, M-scales and the cell-contamination probability helper;
//! * [`detect`] — marginal flagging and a DDC-style detector that predicts
//!   each cell from correlated columns;
//! * [`cellmcd`] — cellwise Minimum Covariance Determinant estimation of
//!   location/covariance by block-coordinate descent on a penalized
//!   observed-Gaussian likelihood;
//! * [`cellpca`] — cellwise-robust PCA minimizing a nested double-rho
//!   objective by iteratively reweighted least squares;
//! * [`regression`] — plug-in linear regression on a joint cellMCD fit with
//!   imputation-based out-of-sample prediction;
//! * [`precision`] — robust pairwise covariance, PSD repair and the
//!   graphical lasso for sparse precision matrices;
//! * [`breakdown`] — a contamination simulator and adversarial attack
//!   harness for empirical cellwise breakdown analysis;
//! * [`cellmap`] — SVG rendering of residual cellmaps.

pub mod breakdown;
pub mod cellmap;
pub mod cellmcd;
pub mod cellpca;
pub mod data;
pub mod detect;
pub mod kernels;
mod linalg;
pub mod precision;
pub mod regression;
pub mod stats;

pub use data::DataMatrix;
