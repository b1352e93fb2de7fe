//! Fréchet correlation coefficient for responses in metric spaces.
//!
//! The coefficient `ρ = 1 − E[V(X)] / V_F` measures how much of the Fréchet
//! variance of a response `Y` is explained by the conditional Fréchet mean
//! given a predictor `X`. This crate estimates it from a sample with a
//! prototype partition of the predictors, tests `ρ = 0` with a fixed-partition
//! wild bootstrap, and ships the plug-in null limits, baseline statistics and
//! simulation settings used to study it.
//!
//! Supported geometries: Euclidean vectors, the unit sphere (chordal or
//! geodesic), SPD matrices (Log-Cholesky or log-Euclidean) and
//! one-dimensional distributions under the 2-Wasserstein metric.
//!
//! ```
//! use fcc::{fcc_estimate, MetricObject, PartitionConfig, Space};
//!
//! let xs: Vec<MetricObject> = (0..40).map(|i| MetricObject::Euclidean(vec![i as f64])).collect();
//! let ys: Vec<MetricObject> = (0..40)
//!     .map(|i| MetricObject::Euclidean(vec![if i < 20 { 0.0 } else { 1.0 } + 0.01 * (i % 3) as f64]))
//!     .collect();
//! let space = Space::euclidean(1);
//! let partition = PartitionConfig::new(8, 3).build(&xs, &space).unwrap();
//! let est = fcc_estimate(&xs, &ys, &space, &partition).unwrap();
//! assert!(est.rho_hat > 0.75 && est.rho_hat <= 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bootstrap;
pub mod embed;
pub mod error;
pub mod estimate;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod nulls;
pub mod partition;
pub mod rng;
pub mod sim;
pub mod special;
pub mod study;

pub use baselines::{chatterjee_xi, energy_dcov_stat, pearson_r, PreparedDcov, ScalarPairSample};
pub use bootstrap::{
    permutation_test, permutation_test_indexed, wild_bootstrap_test, MultiplierLaw, NormalizationKind, TestResult,
};
pub use embed::{embed_responses, EmbeddedSample};
pub use error::{FccError, Result};
pub use estimate::{fcc_estimate, EstimateRecord, FccEstimate};
pub use linalg::Matrix;
pub use metric::{distance, frechet_mean, MetricObject, QuantileGrid, Space, SpaceKind, SpdMetric, SphereMetric};
pub use nulls::{chi2_upper_tail, fixed_m_spectrum, studentized_diagnostic, weighted_chi2_tail, SpectrumResult};
pub use partition::{Partition, PartitionConfig};
pub use sim::{PairedSample, SettingTag, SimConfig};
pub use study::{run_power, Method, PowerCurve, PowerOptions};
