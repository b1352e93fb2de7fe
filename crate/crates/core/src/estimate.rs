//! The partition-based Fréchet correlation estimator.
//!
//! Given a fixed partition `{Ω_m}` of the predictor sample,
//!
//! ```text
//! rho_hat = 1 - Σ_m (n_m / n) V̂_m / V̂_F
//! ```
//!
//! where `V̂_F` is the sample Fréchet variance of all responses and `V̂_m` the
//! Fréchet variance of the responses falling in cell `m` (both normalized by
//! the number of points, not by one less).

use serde::{Deserialize, Serialize};

use crate::error::{FccError, Result};
use crate::metric::{frechet_mean, MetricObject, Space};
use crate::partition::Partition;

/// `V̂_F` at or below this is treated as a constant response.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FccEstimate {
    pub rho_hat: f64,
    pub v_f_hat: f64,
    pub cell_variances: Vec<f64>,
    pub cell_means: Vec<MetricObject>,
    pub global_mean: MetricObject,
    pub partition: Partition,
}

/// Compact JSON view of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub rho_hat: f64,
    pub v_f_hat: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: usize,
    pub cell_sizes: Vec<usize>,
    pub per_cell_variance: Vec<f64>,
}

impl FccEstimate {
    pub fn record(&self) -> EstimateRecord {
        EstimateRecord {
            rho_hat: self.rho_hat,
            v_f_hat: self.v_f_hat,
            m: self.partition.num_cells(),
            n: self.partition.len(),
            cell_sizes: self.partition.cell_sizes.clone(),
            per_cell_variance: self.cell_variances.clone(),
        }
    }

    /// Pooled within-cell variance `Σ_m p̂_m V̂_m`.
    pub fn within_variance(&self) -> f64 {
        self.partition
            .cell_fractions
            .iter()
            .zip(&self.cell_variances)
            .map(|(p, v)| p * v)
            .sum()
    }
}

/// Fréchet mean and variance of the responses in each cell.
pub fn cell_summaries(
    ys: &[MetricObject],
    space: &Space,
    partition: &Partition,
) -> Result<(Vec<MetricObject>, Vec<f64>)> {
    if ys.len() != partition.len() {
        return Err(FccError::invalid(format!(
            "{} responses but the partition covers {} observations",
            ys.len(),
            partition.len()
        )));
    }
    let mut means = Vec::with_capacity(partition.num_cells());
    let mut variances = Vec::with_capacity(partition.num_cells());
    for (m, members) in partition.cell_members().into_iter().enumerate() {
        if members.is_empty() {
            return Err(FccError::InvalidPartition(format!("cell {m} is empty")));
        }
        let cell: Vec<MetricObject> = members.iter().map(|&i| ys[i].clone()).collect();
        let summary = frechet_mean(space, &cell, None)?;
        means.push(summary.mean);
        variances.push(summary.variance);
    }
    Ok((means, variances))
}

/// Partition-based FCC estimate of how much of the response's Fréchet
/// variance is explained by the predictor cell.
pub fn fcc_estimate(
    xs: &[MetricObject],
    ys: &[MetricObject],
    space_y: &Space,
    partition: &Partition,
) -> Result<FccEstimate> {
    if xs.len() != ys.len() {
        return Err(FccError::invalid(format!(
            "predictor and response samples differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    estimate_from_responses(ys, space_y, partition)
}

/// Same as [`fcc_estimate`] when the predictors have already been reduced to
/// the partition.
pub fn estimate_from_responses(
    ys: &[MetricObject],
    space_y: &Space,
    partition: &Partition,
) -> Result<FccEstimate> {
    let global = frechet_mean(space_y, ys, None)?;
    if global.variance <= DEGENERATE_VARIANCE {
        return Err(FccError::DegenerateResponse(global.variance));
    }
    let (cell_means, cell_variances) = cell_summaries(ys, space_y, partition)?;
    let within: f64 = partition
        .cell_fractions
        .iter()
        .zip(&cell_variances)
        .map(|(p, v)| p * v)
        .sum();
    // Cellwise minimizers never do worse than the pooled one, so the ratio
    // only leaves [0, 1] by rounding.
    let rho_hat = (1.0 - within / global.variance).clamp(0.0, 1.0);
    Ok(FccEstimate {
        rho_hat,
        v_f_hat: global.variance,
        cell_variances,
        cell_means,
        global_mean: global.mean,
        partition: partition.clone(),
    })
}
