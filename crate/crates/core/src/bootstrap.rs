//! Fixed-partition wild bootstrap for FCC and a permutation-test wrapper for
//! the baseline statistics.
//!
//! The bootstrap tests `H0: the conditional Fréchet mean does not depend on
//! the predictor`. Responses are embedded, centered at the global fit, and
//! multiplied by i.i.d. mean-zero unit-variance weights; the between-cell
//! quadratic form is recomputed on the original partition with the original
//! scale `V̂_F`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{embed_responses, EmbeddedSample};
use crate::error::{FccError, Result};
use crate::estimate::estimate_from_responses;
use crate::linalg::{self, Matrix};
use crate::metric::{dot, MetricObject, Space, SphereMetric};
use crate::partition::Partition;
use crate::rng;

/// Law of the bootstrap multipliers. All have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    #[default]
    Rademacher,
    Gaussian,
    /// Mammen's two-point law, which also matches the third moment 1.
    MammenTwoPoint,
}

impl MultiplierLaw {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            MultiplierLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MultiplierLaw::Gaussian => rng.sample(StandardNormal),
            MultiplierLaw::MammenTwoPoint => {
                let s5 = 5f64.sqrt();
                let p_low = (s5 + 1.0) / (2.0 * s5);
                if rng.random::<f64>() < p_low {
                    -(s5 - 1.0) / 2.0
                } else {
                    (s5 + 1.0) / 2.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MultiplierLaw::Rademacher => "rademacher",
            MultiplierLaw::Gaussian => "gaussian",
            MultiplierLaw::MammenTwoPoint => "mammen",
        }
    }
}

impl std::str::FromStr for MultiplierLaw {
    type Err = FccError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(MultiplierLaw::Rademacher),
            "gaussian" => Ok(MultiplierLaw::Gaussian),
            "mammen" | "mammen_two_point" => Ok(MultiplierLaw::MammenTwoPoint),
            other => Err(FccError::invalid(format!("unknown multiplier law {other:?}"))),
        }
    }
}

/// Which normalization to build for a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    #[default]
    Identity,
    PluginHessian,
}

impl NormalizationKind {
    pub fn name(self) -> &'static str {
        match self {
            NormalizationKind::Identity => "identity",
            NormalizationKind::PluginHessian => "plugin_hessian",
        }
    }
}

impl std::str::FromStr for NormalizationKind {
    type Err = FccError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(NormalizationKind::Identity),
            "plugin" | "plugin_hessian" => Ok(NormalizationKind::PluginHessian),
            other => Err(FccError::invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Normalization matrices `H_m` (per cell) and `H` (global) of the
/// between-cell quadratic form. `Identity` means `H_m = H = I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormalizationSpec {
    Identity,
    PluginHessian { cells: Vec<Matrix>, global: Matrix },
}

impl NormalizationSpec {
    pub fn kind(&self) -> NormalizationKind {
        match self {
            NormalizationSpec::Identity => NormalizationKind::Identity,
            NormalizationSpec::PluginHessian { .. } => NormalizationKind::PluginHessian,
        }
    }

    /// Builds the requested normalization for a response sample.
    ///
    /// The plug-in version averages the Hessian `Λ` of `y ↦ d²(Y_i, y)` at the
    /// embedding base point over each cell (and over the whole sample) and
    /// sets `H = 2 Λ⁻¹`. For flat geometries `Λ = 2I` exactly, so this
    /// coincides with the identity. On the sphere the Hessian is taken in
    /// ambient coordinates with the normal direction filled in by `2 μ μ^T`,
    /// which tangent vectors never see.
    pub fn build(
        kind: NormalizationKind,
        space: &Space,
        ys: &[MetricObject],
        sample: &EmbeddedSample,
        partition: &Partition,
    ) -> Result<Self> {
        match kind {
            NormalizationKind::Identity => Ok(NormalizationSpec::Identity),
            NormalizationKind::PluginHessian => {
                let d = sample.dim();
                let hessians: Vec<Matrix> = match (space, &sample.base_point) {
                    (Space::Sphere { metric, .. }, Some(MetricObject::Sphere(mu))) => ys
                        .iter()
                        .map(|y| sphere_hessian(*metric, mu, y.as_vector().expect("sphere point")))
                        .collect::<Result<_>>()?,
                    _ => vec![Matrix::identity(d).scale(2.0); ys.len()],
                };
                let average = |idx: &[usize]| -> Matrix {
                    let mut acc = Matrix::zeros(d);
                    for &i in idx {
                        acc = acc.add(&hessians[i]);
                    }
                    acc.scale(1.0 / idx.len() as f64)
                };
                let to_h = |lambda: Matrix| -> Result<Matrix> {
                    let eig = linalg::sym_eigen(&lambda)?;
                    if eig.values.iter().any(|&l| !(l > 0.0)) {
                        return Err(FccError::invalid(
                            "plug-in Hessian is not positive definite; use identity normalization",
                        ));
                    }
                    Ok(eig.map(|l| 2.0 / l))
                };
                let cells = partition
                    .cell_members()
                    .iter()
                    .map(|idx| to_h(average(idx)))
                    .collect::<Result<Vec<_>>>()?;
                let all: Vec<usize> = (0..ys.len()).collect();
                let global = to_h(average(&all))?;
                Ok(NormalizationSpec::PluginHessian { cells, global })
            }
        }
    }
}

/// Ambient-coordinate Hessian of `x ↦ d²(y, x)` on the unit sphere at `mu`.
fn sphere_hessian(metric: SphereMetric, mu: &[f64], y: &[f64]) -> Result<Matrix> {
    let d = mu.len();
    let c = dot(mu, y).clamp(-1.0, 1.0);
    let mut proj = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            proj[(i, j)] -= mu[i] * mu[j];
        }
    }
    let mut normal = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            normal[(i, j)] = 2.0 * mu[i] * mu[j];
        }
    }
    let tangent = match metric {
        SphereMetric::Chordal => proj.scale(2.0 * c),
        SphereMetric::Geodesic => {
            let log = crate::metric::sphere_log(mu, y)?;
            let theta = crate::metric::norm(&log);
            if theta < 1e-12 {
                proj.scale(2.0)
            } else {
                let u: Vec<f64> = log.iter().map(|x| x / theta).collect();
                let tc = theta / theta.tan();
                let mut h = proj.scale(2.0 * tc);
                for i in 0..d {
                    for j in 0..d {
                        h[(i, j)] += 2.0 * (1.0 - tc) * u[i] * u[j];
                    }
                }
                h
            }
        }
    };
    Ok(tangent.add(&normal))
}

/// Evaluates `‖H^{-1/2} v‖²` for each normalization matrix.
enum Quadratic {
    Identity,
    Plugin { cells: Vec<Matrix>, global: Matrix },
}

impl Quadratic {
    fn new(norm: &NormalizationSpec, partition: &Partition, d: usize) -> Result<Self> {
        match norm {
            NormalizationSpec::Identity => Ok(Quadratic::Identity),
            NormalizationSpec::PluginHessian { cells, global } => {
                if cells.len() != partition.num_cells() {
                    return Err(FccError::invalid("one normalization matrix per cell is required"));
                }
                let factor = |h: &Matrix| -> Result<Matrix> {
                    if h.dim() != d || !h.is_symmetric(1e-10) {
                        return Err(FccError::invalid("normalization matrix must be symmetric d x d"));
                    }
                    linalg::cholesky(h)
                        .map_err(|_| FccError::invalid("normalization matrix is not positive definite"))
                };
                Ok(Quadratic::Plugin {
                    cells: cells.iter().map(factor).collect::<Result<_>>()?,
                    global: factor(global)?,
                })
            }
        }
    }

    fn eval(&self, cell: Option<usize>, v: &[f64]) -> f64 {
        match self {
            Quadratic::Identity => dot(v, v),
            Quadratic::Plugin { cells, global } => {
                let l = cell.map_or(global, |m| &cells[m]);
                dot(v, &linalg::cholesky_solve(l, v))
            }
        }
    }
}

/// `B_n = Σ_m n_m ‖H_m^{-1/2} S_m/n_m‖² − n ‖H^{-1/2} S/n‖²` from per-cell sums.
fn form_from_sums(q: &Quadratic, partition: &Partition, cell_sums: &[Vec<f64>]) -> f64 {
    let d = cell_sums.first().map_or(0, Vec::len);
    let n = partition.len() as f64;
    let mut total = vec![0.0; d];
    let mut between = 0.0;
    for (m, s) in cell_sums.iter().enumerate() {
        let nm = partition.cell_sizes[m] as f64;
        let mean: Vec<f64> = s.iter().map(|x| x / nm).collect();
        between += nm * q.eval(Some(m), &mean);
        for (t, x) in total.iter_mut().zip(s) {
            *t += x;
        }
    }
    let gmean: Vec<f64> = total.iter().map(|x| x / n).collect();
    between - n * q.eval(None, &gmean)
}

fn check_sample(sample: &EmbeddedSample, partition: &Partition) -> Result<()> {
    if sample.len() != partition.len() {
        return Err(FccError::invalid(format!(
            "embedded sample has {} vectors but the partition covers {}",
            sample.len(),
            partition.len()
        )));
    }
    if partition.cell_sizes.contains(&0) {
        return Err(FccError::InvalidPartition("empty cell".into()));
    }
    Ok(())
}

/// Normalized between-cell quadratic form of the centered embedded sample.
pub fn between_cell_statistic(
    sample: &EmbeddedSample,
    partition: &Partition,
    norm: &NormalizationSpec,
) -> Result<f64> {
    check_sample(sample, partition)?;
    let q = Quadratic::new(norm, partition, sample.dim())?;
    let mut sums = vec![vec![0.0; sample.dim()]; partition.num_cells()];
    for (z, &m) in sample.centered.iter().zip(&partition.assignments) {
        for (s, x) in sums[m].iter_mut().zip(z) {
            *s += x;
        }
    }
    Ok(form_from_sums(&q, partition, &sums))
}

/// Outcome of a resampling test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic_obs: f64,
    pub replicates: Vec<f64>,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub method: String,
    pub normalization: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<String>,
    /// `n * rho_hat`, reported next to the bootstrap statistic it approximates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rho_hat: Option<f64>,
}

/// `(1 + #{T*_b >= T_obs}) / (B + 1)`.
pub fn resampling_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&t| t >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Fixed-partition wild bootstrap test of Fréchet-mean independence.
#[allow(clippy::too_many_arguments)]
pub fn wild_bootstrap_test(
    xs: &[MetricObject],
    ys: &[MetricObject],
    space_y: &Space,
    partition: &Partition,
    b: usize,
    law: MultiplierLaw,
    norm: NormalizationKind,
    seed: u64,
) -> Result<TestResult> {
    if xs.len() != ys.len() {
        return Err(FccError::invalid("predictor and response samples differ in length"));
    }
    if b < 1 {
        return Err(FccError::invalid("the number of bootstrap replicates must be at least 1"));
    }
    let estimate = estimate_from_responses(ys, space_y, partition)?;
    let sample = embed_responses(space_y, ys)?;
    let spec = NormalizationSpec::build(norm, space_y, ys, &sample, partition)?;
    let mut result =
        wild_bootstrap_embedded(&sample, partition, estimate.v_f_hat, b, law, &spec, seed)?;
    result.n_rho_hat = Some(partition.len() as f64 * estimate.rho_hat);
    Ok(result)
}

/// The bootstrap loop on an already embedded sample with a given scale `V̂_F`.
pub fn wild_bootstrap_embedded(
    sample: &EmbeddedSample,
    partition: &Partition,
    v_f_hat: f64,
    b: usize,
    law: MultiplierLaw,
    norm: &NormalizationSpec,
    seed: u64,
) -> Result<TestResult> {
    check_sample(sample, partition)?;
    if b < 1 {
        return Err(FccError::invalid("the number of bootstrap replicates must be at least 1"));
    }
    if !(v_f_hat > 0.0) {
        return Err(FccError::DegenerateResponse(v_f_hat));
    }
    let q = Quadratic::new(norm, partition, sample.dim())?;
    let d = sample.dim();
    let cells = partition.num_cells();
    let observed = {
        let mut sums = vec![vec![0.0; d]; cells];
        for (z, &m) in sample.centered.iter().zip(&partition.assignments) {
            for (s, x) in sums[m].iter_mut().zip(z) {
                *s += x;
            }
        }
        form_from_sums(&q, partition, &sums) / v_f_hat
    };
    let replicates: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|rep| {
            let mut g = rng::stream(seed, rep);
            let mut sums = vec![vec![0.0; d]; cells];
            for (z, &m) in sample.centered.iter().zip(&partition.assignments) {
                let xi = law.draw(&mut g);
                for (s, x) in sums[m].iter_mut().zip(z) {
                    *s += xi * x;
                }
            }
            form_from_sums(&q, partition, &sums) / v_f_hat
        })
        .collect();
    Ok(TestResult {
        statistic_obs: observed,
        p_value: resampling_p_value(observed, &replicates),
        replicates,
        b,
        seed,
        method: "fcc_wild_bootstrap".into(),
        normalization: norm.kind().name().into(),
        multiplier: Some(law.name().into()),
        n_rho_hat: None,
    })
}

/// In-place Fisher-Yates shuffle driven by `rng` (index `i` swaps with a
/// uniform draw from `0..=i`, from the top down).
pub fn fisher_yates<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Permutation test where the statistic sees a permutation of the response
/// indices. `stat(&identity)` is the observed value.
pub fn permutation_test_indexed<F>(stat: F, n: usize, b: usize, seed: u64) -> Result<TestResult>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if b < 1 {
        return Err(FccError::invalid("the number of permutations must be at least 1"));
    }
    let identity: Vec<usize> = (0..n).collect();
    let observed = stat(&identity);
    let replicates: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|rep| {
            let mut perm = identity.clone();
            fisher_yates(&mut perm, &mut rng::stream(seed, rep));
            stat(&perm)
        })
        .collect();
    Ok(TestResult {
        statistic_obs: observed,
        p_value: resampling_p_value(observed, &replicates),
        replicates,
        b,
        seed,
        method: "permutation".into(),
        normalization: "none".into(),
        multiplier: None,
        n_rho_hat: None,
    })
}

/// Permutation test of a statistic of `(X, Y)`: the `Y` sequence is shuffled
/// `b` times and the statistic recomputed.
pub fn permutation_test<X, Y, F>(stat: F, xs: &[X], ys: &[Y], b: usize, seed: u64) -> Result<TestResult>
where
    X: Sync,
    Y: Clone + Sync,
    F: Fn(&[X], &[Y]) -> f64 + Sync,
{
    if xs.len() != ys.len() {
        return Err(FccError::invalid("samples differ in length"));
    }
    permutation_test_indexed(
        |perm| {
            let permuted: Vec<Y> = perm.iter().map(|&i| ys[i].clone()).collect();
            stat(xs, &permuted)
        },
        ys.len(),
        b,
        seed,
    )
}
