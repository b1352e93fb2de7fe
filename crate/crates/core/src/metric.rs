//! Metric-space values, their distances, and Fréchet means.
//!
//! Four geometries are built in:
//!
//! | kind          | value                               | metric                                  |
//! |---------------|-------------------------------------|-----------------------------------------|
//! | Euclidean     | vector in `R^d`                     | Euclidean norm                          |
//! | Sphere        | unit vector in `R^d`                | chordal (ambient) or geodesic (arc)     |
//! | SPD           | `p x p` symmetric positive definite | Log-Cholesky or log-Euclidean           |
//! | Wasserstein   | quantile function on a fixed grid   | weighted `L^2` distance of quantiles    |
//!
//! Every geometry except the geodesic sphere is *flat*: there is a coordinate
//! map under which the metric is the plain Euclidean distance. [`Space::flat_coords`]
//! exposes that map and the rest of the crate leans on it for fast distance
//! scans.

use serde::{Deserialize, Serialize};

use crate::error::{FccError, Result};
use crate::linalg::{self, Matrix};

/// Tolerance on `||x|| = 1` for sphere points.
pub const UNIT_NORM_TOL: f64 = 1e-10;
/// Tolerance on `|A - A^T|` for SPD matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Karcher iteration stops when the Riemannian gradient norm drops below this.
pub const KARCHER_TOL: f64 = 1e-10;
pub const KARCHER_MAX_ITER: usize = 200;

/// A single response or predictor value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricObject {
    Euclidean(Vec<f64>),
    Sphere(Vec<f64>),
    Spd(Matrix),
    /// Quantile function values on the grid of the owning [`Space`].
    Quantile(Vec<f64>),
}

impl MetricObject {
    pub fn euclidean(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(FccError::invalid("euclidean vector must be non-empty and finite"));
        }
        Ok(MetricObject::Euclidean(values))
    }

    pub fn sphere(coords: Vec<f64>) -> Result<Self> {
        let norm = norm(&coords);
        if coords.len() < 2 || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(FccError::geometry(format!(
                "sphere point must be a unit vector of length >= 2 (norm {norm})"
            )));
        }
        Ok(MetricObject::Sphere(coords))
    }

    /// Normalizes an arbitrary non-zero vector onto the sphere.
    pub fn sphere_normalized(coords: Vec<f64>) -> Result<Self> {
        let nrm = norm(&coords);
        if !(nrm > 1e-300) || !nrm.is_finite() {
            return Err(FccError::geometry("cannot normalize a zero vector onto the sphere"));
        }
        Ok(MetricObject::Sphere(coords.into_iter().map(|c| c / nrm).collect()))
    }

    pub fn spd(m: Matrix) -> Result<Self> {
        check_spd(&m)?;
        Ok(MetricObject::Spd(m))
    }

    pub fn quantile(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FccError::invalid("quantile values must be finite"));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(FccError::invalid(format!(
                "quantile values must be non-decreasing (violated at grid index {})",
                i + 1
            )));
        }
        Ok(MetricObject::Quantile(values))
    }

    pub fn kind(&self) -> SpaceKind {
        match self {
            MetricObject::Euclidean(_) => SpaceKind::Euclidean,
            MetricObject::Sphere(_) => SpaceKind::Sphere,
            MetricObject::Spd(_) => SpaceKind::Spd,
            MetricObject::Quantile(_) => SpaceKind::Wasserstein,
        }
    }

    /// Raw vector payload (`None` for SPD matrices).
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            MetricObject::Euclidean(v) | MetricObject::Sphere(v) | MetricObject::Quantile(v) => {
                Some(v)
            }
            MetricObject::Spd(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            MetricObject::Spd(m) => Some(m),
            _ => None,
        }
    }
}

fn check_spd(m: &Matrix) -> Result<()> {
    if !m.is_finite() {
        return Err(FccError::geometry("SPD matrix has non-finite entries"));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(FccError::geometry(format!(
            "matrix is not symmetric (max asymmetry {:e})",
            m.max_asymmetry()
        )));
    }
    linalg::cholesky(m).map(|_| ())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
    Sphere,
    Spd,
    Wasserstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereMetric {
    #[default]
    Chordal,
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpdMetric {
    #[default]
    LogCholesky,
    LogEuclidean,
}

/// Probability levels and quadrature weights for quantile functions.
///
/// Weights default to the midpoint rule: level `q_l` owns the interval between
/// the midpoints to its neighbours, and the two end levels own half a spacing
/// outward (clamped to `[0, 1]`). On the uniform grid `l/(m+1)` every level
/// gets weight `1/(m+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    levels: Vec<f64>,
    weights: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        validate_levels(&levels)?;
        let m = levels.len();
        let weights = if m == 1 {
            vec![1.0]
        } else {
            let mut bounds = Vec::with_capacity(m + 1);
            bounds.push((levels[0] - 0.5 * (levels[1] - levels[0])).max(0.0));
            for w in levels.windows(2) {
                bounds.push(0.5 * (w[0] + w[1]));
            }
            bounds.push((levels[m - 1] + 0.5 * (levels[m - 1] - levels[m - 2])).min(1.0));
            bounds.windows(2).map(|b| b[1] - b[0]).collect()
        };
        Ok(QuantileGrid { levels, weights })
    }

    pub fn with_weights(levels: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_levels(&levels)?;
        if weights.len() != levels.len() {
            return Err(FccError::invalid("grid and weights must have equal length"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(FccError::invalid("quadrature weights must be positive"));
        }
        Ok(QuantileGrid { levels, weights })
    }

    /// `m` equally spaced levels from `lo` to `hi` inclusive.
    pub fn uniform(m: usize, lo: f64, hi: f64) -> Result<Self> {
        if m == 0 {
            return Err(FccError::invalid("grid needs at least one level"));
        }
        let levels = if m == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
        };
        QuantileGrid::new(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(FccError::invalid("quantile grid must be non-empty"));
    }
    if levels.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(FccError::invalid("quantile levels must lie in (0, 1)"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FccError::invalid("quantile levels must be strictly increasing"));
    }
    Ok(())
}

/// The geometry of a sample: which kind of object, which metric, what size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Euclidean { dim: usize },
    /// Unit sphere in `R^dim`.
    Sphere { dim: usize, metric: SphereMetric },
    /// `p x p` SPD matrices.
    Spd { p: usize, metric: SpdMetric },
    Wasserstein { grid: QuantileGrid },
}

impl Space {
    pub fn euclidean(dim: usize) -> Self {
        Space::Euclidean { dim }
    }

    pub fn sphere(dim: usize) -> Self {
        Space::Sphere { dim, metric: SphereMetric::Chordal }
    }

    pub fn spd(p: usize, metric: SpdMetric) -> Self {
        Space::Spd { p, metric }
    }

    pub fn wasserstein(grid: QuantileGrid) -> Self {
        Space::Wasserstein { grid }
    }

    pub fn kind(&self) -> SpaceKind {
        match self {
            Space::Euclidean { .. } => SpaceKind::Euclidean,
            Space::Sphere { .. } => SpaceKind::Sphere,
            Space::Spd { .. } => SpaceKind::Spd,
            Space::Wasserstein { .. } => SpaceKind::Wasserstein,
        }
    }

    /// Vector length for vector kinds, `p` for SPD.
    pub fn dim(&self) -> usize {
        match self {
            Space::Euclidean { dim } | Space::Sphere { dim, .. } => *dim,
            Space::Spd { p, .. } => *p,
            Space::Wasserstein { grid } => grid.len(),
        }
    }

    /// Length of the flat coordinate vectors produced by [`Space::flat_coords`].
    pub fn flat_dim(&self) -> usize {
        match self {
            Space::Spd { p, .. } => p * (p + 1) / 2,
            _ => self.dim(),
        }
    }

    /// Whether the metric equals Euclidean distance between flat coordinates.
    pub fn is_flat(&self) -> bool {
        !matches!(self, Space::Sphere { metric: SphereMetric::Geodesic, .. })
    }

    /// Checks that `obj` belongs to this space (kind, size, and object invariants).
    pub fn validate(&self, obj: &MetricObject) -> Result<()> {
        match (self, obj) {
            (Space::Euclidean { dim }, MetricObject::Euclidean(v)) => check_len(*dim, v.len()),
            (Space::Sphere { dim, .. }, MetricObject::Sphere(v)) => {
                check_len(*dim, v.len())?;
                let nrm = norm(v);
                if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(FccError::geometry(format!("sphere point has norm {nrm}")));
                }
                Ok(())
            }
            (Space::Spd { p, .. }, MetricObject::Spd(m)) => {
                check_len(*p, m.dim())?;
                check_spd(m)
            }
            (Space::Wasserstein { grid }, MetricObject::Quantile(v)) => {
                check_len(grid.len(), v.len())?;
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(FccError::invalid("quantile values must be non-decreasing"));
                }
                Ok(())
            }
            (space, obj) => Err(FccError::invalid(format!(
                "object of kind {:?} does not belong to a {:?} space",
                obj.kind(),
                space.kind()
            ))),
        }
    }

    fn check_kind(&self, obj: &MetricObject) -> Result<()> {
        if obj.kind() != self.kind() {
            return Err(FccError::invalid(format!(
                "object of kind {:?} does not belong to a {:?} space",
                obj.kind(),
                self.kind()
            )));
        }
        let len = match obj {
            MetricObject::Spd(m) => m.dim(),
            other => other.as_vector().map_or(0, <[f64]>::len),
        };
        check_len(self.dim(), len)
    }

    /// Coordinates in which the metric is Euclidean distance.
    ///
    /// Euclidean and sphere points are returned as is (for the geodesic sphere
    /// these are ambient coordinates, not isometric). Quantile functions are
    /// scaled by `sqrt(w_l)`. SPD matrices map to Log-Cholesky coordinates or
    /// to the half-vectorized matrix logarithm with off-diagonals scaled by
    /// `sqrt(2)`, depending on the metric.
    pub fn flat_coords(&self, obj: &MetricObject) -> Result<Vec<f64>> {
        self.check_kind(obj)?;
        match (self, obj) {
            (Space::Euclidean { .. }, MetricObject::Euclidean(v))
            | (Space::Sphere { .. }, MetricObject::Sphere(v)) => Ok(v.clone()),
            (Space::Wasserstein { grid }, MetricObject::Quantile(q)) => {
                Ok(q.iter().zip(grid.weights()).map(|(v, w)| w.sqrt() * v).collect())
            }
            (Space::Spd { metric: SpdMetric::LogCholesky, .. }, MetricObject::Spd(m)) => {
                spd_log_cholesky_coords(m)
            }
            (Space::Spd { metric: SpdMetric::LogEuclidean, .. }, MetricObject::Spd(m)) => {
                Ok(log_euclidean_coords(&spd_matrix_log(m)?))
            }
            _ => unreachable!("kind checked above"),
        }
    }

    /// Inverse of [`Space::flat_coords`] (for the geodesic sphere the input is
    /// normalized back onto the sphere).
    pub fn from_flat_coords(&self, coords: &[f64]) -> Result<MetricObject> {
        if coords.len() != self.flat_dim() {
            return Err(FccError::invalid("flat coordinate vector has the wrong length"));
        }
        match self {
            Space::Euclidean { .. } => Ok(MetricObject::Euclidean(coords.to_vec())),
            Space::Sphere { .. } => MetricObject::sphere_normalized(coords.to_vec()),
            Space::Wasserstein { grid } => Ok(MetricObject::Quantile(
                coords.iter().zip(grid.weights()).map(|(v, w)| v / w.sqrt()).collect(),
            )),
            Space::Spd { p, metric: SpdMetric::LogCholesky } => {
                Ok(MetricObject::Spd(spd_from_log_cholesky(*p, coords)?))
            }
            Space::Spd { p, metric: SpdMetric::LogEuclidean } => {
                let log = log_euclidean_uncoords(*p, coords);
                Ok(MetricObject::Spd(linalg::sym_exp(&log)?))
            }
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(FccError::invalid(format!("dimension mismatch: expected {expected}, got {got}")));
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Great-circle distance between two unit vectors, with the inner product
/// clamped to `[-1, 1]`.
pub fn geodesic_sphere_distance(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Distance between two objects of `space`.
pub fn distance(space: &Space, a: &MetricObject, b: &MetricObject) -> Result<f64> {
    space.check_kind(a)?;
    space.check_kind(b)?;
    match (space, a, b) {
        (Space::Sphere { metric: SphereMetric::Geodesic, .. }, MetricObject::Sphere(x), MetricObject::Sphere(y)) => {
            Ok(geodesic_sphere_distance(x, y))
        }
        _ => Ok(sq_dist(&space.flat_coords(a)?, &space.flat_coords(b)?).sqrt()),
    }
}

/// A sample converted once into flat coordinates so that pairwise distances
/// cost one vector difference.
#[derive(Debug, Clone)]
pub struct PointCloud {
    coords: Vec<Vec<f64>>,
    geodesic: bool,
}

impl PointCloud {
    pub fn new(space: &Space, points: &[MetricObject]) -> Result<Self> {
        let coords = points
            .iter()
            .map(|p| space.flat_coords(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointCloud { coords, geodesic: !space.is_flat() })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.coords[i], &self.coords[j]);
        if self.geodesic {
            geodesic_sphere_distance(a, b)
        } else {
            sq_dist(a, b).sqrt()
        }
    }
}

/// Result of a Fréchet mean computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetSummary {
    pub mean: MetricObject,
    /// Weighted mean squared distance to `mean`.
    pub variance: f64,
    pub iterations: usize,
    /// Norm of the Riemannian gradient at exit; zero for closed forms.
    pub gradient_norm: f64,
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n {
                return Err(FccError::invalid("weights must match the number of points"));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(FccError::invalid("weights must be non-negative and finite"));
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(FccError::invalid("weights must sum to a positive value"));
            }
            Ok(w.iter().map(|x| x / total).collect())
        }
    }
}

fn weighted_coord_mean(coords: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let d = coords[0].len();
    let mut mean = vec![0.0; d];
    for (c, &wi) in coords.iter().zip(w) {
        for (m, &x) in mean.iter_mut().zip(c) {
            *m += wi * x;
        }
    }
    mean
}

/// Weighted Fréchet mean and variance.
///
/// Closed forms everywhere except the geodesic sphere, which runs a Karcher
/// fixed-point iteration (unit step) started from the normalized ambient mean.
pub fn frechet_mean(
    space: &Space,
    points: &[MetricObject],
    weights: Option<&[f64]>,
) -> Result<FrechetSummary> {
    if points.is_empty() {
        return Err(FccError::invalid("Fréchet mean of an empty sample"));
    }
    let w = normalized_weights(points.len(), weights)?;
    for p in points {
        space.check_kind(p)?;
    }
    if let Space::Sphere { metric: SphereMetric::Geodesic, .. } = space {
        return karcher_mean(points, &w);
    }
    let coords = points
        .iter()
        .map(|p| space.flat_coords(p))
        .collect::<Result<Vec<_>>>()?;
    let mut mean_coords = weighted_coord_mean(&coords, &w);
    if let Space::Sphere { .. } = space {
        let nrm = norm(&mean_coords);
        if nrm < 1e-12 {
            return Err(FccError::DegenerateMean(format!(
                "ambient mean of sphere points has norm {nrm:e}"
            )));
        }
        mean_coords.iter_mut().for_each(|c| *c /= nrm);
    }
    let variance = coords
        .iter()
        .zip(&w)
        .map(|(c, wi)| wi * sq_dist(c, &mean_coords))
        .sum();
    Ok(FrechetSummary {
        mean: space.from_flat_coords(&mean_coords)?,
        variance,
        iterations: 0,
        gradient_norm: 0.0,
    })
}

fn karcher_mean(points: &[MetricObject], w: &[f64]) -> Result<FrechetSummary> {
    let ys: Vec<&[f64]> = points.iter().map(|p| p.as_vector().expect("sphere point")).collect();
    let d = ys[0].len();
    let ambient: Vec<f64> = (0..d).map(|k| ys.iter().zip(w).map(|(y, wi)| wi * y[k]).sum()).collect();
    let mut mu = if norm(&ambient) > 1e-12 {
        let n = norm(&ambient);
        ambient.iter().map(|x| x / n).collect::<Vec<_>>()
    } else {
        ys[0].to_vec()
    };
    let mut iterations = 0;
    loop {
        let mut grad = vec![0.0; d];
        for (y, &wi) in ys.iter().zip(w) {
            let v = sphere_log(&mu, y)?;
            for (g, x) in grad.iter_mut().zip(&v) {
                *g += wi * x;
            }
        }
        let gnorm = norm(&grad);
        if gnorm < KARCHER_TOL {
            let variance = ys
                .iter()
                .zip(w)
                .map(|(y, wi)| wi * geodesic_sphere_distance(&mu, y).powi(2))
                .sum();
            return Ok(FrechetSummary {
                mean: MetricObject::Sphere(mu),
                variance,
                iterations,
                gradient_norm: gnorm,
            });
        }
        if iterations == KARCHER_MAX_ITER {
            return Err(FccError::Convergence { iterations, gradient_norm: gnorm });
        }
        mu = sphere_exp(&mu, &grad);
        iterations += 1;
    }
}

/// Riemannian logarithm on the unit sphere: the tangent vector at `base`
/// pointing towards `y` with length equal to their great-circle distance.
pub fn sphere_log(base: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if base.len() != y.len() {
        return Err(FccError::invalid("sphere_log: dimension mismatch"));
    }
    let c = dot(base, y);
    if c < -1.0 + 1e-12 {
        return Err(FccError::geometry("sphere_log: point is antipodal to the base point"));
    }
    let w: Vec<f64> = y.iter().zip(base).map(|(yi, bi)| yi - c * bi).collect();
    let wn = norm(&w);
    if wn == 0.0 {
        return Ok(vec![0.0; y.len()]);
    }
    let theta = wn.atan2(c);
    Ok(w.into_iter().map(|x| x * theta / wn).collect())
}

/// Riemannian exponential on the unit sphere.
pub fn sphere_exp(base: &[f64], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    if t == 0.0 {
        return base.to_vec();
    }
    let (s, c) = t.sin_cos();
    let out: Vec<f64> = base.iter().zip(v).map(|(b, x)| c * b + s * x / t).collect();
    let n = norm(&out);
    out.into_iter().map(|x| x / n).collect()
}

/// Log-Cholesky coordinates of an SPD matrix: the strict lower triangle of its
/// Cholesky factor (row-major), followed by the log of the factor's diagonal.
pub fn spd_log_cholesky_coords(m: &Matrix) -> Result<Vec<f64>> {
    let l = linalg::cholesky(m)?;
    let p = m.dim();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for i in 1..p {
        for j in 0..i {
            out.push(l[(i, j)]);
        }
    }
    for i in 0..p {
        out.push(l[(i, i)].ln());
    }
    Ok(out)
}

/// Rebuilds the lower Cholesky factor from Log-Cholesky coordinates.
pub fn cholesky_factor_from_log_cholesky(p: usize, coords: &[f64]) -> Result<Matrix> {
    if coords.len() != p * (p + 1) / 2 {
        return Err(FccError::invalid(format!(
            "Log-Cholesky vector for p = {p} needs {} entries, got {}",
            p * (p + 1) / 2,
            coords.len()
        )));
    }
    let mut l = Matrix::zeros(p);
    let mut k = 0;
    for i in 1..p {
        for j in 0..i {
            l[(i, j)] = coords[k];
            k += 1;
        }
    }
    for i in 0..p {
        l[(i, i)] = coords[k].exp();
        k += 1;
    }
    Ok(l)
}

/// Inverse of [`spd_log_cholesky_coords`].
pub fn spd_from_log_cholesky(p: usize, coords: &[f64]) -> Result<Matrix> {
    let l = cholesky_factor_from_log_cholesky(p, coords)?;
    Ok(l.matmul(&l.transpose()).symmetrize())
}

/// Matrix logarithm of an SPD matrix via its symmetric eigen-decomposition.
pub fn spd_matrix_log(m: &Matrix) -> Result<Matrix> {
    let eig = linalg::sym_eigen(m)?;
    if let Some(&bad) = eig.values.iter().find(|&&l| !(l > 0.0)) {
        return Err(FccError::geometry(format!(
            "matrix logarithm needs positive eigenvalues (found {bad:e})"
        )));
    }
    Ok(eig.map(f64::ln))
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_matrix_exp(m: &Matrix) -> Result<Matrix> {
    linalg::sym_exp(m)
}

fn log_euclidean_coords(log: &Matrix) -> Vec<f64> {
    let p = log.dim();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for i in 1..p {
        for j in 0..i {
            out.push(std::f64::consts::SQRT_2 * log[(i, j)]);
        }
    }
    out.extend(log.diag());
    out
}

fn log_euclidean_uncoords(p: usize, coords: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(p);
    let mut k = 0;
    for i in 1..p {
        for j in 0..i {
            let v = coords[k] / std::f64::consts::SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    for i in 0..p {
        m[(i, i)] = coords[k];
        k += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn euclidean_pythagoras() {
        let s = Space::euclidean(2);
        let a = MetricObject::Euclidean(vec![0.0, 0.0]);
        let b = MetricObject::Euclidean(vec![3.0, 4.0]);
        assert_eq!(distance(&s, &a, &b).unwrap(), 5.0);
    }

    #[test]
    fn chordal_antipodes_are_two_apart() {
        let s = Space::sphere(3);
        let a = MetricObject::Sphere(vec![1.0, 0.0, 0.0]);
        let b = MetricObject::Sphere(vec![-1.0, 0.0, 0.0]);
        assert_eq!(distance(&s, &a, &b).unwrap(), 2.0);
    }

    #[test]
    fn log_euclidean_identity_is_zero() {
        let s = Space::spd(3, SpdMetric::LogEuclidean);
        let i = MetricObject::Spd(Matrix::identity(3));
        assert_eq!(distance(&s, &i, &i).unwrap(), 0.0);
    }

    #[test]
    fn kind_mismatch_is_invalid_input() {
        let s = Space::euclidean(2);
        let a = MetricObject::Euclidean(vec![0.0, 0.0]);
        let b = MetricObject::Sphere(vec![1.0, 0.0]);
        assert!(matches!(distance(&s, &a, &b), Err(FccError::InvalidInput(_))));
        let c = MetricObject::Euclidean(vec![0.0, 0.0, 1.0]);
        assert!(matches!(distance(&s, &a, &c), Err(FccError::InvalidInput(_))));
    }

    #[test]
    fn non_spd_is_geometry_error() {
        let s = Space::spd(2, SpdMetric::LogCholesky);
        let bad = MetricObject::Spd(Matrix::from_rows(&[&[1.0, 3.0], &[3.0, 1.0]]).unwrap());
        let good = MetricObject::Spd(Matrix::identity(2));
        assert!(matches!(distance(&s, &bad, &good), Err(FccError::Geometry(_))));
        assert!(MetricObject::spd(Matrix::from_rows(&[&[1.0, 0.5], &[0.4, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn euclidean_mean_and_variance() {
        let s = Space::euclidean(2);
        let pts = vec![MetricObject::Euclidean(vec![0.0, 0.0]), MetricObject::Euclidean(vec![2.0, 0.0])];
        let f = frechet_mean(&s, &pts, None).unwrap();
        assert_eq!(f.mean, MetricObject::Euclidean(vec![1.0, 0.0]));
        assert_eq!(f.variance, 1.0);
        assert_eq!(f.gradient_norm, 0.0);
    }

    #[test]
    fn chordal_mean_is_normalized_midpoint() {
        let s = Space::sphere(3);
        let pts = vec![MetricObject::Sphere(vec![1.0, 0.0, 0.0]), MetricObject::Sphere(vec![0.0, 1.0, 0.0])];
        let f = frechet_mean(&s, &pts, None).unwrap();
        let m = f.mean.as_vector().unwrap();
        assert!((m[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((m[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(m[2], 0.0);
    }

    #[test]
    fn chordal_mean_of_antipodes_is_degenerate() {
        let s = Space::sphere(3);
        let pts = vec![MetricObject::Sphere(vec![1.0, 0.0, 0.0]), MetricObject::Sphere(vec![-1.0, 0.0, 0.0])];
        assert!(matches!(frechet_mean(&s, &pts, None), Err(FccError::DegenerateMean(_))));
    }

    #[test]
    fn log_euclidean_mean_is_geometric_mean() {
        let s = Space::spd(2, SpdMetric::LogEuclidean);
        let e2 = E * E;
        let pts = vec![
            MetricObject::Spd(Matrix::from_diag(&[1.0, 1.0])),
            MetricObject::Spd(Matrix::from_diag(&[e2, e2])),
        ];
        let f = frechet_mean(&s, &pts, None).unwrap();
        let m = f.mean.as_matrix().unwrap();
        // Scalar geometric mean of 1 and e^2 is e.
        assert!(m.sub(&Matrix::from_diag(&[E, E])).frobenius_norm() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        let s = Space::euclidean(1);
        let pts = vec![MetricObject::Euclidean(vec![0.0]), MetricObject::Euclidean(vec![4.0])];
        let f = frechet_mean(&s, &pts, Some(&[3.0, 1.0])).unwrap();
        assert_eq!(f.mean, MetricObject::Euclidean(vec![1.0]));
        assert!(frechet_mean(&s, &pts, Some(&[0.0, 0.0])).is_err());
        assert!(frechet_mean(&s, &pts, Some(&[1.0])).is_err());
        assert!(frechet_mean(&s, &[], None).is_err());
    }

    #[test]
    fn karcher_converges_on_concentrated_data() {
        let s = Space::Sphere { dim: 3, metric: SphereMetric::Geodesic };
        let pts: Vec<_> = [[1.0, 0.1, 0.0], [1.0, -0.05, 0.1], [1.0, 0.0, -0.2], [0.9, 0.3, 0.1]]
            .iter()
            .map(|v| MetricObject::sphere_normalized(v.to_vec()).unwrap())
            .collect();
        let f = frechet_mean(&s, &pts, None).unwrap();
        assert!(f.gradient_norm < KARCHER_TOL);
        assert!(f.iterations > 0 && f.iterations < 50);
    }

    #[test]
    fn sphere_log_basics() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        assert_eq!(sphere_log(&e1, &e1).unwrap(), vec![0.0; 3]);
        let v = sphere_log(&e1, &e2).unwrap();
        assert!((norm(&v) - FRAC_PI_2).abs() < 1e-15);
        assert!(v[0].abs() < 1e-15 && v[1] > 0.0 && v[2] == 0.0);
        assert!(matches!(sphere_log(&e1, &[-1.0, 0.0, 0.0]), Err(FccError::Geometry(_))));
    }

    #[test]
    fn log_cholesky_diagonal_cases() {
        assert_eq!(spd_log_cholesky_coords(&Matrix::identity(3)).unwrap(), vec![0.0; 6]);
        let c = spd_log_cholesky_coords(&Matrix::from_diag(&[E * E, 1.0])).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!(c[2].abs() < 1e-15);
    }

    #[test]
    fn matrix_log_diagonal_cases() {
        assert!(spd_matrix_log(&Matrix::identity(3)).unwrap().frobenius_norm() < 1e-15);
        let l = spd_matrix_log(&Matrix::from_diag(&[E, E.powi(3)])).unwrap();
        assert!(l.sub(&Matrix::from_diag(&[1.0, 3.0])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn quantile_validation_and_weights() {
        assert!(MetricObject::quantile(vec![0.0, 1.0, 0.5]).is_err());
        let g = QuantileGrid::uniform(99, 0.01, 0.99).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 0.99).abs() < 1e-12);
        assert!(QuantileGrid::new(vec![0.2, 0.1]).is_err());
        assert!(QuantileGrid::new(vec![0.0, 0.5]).is_err());
        let g = QuantileGrid::new((1..=9).map(|l| l as f64 / 10.0).collect()).unwrap();
        assert!(g.weights().iter().all(|w| (w - 0.1).abs() < 1e-12));
    }
}
