//! Baseline dependence measures: Pearson correlation, Chatterjee's ξ and
//! distance covariance under arbitrary metrics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{permutation_test_indexed, TestResult};
use crate::error::{FccError, Result};
use crate::metric::{MetricObject, PointCloud, Space};
use crate::rng::stream;

/// Seed of the jitter that orders tied predictor values in [`chatterjee_xi`].
pub const CHATTERJEE_TIE_SEED: u64 = 0xC4A7_7E21;

/// Paired scalar sample, typically the first coordinates of `(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPairSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ScalarPairSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(FccError::invalid(format!("x has {} values but y has {}", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(FccError::invalid("a paired sample needs at least 2 observations"));
        }
        if !x.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(FccError::invalid("paired sample contains non-finite values"));
        }
        Ok(ScalarPairSample { x, y })
    }

    /// First coordinates of two metric-object samples.
    pub fn first_coordinates(xs: &[MetricObject], ys: &[MetricObject]) -> Result<Self> {
        let first = |o: &MetricObject| -> Result<f64> {
            match o {
                MetricObject::Spd(m) => Ok(m[(0, 0)]),
                other => other
                    .as_vector()
                    .and_then(|v| v.first().copied())
                    .ok_or_else(|| FccError::invalid("object has no first coordinate")),
            }
        };
        Self::new(xs.iter().map(first).collect::<Result<_>>()?, ys.iter().map(first).collect::<Result<_>>()?)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Product-moment correlation.
pub fn pearson_r(s: &ScalarPairSample) -> Result<f64> {
    let n = s.len() as f64;
    let mx = s.x.iter().sum::<f64>() / n;
    let my = s.y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in s.x.iter().zip(&s.y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(FccError::DegenerateDiagnostic("Pearson correlation needs sd(x) > 0 and sd(y) > 0".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Chatterjee's ξ with the default tie-breaking seed.
pub fn chatterjee_xi(s: &ScalarPairSample) -> f64 {
    chatterjee_xi_seeded(s, CHATTERJEE_TIE_SEED)
}

/// Chatterjee's ξ.
///
/// Observations are ordered by `x`; tied `x` values are ordered by a seeded
/// uniform jitter. With `r_i = #{j : y_j ≤ y_(i)}` and
/// `l_i = #{j : y_j ≥ y_(i)}` in that order,
/// `ξ = 1 − n Σ|r_{i+1} − r_i| / (2 Σ l_i (n − l_i))`, which is
/// `1 − 3 Σ|r_{i+1} − r_i| / (n² − 1)` without ties.
pub fn chatterjee_xi_seeded(s: &ScalarPairSample, seed: u64) -> f64 {
    let n = s.len();
    let mut rng = stream(seed, 0);
    let jitter: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.x[a].total_cmp(&s.x[b]).then(jitter[a].total_cmp(&jitter[b])));

    let mut sorted_y = s.y.clone();
    sorted_y.sort_by(f64::total_cmp);
    let r: Vec<f64> = order
        .iter()
        .map(|&i| sorted_y.partition_point(|&v| v <= s.y[i]) as f64)
        .collect();
    let l: Vec<f64> = order
        .iter()
        .map(|&i| (n - sorted_y.partition_point(|&v| v < s.y[i])) as f64)
        .collect();
    let num: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let den: f64 = 2.0 * l.iter().map(|&li| li * (n as f64 - li)).sum::<f64>();
    if den == 0.0 {
        // Constant y: no information either way.
        return 0.0;
    }
    1.0 - n as f64 * num / den
}

fn double_centered(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (0..n).map(move |j| cloud.distance(i, j)).collect::<Vec<_>>())
        .collect();
    let row: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // The distance matrix is symmetric, so row and column means agree.
            d[i * n + j] += grand - row[i] - row[j];
        }
    }
    d
}

/// Double-centered distance matrices of both samples, computed once so that
/// permuted statistics only cost `O(n²)` each.
#[derive(Debug, Clone)]
pub struct PreparedDcov {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PreparedDcov {
    pub fn new(xs: &[MetricObject], ys: &[MetricObject], space_x: &Space, space_y: &Space) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(FccError::invalid(format!(
                "predictor and response samples differ in length ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 4 {
            return Err(FccError::invalid("distance covariance needs at least 4 observations"));
        }
        let a = double_centered(&PointCloud::new(space_x, xs)?);
        let b = double_centered(&PointCloud::new(space_y, ys)?);
        Ok(PreparedDcov { n: xs.len(), a, b })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `V²` with the responses reordered by `perm`.
    pub fn statistic(&self, perm: &[usize]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            let arow = &self.a[i * n..(i + 1) * n];
            let brow = &self.b[perm[i] * n..(perm[i] + 1) * n];
            for j in 0..n {
                s += arow[j] * brow[perm[j]];
            }
        }
        (s / (n * n) as f64).max(0.0)
    }

    pub fn observed(&self) -> f64 {
        let identity: Vec<usize> = (0..self.n).collect();
        self.statistic(&identity)
    }

    /// Permutation calibration of the distance covariance.
    pub fn permutation_test(&self, b: usize, seed: u64) -> Result<TestResult> {
        let mut r = permutation_test_indexed(|perm| self.statistic(perm), self.n, b, seed)?;
        r.method = "energy_dcov_permutation".into();
        Ok(r)
    }
}

/// Squared distance covariance (V-statistic) under the metrics of the two
/// spaces.
pub fn energy_dcov_stat(xs: &[MetricObject], ys: &[MetricObject], space_x: &Space, space_y: &Space) -> Result<f64> {
    Ok(PreparedDcov::new(xs, ys, space_x, space_y)?.observed())
}
