//! Coordinate embeddings of responses used by the wild bootstrap.
//!
//! Euclidean responses are used as is, quantile functions are weighted by the
//! square roots of the quadrature weights, SPD matrices become the flat
//! coordinates of their metric (Log-Cholesky, or the scaled half-vectorized
//! matrix logarithm for log-Euclidean), and sphere points are pulled back to the tangent space
//! at the sample mean through the Riemannian logarithm. The first three are
//! isometries; the sphere embedding is only a local linearization.

use serde::{Deserialize, Serialize};

use crate::error::{FccError, Result};
use crate::metric::{
    self, frechet_mean, MetricObject, Space, SpaceKind, SphereMetric,
};

/// Embedded responses `Z_i`, their vector mean, and the centered vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSample {
    pub vectors: Vec<Vec<f64>>,
    pub global_mean: Vec<f64>,
    pub centered: Vec<Vec<f64>>,
    pub kind: SpaceKind,
    /// Tangent base point (sphere responses only).
    pub base_point: Option<MetricObject>,
}

impl EmbeddedSample {
    /// Wraps raw embedded vectors and centers them by their vector mean.
    pub fn from_vectors(kind: SpaceKind, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(FccError::invalid("cannot embed an empty sample"));
        };
        let d = first.len();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(FccError::invalid("embedded vectors must share one length"));
        }
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; d];
        for v in &vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let centered = vectors
            .iter()
            .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
            .collect();
        Ok(EmbeddedSample { vectors, global_mean: mean, centered, kind, base_point: None })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.global_mean.len()
    }

    /// Treats the centered vectors as a fresh sample and centers them again.
    pub fn recenter(&self) -> Self {
        let mut out = EmbeddedSample::from_vectors(self.kind, self.centered.clone())
            .expect("non-empty sample of equal-length vectors");
        out.base_point = self.base_point.clone();
        out
    }
}

/// Length of the embedded vectors for responses in `space`.
pub fn embedding_dimension(space: &Space) -> usize {
    space.flat_dim()
}

/// Embeds a response sample and centers it.
pub fn embed_responses(space: &Space, ys: &[MetricObject]) -> Result<EmbeddedSample> {
    if ys.is_empty() {
        return Err(FccError::invalid("cannot embed an empty sample"));
    }
    match space {
        Space::Sphere { dim, .. } => {
            let chordal = Space::Sphere { dim: *dim, metric: SphereMetric::Chordal };
            let base = frechet_mean(&chordal, ys, None)?.mean;
            let b = base.as_vector().expect("sphere mean").to_vec();
            let vectors = ys
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    space.validate(y)?;
                    metric::sphere_log(&b, y.as_vector().expect("sphere point")).map_err(|_| {
                        FccError::geometry(format!(
                            "response {i} is antipodal to the sample mean; the tangent embedding is undefined"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = EmbeddedSample::from_vectors(SpaceKind::Sphere, vectors)?;
            out.base_point = Some(base);
            Ok(out)
        }
        _ => {
            let vectors = ys.iter().map(|y| space.flat_coords(y)).collect::<Result<Vec<_>>>()?;
            EmbeddedSample::from_vectors(space.kind(), vectors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::metric::{QuantileGrid, SpdMetric};

    #[test]
    fn euclidean_centering() {
        let ys = vec![MetricObject::Euclidean(vec![1.0, 2.0]), MetricObject::Euclidean(vec![3.0, 4.0])];
        let e = embed_responses(&Space::euclidean(2), &ys).unwrap();
        assert_eq!(e.global_mean, vec![2.0, 3.0]);
        assert_eq!(e.centered, vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn spd_identity_sample_centers_to_zero() {
        let ys = vec![MetricObject::Spd(Matrix::identity(3)); 4];
        let e = embed_responses(&Space::spd(3, SpdMetric::LogCholesky), &ys).unwrap();
        assert!(e.centered.iter().flatten().all(|&x| x == 0.0));
        assert_eq!(e.dim(), 6);
    }

    #[test]
    fn sphere_base_point_embeds_to_zero() {
        let e1 = MetricObject::Sphere(vec![1.0, 0.0, 0.0]);
        let a = MetricObject::sphere_normalized(vec![1.0, 0.1, 0.0]).unwrap();
        let b = MetricObject::sphere_normalized(vec![1.0, -0.1, 0.0]).unwrap();
        let e = embed_responses(&Space::sphere(3), &[a, e1, b]).unwrap();
        assert_eq!(e.base_point, Some(MetricObject::Sphere(vec![1.0, 0.0, 0.0])));
        assert!(e.vectors[1].iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn sphere_antipode_names_index() {
        let ys = vec![
            MetricObject::Sphere(vec![1.0, 0.0, 0.0]),
            MetricObject::Sphere(vec![1.0, 0.0, 0.0]),
            MetricObject::Sphere(vec![-1.0, 0.0, 0.0]),
        ];
        let err = embed_responses(&Space::sphere(3), &ys).unwrap_err();
        assert!(err.to_string().contains("response 2"), "{err}");
    }

    #[test]
    fn dimensions() {
        assert_eq!(embedding_dimension(&Space::spd(4, SpdMetric::LogCholesky)), 10);
        let g = QuantileGrid::uniform(99, 0.01, 0.99).unwrap();
        assert_eq!(embedding_dimension(&Space::wasserstein(g)), 99);
        assert_eq!(embedding_dimension(&Space::euclidean(3)), 3);
    }

    #[test]
    fn empty_and_kind_errors() {
        assert!(embed_responses(&Space::euclidean(1), &[]).is_err());
        let ys = vec![MetricObject::Sphere(vec![1.0, 0.0])];
        assert!(embed_responses(&Space::euclidean(2), &ys).is_err());
    }
}
