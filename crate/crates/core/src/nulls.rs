//! Plug-in null limits for `n·rho_hat`.
//!
//! With a fixed number of cells the statistic converges to a weighted sum of
//! independent `χ²_1` variables. When the partition grows, a studentized
//! version is asymptotically standard normal. Both are offered as
//! diagnostics next to the bootstrap and are limited to flat embeddings.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddedSample;
use crate::error::{FccError, Result};
use crate::io::fmt_float;
use crate::linalg::{psd_sqrt, sym_eigenvalues, Matrix};
use crate::metric::SpaceKind;
use crate::partition::Partition;
use crate::rng::stream;

pub use crate::special::chi2_upper_tail;

/// Default number of Monte Carlo draws for [`weighted_chi2_tail`].
pub const WEIGHTED_CHI2_DRAWS: usize = 1_000_000;
/// Default seed for [`weighted_chi2_tail`].
pub const WEIGHTED_CHI2_SEED: u64 = 0x5EED_C412;
const DRAWS_PER_STREAM: usize = 8192;
/// The two studentized forms must agree to this relative tolerance.
pub const FORM_AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    #[serde(rename = "fixed_M_manifold")]
    FixedMManifold,
    #[serde(rename = "fixed_M_wasserstein")]
    FixedMWasserstein,
}

impl SpectrumSource {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumSource::FixedMManifold => "fixed_M_manifold",
            SpectrumSource::FixedMWasserstein => "fixed_M_wasserstein",
        }
    }
}

/// Eigenvalues of the limiting quadratic form. The null law of `n·rho_hat`
/// is `scale · Σ γ_ℓ Z_ℓ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub scale: f64,
    pub source: SpectrumSource,
}

impl SpectrumResult {
    /// `P(scale · Σ γ Z² > stat)`.
    pub fn tail(&self, stat: f64, draws: usize, seed: u64) -> TailEstimate {
        weighted_chi2_tail_with(stat / self.scale, &self.eigenvalues, draws, seed)
    }

    /// Mean of the implied law of `n·rho_hat`.
    pub fn mean(&self) -> f64 {
        self.scale * self.eigenvalues.iter().sum::<f64>()
    }

    /// `index,gamma` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,gamma\n");
        for (i, g) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, fmt_float(*g)));
        }
        out
    }
}

fn check_cells(sample: &EmbeddedSample, partition: &Partition) -> Result<()> {
    if sample.kind == SpaceKind::Sphere {
        return Err(FccError::invalid(
            "null-limit diagnostics need a flat embedding (euclidean, wasserstein or spd)",
        ));
    }
    if sample.len() != partition.len() {
        return Err(FccError::invalid(format!(
            "{} embedded responses but the partition covers {} observations",
            sample.len(),
            partition.len()
        )));
    }
    if let Some((m, &size)) = partition.cell_sizes.iter().enumerate().find(|(_, &s)| s < 2) {
        return Err(FccError::invalid(format!("cell {m} has {size} observation(s); at least 2 are needed")));
    }
    Ok(())
}

/// Within-cell residuals `Z_i − Z̄_m`, grouped by cell.
fn cell_residuals(sample: &EmbeddedSample, partition: &Partition) -> Vec<Vec<Vec<f64>>> {
    let d = sample.dim();
    partition
        .cell_members()
        .into_iter()
        .map(|members| {
            let mut mean = vec![0.0; d];
            for &i in &members {
                for (a, z) in mean.iter_mut().zip(&sample.vectors[i]) {
                    *a += z;
                }
            }
            let k = members.len() as f64;
            mean.iter_mut().for_each(|a| *a /= k);
            members
                .iter()
                .map(|&i| sample.vectors[i].iter().zip(&mean).map(|(z, c)| z - c).collect())
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plug-in `Σ̂_m = (1/n_m) Σ r rᵀ`.
fn cell_covariance(res: &[Vec<f64>], d: usize) -> Matrix {
    let mut data = vec![0.0; d * d];
    for r in res {
        for a in 0..d {
            for b in 0..d {
                data[a * d + b] += r[a] * r[b];
            }
        }
    }
    let k = res.len() as f64;
    data.iter_mut().for_each(|v| *v /= k);
    Matrix::from_row_major(d, data).expect("square by construction")
}

/// `(tr Σ̂_m, tr Σ̂_m²)` through the smaller of the two Gram matrices.
fn cell_traces(res: &[Vec<f64>], d: usize) -> (f64, f64) {
    let k = res.len();
    let tr = res.iter().map(|r| dot(r, r)).sum::<f64>() / k as f64;
    let frob = if k <= d {
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                let g = dot(&res[i], &res[j]);
                s += g * g;
            }
        }
        s
    } else {
        let c = cell_covariance(res, d);
        let f = c.frobenius_norm();
        f * f * (k * k) as f64
    };
    (tr, frob / (k * k) as f64)
}

/// Fixed-M weighted-χ² spectrum.
///
/// Builds `B = Σ_W^{1/2}(D − p pᵀ ⊗ Λ⁻¹)Σ_W^{1/2}` from the plug-ins
/// `Ĉ_m = 4Σ̂_m` and `Λ̂ = 2I`. When `n < M·d` the nonzero spectrum is
/// obtained from the equivalent `n × n` Gram form and padded with zeros.
pub fn fixed_m_spectrum(
    embedded: &EmbeddedSample,
    partition: &Partition,
    v_f_hat: f64,
) -> Result<SpectrumResult> {
    check_cells(embedded, partition)?;
    if !(v_f_hat > 0.0 && v_f_hat.is_finite()) {
        return Err(FccError::DegenerateResponse(v_f_hat));
    }
    let d = embedded.dim();
    let m_cells = partition.num_cells();
    let n = partition.len();
    let p = &partition.cell_fractions;
    let res = cell_residuals(embedded, partition);
    let full = m_cells * d;

    let mut gammas = if full <= n {
        let roots: Vec<Matrix> = res
            .iter()
            .map(|r| psd_sqrt(&cell_covariance(r, d).scale(4.0)))
            .collect::<Result<_>>()?;
        let mut b = vec![0.0; full * full];
        for m in 0..m_cells {
            for mp in 0..m_cells {
                let k = 0.5 * (if m == mp { 1.0 } else { 0.0 } - (p[m] * p[mp]).sqrt());
                if k == 0.0 {
                    continue;
                }
                let block = roots[m].matmul(&roots[mp]);
                for a in 0..d {
                    for c in 0..d {
                        b[(m * d + a) * full + mp * d + c] = k * block[(a, c)];
                    }
                }
            }
        }
        let b = Matrix::from_row_major(full, b)?.symmetrize();
        sym_eigenvalues(&b)?
    } else {
        let mut rows: Vec<(usize, &Vec<f64>)> = Vec::with_capacity(n);
        for (m, cell) in res.iter().enumerate() {
            rows.extend(cell.iter().map(|r| (m, r)));
        }
        let sizes = &partition.cell_sizes;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            let (mi, ri) = rows[i];
            for j in i..n {
                let (mj, rj) = rows[j];
                let k = if mi == mj { 1.0 } else { 0.0 } - (p[mi] * p[mj]).sqrt();
                let v = 2.0 * k * dot(ri, rj) / ((sizes[mi] * sizes[mj]) as f64).sqrt();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        let mut vals = sym_eigenvalues(&Matrix::from_row_major(n, g)?)?;
        vals.resize(full, 0.0);
        vals
    };
    gammas.sort_by(|a, b| b.total_cmp(a));

    Ok(match embedded.kind {
        SpaceKind::Wasserstein => SpectrumResult {
            eigenvalues: gammas.into_iter().map(|g| 0.5 * g).collect(),
            scale: 1.0 / v_f_hat,
            source: SpectrumSource::FixedMWasserstein,
        },
        _ => SpectrumResult {
            eigenvalues: gammas,
            scale: 1.0 / (2.0 * v_f_hat),
            source: SpectrumSource::FixedMManifold,
        },
    })
}

/// Monte Carlo tail probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p: f64,
    pub std_err: f64,
}

/// Seeded draws from `Σ γ_ℓ Z_ℓ²`, kept so several thresholds can share them.
#[derive(Debug, Clone)]
pub struct WeightedChi2Sample {
    sorted: Vec<f64>,
}

impl WeightedChi2Sample {
    pub fn new(gammas: &[f64], draws: usize, seed: u64) -> Self {
        let top = gammas.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let active: Vec<f64> = gammas.iter().copied().filter(|g| g.abs() > 1e-14 * top).collect();
        let chunks = draws.div_ceil(DRAWS_PER_STREAM);
        let mut sorted: Vec<f64> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = stream(seed, c as u64);
                let count = DRAWS_PER_STREAM.min(draws - c * DRAWS_PER_STREAM);
                let active = &active;
                (0..count)
                    .map(move |_| {
                        active
                            .iter()
                            .map(|g| {
                                let z: f64 = rng.sample(StandardNormal);
                                g * z * z
                            })
                            .sum::<f64>()
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        sorted.sort_by(f64::total_cmp);
        WeightedChi2Sample { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of draws strictly above `x`.
    pub fn tail(&self, x: f64) -> TailEstimate {
        let n = self.sorted.len();
        if n == 0 {
            return TailEstimate { p: f64::NAN, std_err: f64::NAN };
        }
        let above = n - self.sorted.partition_point(|&v| v <= x);
        let p = above as f64 / n as f64;
        TailEstimate { p, std_err: (p * (1.0 - p) / n as f64).sqrt() }
    }

    /// Empirical CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x).p
    }
}

/// `P(Σ γ_ℓ Z_ℓ² > x)` from [`WEIGHTED_CHI2_DRAWS`] seeded draws.
pub fn weighted_chi2_tail(x: f64, gammas: &[f64]) -> TailEstimate {
    weighted_chi2_tail_with(x, gammas, WEIGHTED_CHI2_DRAWS, WEIGHTED_CHI2_SEED)
}

pub fn weighted_chi2_tail_with(x: f64, gammas: &[f64], draws: usize, seed: u64) -> TailEstimate {
    WeightedChi2Sample::new(gammas, draws, seed).tail(x)
}

/// Studentized statistic for a growing number of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentizedDiagnostic {
    /// `n·rho_hat`.
    pub stat: f64,
    /// `Σ tr(Λ̂_m⁻¹Ĉ_m)`.
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub z_score: f64,
    /// The same z computed from `Σ̂_m` directly.
    pub z_wasserstein: f64,
    /// `tr Σ̂_m` per cell.
    pub sigma_traces: Vec<f64>,
    /// `tr Ĉ_m = 4 tr Σ̂_m` per cell.
    pub c_traces: Vec<f64>,
}

impl StudentizedDiagnostic {
    /// `stat,mu_hat,sigma_hat,z` block.
    pub fn to_csv(&self) -> String {
        format!(
            "stat,mu_hat,sigma_hat,z\n{},{},{},{}\n",
            fmt_float(self.stat),
            fmt_float(self.mu_hat),
            fmt_float(self.sigma_hat),
            fmt_float(self.z_score)
        )
    }
}

/// Studentized `n·rho_hat`, computed in both the manifold and the
/// Wasserstein parametrization; the two must coincide.
pub fn studentized_diagnostic(
    embedded: &EmbeddedSample,
    partition: &Partition,
    rho_hat: f64,
    v_f_hat: f64,
) -> Result<StudentizedDiagnostic> {
    check_cells(embedded, partition)?;
    if !(v_f_hat > 0.0 && v_f_hat.is_finite()) {
        return Err(FccError::DegenerateResponse(v_f_hat));
    }
    let d = embedded.dim();
    let n = partition.len() as f64;
    let stat = n * rho_hat;
    let traces: Vec<(f64, f64)> = cell_residuals(embedded, partition)
        .iter()
        .map(|r| cell_traces(r, d))
        .collect();

    // Wasserstein form.
    let mu_w: f64 = traces.iter().map(|t| t.0).sum();
    let sigma_w = (2.0 * traces.iter().map(|t| t.1).sum::<f64>()).sqrt();
    // Manifold form: Λ̂_m⁻¹Ĉ_m = 2Σ̂_m.
    let mu_hat: f64 = traces.iter().map(|t| 2.0 * t.0).sum();
    let sigma_hat = (2.0 * traces.iter().map(|t| 4.0 * t.1).sum::<f64>()).sqrt();

    if !(sigma_hat > 0.0) {
        return Err(FccError::DegenerateDiagnostic(
            "sigma_hat = 0: responses are constant within every cell".into(),
        ));
    }
    let z_score = (stat - mu_hat / (2.0 * v_f_hat)) / (sigma_hat / (2.0 * v_f_hat));
    let z_wasserstein = (stat - mu_w / v_f_hat) / (sigma_w / v_f_hat);
    if (z_score - z_wasserstein).abs() > FORM_AGREEMENT_TOL * z_score.abs().max(1.0) {
        return Err(FccError::Numeric(format!(
            "studentized forms disagree: {z_score} vs {z_wasserstein}"
        )));
    }
    Ok(StudentizedDiagnostic {
        stat,
        mu_hat,
        sigma_hat,
        z_score,
        z_wasserstein,
        sigma_traces: traces.iter().map(|t| t.0).collect(),
        c_traces: traces.iter().map(|t| 4.0 * t.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_sample(v: &[f64]) -> EmbeddedSample {
        EmbeddedSample::from_vectors(SpaceKind::Euclidean, v.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn single_cell_has_zero_spectrum() {
        let s = scalar_sample(&[1.0, 2.0, 4.0, 7.0]);
        let p = Partition::from_assignments(vec![0; 4], 1).unwrap();
        let r = fixed_m_spectrum(&s, &p, 1.0).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!(r.eigenvalues[0].abs() < 1e-12);
    }

    #[test]
    fn two_cells_match_hand_computation() {
        // Cell 0 variance 1 (values -1, 1), cell 1 variance 4 (values 3, 7, 3, 7).
        let s = scalar_sample(&[-1.0, 1.0, 3.0, 7.0, 3.0, 7.0]);
        let p = Partition::from_assignments(vec![0, 0, 1, 1, 1, 1], 2).unwrap();
        let r = fixed_m_spectrum(&s, &p, 1.0).unwrap();
        let (p0, p1): (f64, f64) = (1.0 / 3.0, 2.0 / 3.0);
        let (c0, c1): (f64, f64) = (4.0, 16.0);
        // B = ½ [[c0(1-p0), -√(c0 c1 p0 p1)], [-√(c0 c1 p0 p1), c1(1-p1)]].
        let a = 0.5 * c0 * (1.0 - p0);
        let d = 0.5 * c1 * (1.0 - p1);
        let b = -0.5 * (c0 * c1 * p0 * p1).sqrt();
        let tr = a + d;
        let det = a * d - b * b;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        assert!((r.eigenvalues[0] - (tr / 2.0 + disc)).abs() < 1e-10);
        assert!((r.eigenvalues[1] - (tr / 2.0 - disc)).abs() < 1e-10);
    }

    #[test]
    fn gram_form_matches_direct_form() {
        let mut rng = stream(3, 0);
        let d = 3;
        let vecs: Vec<Vec<f64>> = (0..12).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let s = EmbeddedSample::from_vectors(SpaceKind::Euclidean, vecs.clone()).unwrap();
        // 4 cells × 3 dims = 12 = n: direct form.
        let p = Partition::from_assignments((0..12).map(|i| i % 4).collect(), 4).unwrap();
        let direct = fixed_m_spectrum(&s, &p, 1.0).unwrap();
        // Duplicating a dimension forces M·d > n and the Gram path.
        let wide: Vec<Vec<f64>> = vecs.iter().map(|v| [v.as_slice(), &[0.0]].concat()).collect();
        let s2 = EmbeddedSample::from_vectors(SpaceKind::Euclidean, wide).unwrap();
        let gram = fixed_m_spectrum(&s2, &p, 1.0).unwrap();
        assert_eq!(gram.eigenvalues.len(), 16);
        for (a, b) in direct.eigenvalues.iter().zip(&gram.eigenvalues) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn small_cells_rejected() {
        let s = scalar_sample(&[1.0, 2.0, 3.0]);
        let p = Partition::from_assignments(vec![0, 0, 1], 2).unwrap();
        assert!(matches!(fixed_m_spectrum(&s, &p, 1.0), Err(FccError::InvalidInput(_))));
        assert!(matches!(studentized_diagnostic(&s, &p, 0.1, 1.0), Err(FccError::InvalidInput(_))));
    }

    #[test]
    fn weighted_tail_single_term_is_chi2() {
        let t = weighted_chi2_tail_with(3.0, &[1.0], 200_000, 1);
        assert!((t.p - chi2_upper_tail(3.0, 1)).abs() < 3.0 * t.std_err + 1e-12);
    }

    #[test]
    fn cell_constant_diagnostic_is_degenerate() {
        let s = scalar_sample(&[1.0, 1.0, 5.0, 5.0]);
        let p = Partition::from_assignments(vec![0, 0, 1, 1], 2).unwrap();
        let err = studentized_diagnostic(&s, &p, 1.0, 4.0).unwrap_err();
        assert!(matches!(err, FccError::DegenerateDiagnostic(_)));
    }

    #[test]
    fn csv_blocks() {
        let r = SpectrumResult { eigenvalues: vec![2.0, 1.0], scale: 0.5, source: SpectrumSource::FixedMManifold };
        assert_eq!(r.to_csv(), "index,gamma\n1,2.0\n2,1.0\n");
    }
}
