//! Seeded data generators for the benchmark settings and the noise
//! monotonicity models.
//!
//! Every generator consumes a single `ChaCha8Rng` stream, so a
//! `(SimConfig, seed)` pair always produces the same sample.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FccError, Result};
use crate::linalg::{cholesky, Matrix};
use crate::metric::{
    spd_from_log_cholesky, spd_matrix_exp, spd_matrix_log, MetricObject, QuantileGrid, Space, SpdMetric,
};
use crate::rng::stream;

pub use crate::special::{inv_normal_cdf, normal_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingTag {
    #[serde(rename = "s1")]
    S1,
    #[serde(rename = "s2")]
    S2,
    #[serde(rename = "s3")]
    S3,
    #[serde(rename = "s4")]
    S4,
    #[serde(rename = "s5")]
    S5,
    #[serde(rename = "wass_noise_1")]
    WassNoise1,
    #[serde(rename = "wass_noise_2")]
    WassNoise2,
    #[serde(rename = "spd_logE_1")]
    SpdLogE1,
    #[serde(rename = "spd_logE_2")]
    SpdLogE2,
}

impl SettingTag {
    pub const ALL: [SettingTag; 9] = [
        SettingTag::S1,
        SettingTag::S2,
        SettingTag::S3,
        SettingTag::S4,
        SettingTag::S5,
        SettingTag::WassNoise1,
        SettingTag::WassNoise2,
        SettingTag::SpdLogE1,
        SettingTag::SpdLogE2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SettingTag::S1 => "s1",
            SettingTag::S2 => "s2",
            SettingTag::S3 => "s3",
            SettingTag::S4 => "s4",
            SettingTag::S5 => "s5",
            SettingTag::WassNoise1 => "wass_noise_1",
            SettingTag::WassNoise2 => "wass_noise_2",
            SettingTag::SpdLogE1 => "spd_logE_1",
            SettingTag::SpdLogE2 => "spd_logE_2",
        }
    }

    pub fn is_noise_model(self) -> bool {
        matches!(
            self,
            SettingTag::WassNoise1 | SettingTag::WassNoise2 | SettingTag::SpdLogE1 | SettingTag::SpdLogE2
        )
    }
}

impl fmt::Display for SettingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SettingTag {
    type Err = FccError;
    fn from_str(s: &str) -> Result<Self> {
        SettingTag::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                FccError::invalid(format!(
                    "unknown setting {s:?} (expected s1..s5, wass_noise_1, wass_noise_2, spd_logE_1, spd_logE_2)"
                ))
            })
    }
}

/// Everything needed to draw one sample.
///
/// Text form: `key = value` lines with `#` comments, for instance
///
/// ```text
/// setting = s3
/// n = 100
/// delta = 0.5   # signal strength
/// sigma_y = 0.4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub setting: SettingTag,
    pub n: usize,
    pub delta: f64,
    /// Noise level of the monotonicity models.
    pub sigma: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub tau_nuis: f64,
    /// Vector length (s1) or matrix size (s4, s5).
    pub p: usize,
    /// Quantile grid size.
    pub m: usize,
    pub k: u32,
    pub eta: f64,
    pub nu: f64,
    /// Predictor law `Unif(x_low, x_high)` of the noise models.
    pub x_low: f64,
    pub x_high: f64,
    /// `ζ(x) = zeta_slope · x`.
    pub zeta_slope: f64,
    /// Number of prototypes used when estimating on this setting.
    pub h: usize,
    pub min_cell: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(setting: SettingTag) -> Self {
        let (h, min_cell) = if setting == SettingTag::S1 { (30, 4) } else { (15, 5) };
        let p = match setting {
            SettingTag::S1 => 3,
            SettingTag::S4 | SettingTag::S5 => 4,
            SettingTag::SpdLogE1 => 2,
            SettingTag::SpdLogE2 => 3,
            _ => 3,
        };
        let (sigma_x, sigma_y) = match setting {
            SettingTag::S3 => (1.0, 0.4),
            _ => (0.2, 0.2),
        };
        SimConfig {
            setting,
            n: 100,
            delta: 0.5,
            sigma: 1.0,
            sigma_x,
            sigma_y,
            tau_nuis: 0.1,
            p,
            m: 99,
            k: 2,
            eta: 0.5,
            nu: 16.0,
            x_low: 0.5,
            x_high: 3.5,
            zeta_slope: 1.0,
            h,
            min_cell,
            seed: 1,
        }
    }

    /// Parses `key = value` lines; `setting` must come first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Option<SimConfig> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| FccError::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: FccError| FccError::Parse { line: idx + 1, message: e.to_string() };
            match (&mut cfg, key) {
                (None, "setting") => cfg = Some(SimConfig::new(value.parse().map_err(wrap)?)),
                (None, _) => {
                    return Err(FccError::Parse {
                        line: idx + 1,
                        message: "the first key must be `setting`".into(),
                    })
                }
                (Some(c), _) => c.set(key, value).map_err(wrap)?,
            }
        }
        let cfg = cfg.ok_or_else(|| FccError::Parse { line: 0, message: "no `setting` key".into() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one parameter by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| FccError::invalid(format!("cannot parse {value:?} as a value for `{key}`")))
        }
        match key {
            "setting" => *self = SimConfig::new(value.parse()?),
            "n" => self.n = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "sigma_x" => self.sigma_x = num(key, value)?,
            "sigma_y" => self.sigma_y = num(key, value)?,
            "tau_nuis" => self.tau_nuis = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "x_low" => self.x_low = num(key, value)?,
            "x_high" => self.x_high = num(key, value)?,
            "zeta_slope" => self.zeta_slope = num(key, value)?,
            "h" | "H" => self.h = num(key, value)?,
            "min_cell" => self.min_cell = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(FccError::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// `key = value` text that [`SimConfig::parse`] reads back unchanged.
    pub fn to_text(&self) -> String {
        format!(
            "setting = {}\nn = {}\ndelta = {}\nsigma = {}\nsigma_x = {}\nsigma_y = {}\ntau_nuis = {}\np = {}\nm = {}\nk = {}\neta = {}\nnu = {}\nx_low = {}\nx_high = {}\nzeta_slope = {}\nh = {}\nmin_cell = {}\nseed = {}\n",
            self.setting,
            self.n,
            self.delta,
            self.sigma,
            self.sigma_x,
            self.sigma_y,
            self.tau_nuis,
            self.p,
            self.m,
            self.k,
            self.eta,
            self.nu,
            self.x_low,
            self.x_high,
            self.zeta_slope,
            self.h,
            self.min_cell,
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FccError::invalid(msg));
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1] (got {})", self.delta));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("tau_nuis", self.tau_nuis),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        match self.setting {
            SettingTag::S1 if self.p < 1 => bad("s1 needs p >= 1".into()),
            SettingTag::S2 if self.k < 2 => bad(format!("s2 needs k >= 2 (got {})", self.k)),
            SettingTag::S3 | SettingTag::WassNoise1 | SettingTag::WassNoise2 if self.m < 2 => {
                bad(format!("the quantile grid needs m >= 2 (got {})", self.m))
            }
            SettingTag::S4 if self.p < 3 => bad(format!("s4 needs p >= 3 (got {})", self.p)),
            SettingTag::S5 if !(self.nu > self.p as f64 - 1.0) => {
                bad(format!("s5 needs nu > p - 1 (got nu = {}, p = {})", self.nu, self.p))
            }
            s if s.is_noise_model() && !(self.x_low < self.x_high) => {
                bad(format!("x_low must be below x_high ({} vs {})", self.x_low, self.x_high))
            }
            SettingTag::WassNoise1 if self.x_low <= 0.0 => {
                bad("wass_noise_1 needs x_low > 0 so the exponential rate stays positive".into())
            }
            _ => Ok(()),
        }
    }

    /// Draws a sample from the last sub-stream of `self.seed`, which
    /// resampling loops seeded with the same value never reach.
    pub fn generate(&self) -> Result<PairedSample> {
        self.generate_with(&mut stream(self.seed, u64::MAX))
    }

    pub fn generate_with(&self, rng: &mut ChaCha8Rng) -> Result<PairedSample> {
        self.validate()?;
        match self.setting {
            SettingTag::S1 => gen_setting1(self.n, self.p, self.delta, rng),
            SettingTag::S2 => gen_setting2(self.n, self.delta, self.sigma_x, self.sigma_y, self.k, rng),
            SettingTag::S3 => {
                let grid = QuantileGrid::uniform(self.m, 0.01, 0.99)?;
                gen_setting3(self.n, &grid, self.delta, self.sigma_x, self.sigma_y, self.eta, self.k, rng)
            }
            SettingTag::S4 => {
                gen_setting4(self.n, self.p, self.delta, self.sigma_x, self.sigma_y, self.tau_nuis, rng)
            }
            SettingTag::S5 => gen_setting5(self.n, self.p, self.nu, self.delta, rng),
            _ => gen_noise_model(self, rng),
        }
    }
}

/// Paired predictor and response samples with their spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub xs: Vec<MetricObject>,
    pub ys: Vec<MetricObject>,
    pub space_x: Space,
    pub space_y: Space,
}

impl PairedSample {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Wishart `W_p(ν, Σ)` draw via the Bartlett decomposition `L A Aᵀ Lᵀ`.
pub fn sample_wishart(nu: f64, scale: &Matrix, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let p = scale.dim();
    if !(nu > p as f64 - 1.0) {
        return Err(FccError::invalid(format!("Wishart needs nu > p - 1 (got nu = {nu}, p = {p})")));
    }
    let l = cholesky(scale)?;
    let mut a = Matrix::zeros(p);
    for i in 0..p {
        let chi2 = ChiSquared::new(nu - i as f64).map_err(|e| FccError::invalid(e.to_string()))?;
        a[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = normal(rng);
        }
    }
    let la = l.matmul(&a);
    Ok(la.matmul(&la.transpose()).symmetrize())
}

/// Sparse Euclidean model: `Y₁ = δ log(4X₁²) + 0.8ε`, other coordinates noise.
pub fn gen_setting1(n: usize, p: usize, delta: f64, rng: &mut ChaCha8Rng) -> Result<PairedSample> {
    if p < 1 {
        return Err(FccError::invalid("s1 needs p >= 1"));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..p).map(|_| normal(rng)).collect();
        let eps = normal(rng);
        let mut y = vec![delta * (4.0 * x[0] * x[0]).ln() + 0.8 * eps];
        y.extend((1..p).map(|_| normal(rng)));
        xs.push(MetricObject::Euclidean(x));
        ys.push(MetricObject::Euclidean(y));
    }
    Ok(PairedSample { xs, ys, space_x: Space::euclidean(p), space_y: Space::euclidean(p) })
}

fn noisy_direction(mean: [f64; 3], sigma: f64, rng: &mut ChaCha8Rng) -> Result<MetricObject> {
    for _ in 0..2 {
        let v: Vec<f64> = mean.iter().map(|m| m + sigma * normal(rng)).collect();
        if let Ok(obj) = MetricObject::sphere_normalized(v) {
            return Ok(obj);
        }
    }
    Err(FccError::geometry("noisy direction renormalization hit a zero vector twice"))
}

/// Folded spherical model on `S²`.
pub fn gen_setting2(
    n: usize,
    delta: f64,
    sigma_x: f64,
    sigma_y: f64,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> Result<PairedSample> {
    let pi = std::f64::consts::PI;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = rng.random_range(-pi..pi);
        let phi = pi * (k as f64 * theta).sin().abs();
        let mu_x = [theta.cos(), theta.sin(), 0.0];
        let mu_y = [(delta * phi).cos(), 0.0, (delta * phi).sin()];
        xs.push(noisy_direction(mu_x, sigma_x, rng)?);
        ys.push(noisy_direction(mu_y, sigma_y, rng)?);
    }
    Ok(PairedSample { xs, ys, space_x: Space::sphere(3), space_y: Space::sphere(3) })
}

/// `Φ⁻¹` on every grid level.
pub fn normal_quantiles(grid: &QuantileGrid) -> Result<Vec<f64>> {
    grid.levels().iter().map(|&q| inv_normal_cdf(q)).collect()
}

/// Wasserstein model with a periodic location signal.
#[allow(clippy::too_many_arguments)]
pub fn gen_setting3(
    n: usize,
    grid: &QuantileGrid,
    delta: f64,
    sigma_x: f64,
    sigma_y: f64,
    eta: f64,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> Result<PairedSample> {
    let q0 = normal_quantiles(grid)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let z = normal(rng);
        let loc = delta * (two_pi * k as f64 * u).sin();
        let scale = sigma_y * (eta * z).exp();
        xs.push(MetricObject::Quantile(q0.iter().map(|q| u + sigma_x * q).collect()));
        ys.push(MetricObject::Quantile(q0.iter().map(|q| loc + scale * q).collect()));
    }
    let space = Space::wasserstein(grid.clone());
    Ok(PairedSample { xs, ys, space_x: space.clone(), space_y: space })
}

/// Positions of `log L₁₁`, `log L₂₂`, `L₂₁`, `L₃₁` in Log-Cholesky coordinates.
pub fn setting4_slots(p: usize) -> [usize; 4] {
    let strict = p * (p - 1) / 2;
    [strict, strict + 1, 0, 1]
}

/// Folded SPD model built in Log-Cholesky coordinates.
pub fn gen_setting4(
    n: usize,
    p: usize,
    delta: f64,
    sigma_x: f64,
    sigma_y: f64,
    tau_nuis: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PairedSample> {
    if p < 3 {
        return Err(FccError::invalid(format!("s4 needs p >= 3 (got {p})")));
    }
    let d = p * (p + 1) / 2;
    let [c1, c2, off1, off2] = setting4_slots(p);
    let centre = (2.0 / std::f64::consts::PI).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u = normal(rng);
        let h = u.abs() - centre;
        let mut vx = vec![0.0; d];
        let mut vy = vec![0.0; d];
        vx[c1] = u;
        vx[off1] = 0.6 * u;
        vy[c2] = delta * h;
        vy[off2] = 0.6 * delta * h;
        for v in vx.iter_mut() {
            *v += sigma_x * normal(rng);
        }
        for v in vy.iter_mut() {
            *v += sigma_y * normal(rng);
        }
        for (j, v) in vy.iter_mut().enumerate() {
            if j != c2 && j != off2 {
                *v += tau_nuis * normal(rng);
            }
        }
        xs.push(MetricObject::Spd(spd_from_log_cholesky(p, &vx)?));
        ys.push(MetricObject::Spd(spd_from_log_cholesky(p, &vy)?));
    }
    let space = Space::spd(p, SpdMetric::LogCholesky);
    Ok(PairedSample { xs, ys, space_x: space.clone(), space_y: space })
}

/// Toeplitz matrix with entries `0.3^|j−k|`.
pub fn toeplitz_sigma0(p: usize) -> Matrix {
    let mut m = Matrix::zeros(p);
    for j in 0..p {
        for k in 0..p {
            m[(j, k)] = 0.3f64.powi((j as i32 - k as i32).abs());
        }
    }
    m
}

/// Paired Wishart draws sharing a latent scale factor.
pub fn gen_setting5(n: usize, p: usize, nu: f64, delta: f64, rng: &mut ChaCha8Rng) -> Result<PairedSample> {
    let sigma0 = toeplitz_sigma0(p);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u = normal(rng);
        xs.push(MetricObject::Spd(sample_wishart(nu, &sigma0.scale((0.5 * u).exp()), rng)?));
        ys.push(MetricObject::Spd(sample_wishart(nu, &sigma0.scale((0.5 * delta * u).exp()), rng)?));
    }
    let space = Space::spd(p, SpdMetric::LogCholesky);
    Ok(PairedSample { xs, ys, space_x: space.clone(), space_y: space })
}

/// `T_k(a) = a − sin(ka)/|a|`; the removable point `a = 0` maps to itself.
pub fn transport_map(k: i32, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    a - (k as f64 * a).sin() / a.abs()
}

/// `D(X)` of the two log-Euclidean models.
pub fn spd_noise_mean(setting: SettingTag, x: f64) -> Result<Matrix> {
    let r = (x.exp() - 1.0) / (x.exp() + 1.0);
    match setting {
        SettingTag::SpdLogE1 => Matrix::from_rows(&[&[1.0, r], &[r, 1.0]]),
        SettingTag::SpdLogE2 => {
            let (r1, r2) = (0.4 * r, 0.4 * x.sin());
            Matrix::from_rows(&[&[1.0, r1, r2], &[r1, 1.0, r1], &[r2, r1, 1.0]])
        }
        other => Err(FccError::invalid(format!("{other} is not a log-Euclidean noise model"))),
    }
}

/// Symmetric Gaussian matrix: `N(0, 1)` diagonal, `N(0, 1/2)` off-diagonal.
fn symmetric_gaussian(p: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut z = Matrix::zeros(p);
    for i in 0..p {
        z[(i, i)] = normal(rng);
        for j in 0..i {
            let v = normal(rng) * std::f64::consts::FRAC_1_SQRT_2;
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
    }
    z
}

/// The four noise-monotonicity models; `config.sigma` is the noise level.
pub fn gen_noise_model(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<PairedSample> {
    let n = config.n;
    let sigma = config.sigma;
    let mut draws_x = || rng.random_range(config.x_low..config.x_high);
    let xs_raw: Vec<f64> = (0..n).map(|_| draws_x()).collect();
    let xs: Vec<MetricObject> = xs_raw.iter().map(|&x| MetricObject::Euclidean(vec![x])).collect();
    let space_x = Space::euclidean(1);
    match config.setting {
        SettingTag::WassNoise1 | SettingTag::WassNoise2 => {
            let grid = QuantileGrid::uniform(config.m, 0.01, 0.99)?;
            let q0 = normal_quantiles(&grid)?;
            let mut ys = Vec::with_capacity(n);
            for &x in &xs_raw {
                let mu = config.zeta_slope * x + sigma * normal(rng);
                let y = if config.setting == SettingTag::WassNoise1 {
                    let rate = x / (1.0 + x.exp());
                    let t = Exp::new(rate).map_err(|e| FccError::invalid(e.to_string()))?.sample(rng);
                    q0.iter().map(|q| mu + t * q).collect()
                } else {
                    let k = rng.random_range(1..=3) * if rng.random::<bool>() { 1 } else { -1 };
                    let mut v: Vec<f64> = q0.iter().map(|q| transport_map(k, mu + 0.1 * q)).collect();
                    v.sort_by(f64::total_cmp);
                    v
                };
                ys.push(MetricObject::Quantile(y));
            }
            Ok(PairedSample { xs, ys, space_x, space_y: Space::wasserstein(grid) })
        }
        SettingTag::SpdLogE1 | SettingTag::SpdLogE2 => {
            let p = if config.setting == SettingTag::SpdLogE1 { 2 } else { 3 };
            let mut ys = Vec::with_capacity(n);
            for &x in &xs_raw {
                let log_d = spd_matrix_log(&spd_noise_mean(config.setting, x)?)?;
                let z = symmetric_gaussian(p, rng);
                let y = spd_matrix_exp(&log_d.add(&z.scale(sigma)))?.symmetrize();
                ys.push(MetricObject::Spd(y));
            }
            Ok(PairedSample { xs, ys, space_x, space_y: Space::spd(p, SpdMetric::LogEuclidean) })
        }
        other => Err(FccError::invalid(format!("{other} is not a noise model"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::distance;

    #[test]
    fn config_round_trip() {
        let mut c = SimConfig::new(SettingTag::S3);
        c.n = 42;
        c.delta = 0.25;
        let back = SimConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_errors_carry_lines() {
        let err = SimConfig::parse("setting = s1\nn = abc\n").unwrap_err();
        assert!(matches!(err, FccError::Parse { line: 2, .. }));
        assert!(SimConfig::parse("n = 3\n").is_err());
        assert!(SimConfig::parse("setting = s5\np = 4\nnu = 2\n").is_err());
        assert!(SimConfig::parse("setting = s4\np = 2\n").is_err());
    }

    #[test]
    fn setting_defaults() {
        let c = SimConfig::new(SettingTag::S1);
        assert_eq!((c.h, c.min_cell, c.p), (30, 4, 3));
        let c = SimConfig::new(SettingTag::S3);
        assert_eq!((c.sigma_x, c.sigma_y, c.k, c.eta), (1.0, 0.4, 2, 0.5));
        let c = SimConfig::new(SettingTag::S5);
        assert_eq!((c.p, c.nu), (4, 16.0));
    }

    #[test]
    fn toeplitz_corner() {
        let s = toeplitz_sigma0(4);
        assert!((s[(0, 3)] - 0.027).abs() < 1e-15);
    }

    #[test]
    fn noiseless_sphere_model() {
        let s = gen_setting2(50, 0.5, 0.0, 0.0, 2, &mut stream(1, 0)).unwrap();
        for (x, y) in s.xs.iter().zip(&s.ys) {
            let (x, y) = (x.as_vector().unwrap(), y.as_vector().unwrap());
            assert!(x[2].abs() < 1e-15);
            assert!(y[1].abs() < 1e-15);
        }
    }

    #[test]
    fn setting3_location_shift() {
        let grid = QuantileGrid::uniform(99, 0.01, 0.99).unwrap();
        let q0 = normal_quantiles(&grid).unwrap();
        let a = MetricObject::Quantile(q0.iter().map(|q| 0.3 + 0.4 * q).collect());
        let b = MetricObject::Quantile(q0.iter().map(|q| -0.2 + 0.4 * q).collect());
        let d = distance(&Space::wasserstein(grid), &a, &b).unwrap();
        // Midpoint weights cover [0.005, 0.995], a total mass of 0.99.
        assert!((d - 0.5 * 0.99f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn spd_model_at_zero_is_identity() {
        let d = spd_noise_mean(SettingTag::SpdLogE1, 0.0).unwrap();
        assert_eq!(d, Matrix::identity(2));
    }

    #[test]
    fn wishart_scalar_case() {
        let mut rng = stream(9, 0);
        let s = Matrix::from_diag(&[2.0]);
        let draws = 20_000;
        let mean: f64 = (0..draws).map(|_| sample_wishart(5.0, &s, &mut rng).unwrap()[(0, 0)]).sum::<f64>()
            / draws as f64;
        // E = ν σ² = 10, sd of the mean = σ² sqrt(2ν / draws).
        assert!((mean - 10.0).abs() < 4.0 * 2.0 * (10.0f64 / draws as f64).sqrt());
    }

    #[test]
    fn transport_map_sorted_output() {
        let c = SimConfig { setting: SettingTag::WassNoise2, n: 30, ..SimConfig::new(SettingTag::WassNoise2) };
        let s = c.generate().unwrap();
        for y in &s.ys {
            assert!(MetricObject::quantile(y.as_vector().unwrap().to_vec()).is_ok());
        }
    }
}
