//! Monte Carlo power studies: generate, partition, test, count rejections.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{chatterjee_xi, pearson_r, PreparedDcov, ScalarPairSample};
use crate::bootstrap::{permutation_test_indexed, wild_bootstrap_test, MultiplierLaw, NormalizationKind, TestResult};
use crate::error::{FccError, Result};
use crate::io::fmt_float;
use crate::partition::PartitionConfig;
use crate::rng::{mix64, stream};
use crate::sim::{PairedSample, SettingTag, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fcc,
    Energy,
    Pearson,
    Chatterjee,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fcc => "fcc",
            Method::Energy => "energy",
            Method::Pearson => "pearson",
            Method::Chatterjee => "chatterjee",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FccError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fcc" => Ok(Method::Fcc),
            "energy" => Ok(Method::Energy),
            "pearson" => Ok(Method::Pearson),
            "chatterjee" => Ok(Method::Chatterjee),
            other => Err(FccError::invalid(format!(
                "unknown method {other:?} (expected fcc, energy, pearson or chatterjee)"
            ))),
        }
    }
}

/// Settings of a power run other than the data-generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub n_list: Vec<usize>,
    pub reps: usize,
    /// Bootstrap replicates or permutations per test.
    pub boot: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub multiplier: MultiplierLaw,
    pub norm: NormalizationKind,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            n_list: vec![50, 80, 100, 150],
            reps: 100,
            boot: 500,
            alpha: 0.05,
            seed: 1,
            methods: vec![Method::Fcc, Method::Energy, Method::Pearson, Method::Chatterjee],
            multiplier: MultiplierLaw::Rademacher,
            norm: NormalizationKind::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub method: Method,
    pub n: usize,
    pub delta: f64,
    pub rejections: usize,
    /// Replications that produced a test result.
    pub replications: usize,
    pub rate: f64,
    pub se: f64,
    /// Replications that failed (degenerate sample, numeric error).
    pub errors: usize,
}

impl PowerRow {
    fn new(method: Method, n: usize, delta: f64, rejections: usize, replications: usize, errors: usize) -> Self {
        let rate = if replications == 0 { 0.0 } else { rejections as f64 / replications as f64 };
        let se = if replications == 0 { 0.0 } else { (rate * (1.0 - rate) / replications as f64).sqrt() };
        PowerRow { method, n, delta, rejections, replications, rate, se, errors }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub setting: SettingTag,
    pub alpha: f64,
    pub rows: Vec<PowerRow>,
}

pub const POWER_CSV_HEADER: &str = "method,n,delta,rejections,replications,rate,se,errors";

/// Seed of the data in replication `rep` at sample-size index `n_index`.
pub fn replication_seed(seed: u64, n_index: usize, rep: usize) -> u64 {
    mix64(mix64(seed, n_index as u64), rep as u64)
}

/// Runs one test on a sample. Pearson and Chatterjee use the first
/// coordinates of each object; all baselines are calibrated by permutation.
pub fn run_method(
    method: Method,
    sample: &PairedSample,
    partition: &PartitionConfig,
    opts: &PowerOptions,
    seed: u64,
) -> Result<TestResult> {
    match method {
        Method::Fcc => {
            let part = partition.build(&sample.xs, &sample.space_x)?;
            wild_bootstrap_test(
                &sample.xs,
                &sample.ys,
                &sample.space_y,
                &part,
                opts.boot,
                opts.multiplier,
                opts.norm,
                seed,
            )
        }
        Method::Energy => {
            PreparedDcov::new(&sample.xs, &sample.ys, &sample.space_x, &sample.space_y)?.permutation_test(opts.boot, seed)
        }
        Method::Pearson => {
            let s = ScalarPairSample::first_coordinates(&sample.xs, &sample.ys)?;
            pearson_r(&s)?;
            let x = s.x();
            let y = s.y();
            let mut r = permutation_test_indexed(
                |perm| {
                    let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
                    ScalarPairSample::new(x.to_vec(), yp)
                        .and_then(|p| pearson_r(&p))
                        .map(f64::abs)
                        .unwrap_or(0.0)
                },
                s.len(),
                opts.boot,
                seed,
            )?;
            r.method = "pearson_permutation".into();
            Ok(r)
        }
        Method::Chatterjee => {
            let s = ScalarPairSample::first_coordinates(&sample.xs, &sample.ys)?;
            let x = s.x();
            let y = s.y();
            let mut r = permutation_test_indexed(
                |perm| {
                    let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
                    ScalarPairSample::new(x.to_vec(), yp).map(|p| chatterjee_xi(&p)).unwrap_or(0.0)
                },
                s.len(),
                opts.boot,
                seed,
            )?;
            r.method = "chatterjee_permutation".into();
            Ok(r)
        }
    }
}

/// Rejection rates per method and sample size. Failed replications are
/// counted in `errors` and never abort the sweep.
pub fn run_power(config: &SimConfig, opts: &PowerOptions) -> Result<PowerCurve> {
    config.validate()?;
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(FccError::invalid(format!("alpha must lie in (0, 1) (got {})", opts.alpha)));
    }
    if opts.boot < 1 {
        return Err(FccError::invalid("the number of resamples must be at least 1"));
    }
    let partition = PartitionConfig::new(config.h, config.min_cell);
    let mut rows = Vec::new();
    for (ni, &n) in opts.n_list.iter().enumerate() {
        let cfg = SimConfig { n, ..config.clone() };
        let outcomes: Vec<Vec<Option<bool>>> = (0..opts.reps)
            .into_par_iter()
            .map(|rep| {
                let data_seed = replication_seed(opts.seed, ni, rep);
                let sample = cfg.generate_with(&mut stream(data_seed, 0));
                opts.methods
                    .iter()
                    .enumerate()
                    .map(|(mi, &m)| {
                        let sample = sample.as_ref().ok()?;
                        run_method(m, sample, &partition, opts, mix64(data_seed, mi as u64 + 1))
                            .ok()
                            .map(|r| r.p_value <= opts.alpha)
                    })
                    .collect()
            })
            .collect();
        for (mi, &m) in opts.methods.iter().enumerate() {
            let done: Vec<bool> = outcomes.iter().filter_map(|o| o[mi]).collect();
            let rejections = done.iter().filter(|&&r| r).count();
            rows.push(PowerRow::new(m, n, config.delta, rejections, done.len(), opts.reps - done.len()));
        }
    }
    Ok(PowerCurve { setting: config.setting, alpha: opts.alpha, rows })
}

impl PowerCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{POWER_CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.method,
                r.n,
                fmt_float(r.delta),
                r.rejections,
                r.replications,
                fmt_float(r.rate),
                fmt_float(r.se),
                r.errors
            ));
        }
        out
    }

    /// Self-contained SVG line chart of rejection rate against `n`.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 140.0;
        const TOP: f64 = 30.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

        let ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        let n_min = ns.iter().copied().min().unwrap_or(0) as f64;
        let n_max = ns.iter().copied().max().unwrap_or(1) as f64;
        let span = if n_max > n_min { n_max - n_min } else { 1.0 };
        let px = |n: f64| LEFT + (n - n_min) / span * (W - LEFT - RIGHT);
        let py = |r: f64| TOP + (1.0 - r) * (H - TOP - BOTTOM);

        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        s.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{} rejection rate (alpha = {})</text>\n",
            (W - RIGHT + LEFT) / 2.0,
            self.setting,
            self.alpha
        ));
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, py(0.0), py(1.0));
        s.push_str(&format!("<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"));
        s.push_str(&format!("<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"));
        for i in 0..=5 {
            let r = i as f64 / 5.0;
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{r:.1}</text>\n",
                x0 - 6.0,
                py(r) + 4.0
            ));
        }
        let mut uniq = ns.clone();
        uniq.sort_unstable();
        uniq.dedup();
        for n in &uniq {
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{n}</text>\n",
                px(*n as f64),
                y0 + 18.0
            ));
        }
        s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n</text>\n", (x0 + x1) / 2.0, H - 8.0));
        let alpha_y = py(self.alpha);
        s.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{alpha_y}\" x2=\"{x1}\" y2=\"{alpha_y}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n"
        ));

        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for (i, m) in methods.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = self
                .rows
                .iter()
                .filter(|r| r.method == *m)
                .map(|r| format!("{:.2},{:.2}", px(r.n as f64), py(r.rate)))
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
            let ly = TOP + 20.0 * i as f64 + 10.0;
            s.push_str(&format!(
                "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                x1 + 15.0,
                x1 + 40.0
            ));
            s.push_str(&format!("<text x=\"{}\" y=\"{}\">{m}</text>\n", x1 + 46.0, ly + 4.0));
        }
        s.push_str("</svg>\n");
        s
    }
}
