use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fcc::bootstrap::{MultiplierLaw, NormalizationKind};
use fcc::embed::embed_responses;
use fcc::io::{fmt_float, parse_samples, write_samples};
use fcc::nulls::{fixed_m_spectrum, studentized_diagnostic, WeightedChi2Sample, WEIGHTED_CHI2_DRAWS, WEIGHTED_CHI2_SEED};
use fcc::rng::mix64;
use fcc::study::{run_power, Method, PowerOptions};
use fcc::{fcc_estimate, wild_bootstrap_test, FccError, MetricObject, PartitionConfig, SettingTag, SimConfig, Space};
use fcc::{chi2_upper_tail, SpdMetric, SphereMetric};

const EXIT_INVALID: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "fcc", version, about = "Fréchet correlation: estimation, testing, power studies and null tables")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the coefficient and print it as JSON.
    Estimate(EstimateArgs),
    /// Wild bootstrap test of a null coefficient, printed as JSON.
    Test(TestArgs),
    /// Monte Carlo rejection rates as CSV, optionally with an SVG chart.
    Power(PowerArgs),
    /// Fixed-M weighted chi-square spectrum and studentized diagnostic as CSV.
    Nulltable(NullArgs),
    /// Draw a sample from a simulation setting and write it in the text format.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SphereArg {
    Chordal,
    Geodesic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpdArg {
    LogCholesky,
    LogEuclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum MultiplierArg {
    Rademacher,
    Gaussian,
    Mammen,
}

impl From<MultiplierArg> for MultiplierLaw {
    fn from(m: MultiplierArg) -> Self {
        match m {
            MultiplierArg::Rademacher => MultiplierLaw::Rademacher,
            MultiplierArg::Gaussian => MultiplierLaw::Gaussian,
            MultiplierArg::Mammen => MultiplierLaw::MammenTwoPoint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Identity,
    Plugin,
}

impl From<NormArg> for NormalizationKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Identity => NormalizationKind::Identity,
            NormArg::Plugin => NormalizationKind::PluginHessian,
        }
    }
}

/// Simulation setting selection shared by several commands.
#[derive(Args, Clone)]
struct SettingArgs {
    /// Simulation setting (s1..s5, wass_noise_1, wass_noise_2, spd_logE_1, spd_logE_2).
    #[arg(long)]
    setting: Option<String>,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, `key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    delta: Option<f64>,
}

/// Where the paired sample comes from.
#[derive(Args, Clone)]
struct DataArgs {
    /// Predictor sample file.
    #[arg(long, requires = "y")]
    x: Option<PathBuf>,
    /// Response sample file.
    #[arg(long, requires = "x")]
    y: Option<PathBuf>,
    #[command(flatten)]
    setting: SettingArgs,
    /// Sample size when drawing from a setting.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "chordal")]
    sphere_metric: SphereArg,
    #[arg(long, value_enum, default_value = "log-cholesky")]
    spd_metric: SpdArg,
}

#[derive(Args)]
struct PartitionArgs {
    /// Number of prototypes.
    #[arg(long = "H", visible_alias = "M")]
    h: Option<usize>,
    /// Minimum cell size.
    #[arg(long)]
    min_cell: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the partition as CSV.
    #[arg(long)]
    partition_out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Bootstrap replicates.
    #[arg(long = "B", visible_alias = "boot", default_value_t = 500)]
    b: usize,
    #[arg(long, value_enum, default_value = "rademacher")]
    multiplier: MultiplierArg,
    #[arg(long, value_enum, default_value = "identity")]
    norm: NormArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    setting: SettingArgs,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "50,80,100,150", value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Bootstrap replicates or permutations per test.
    #[arg(long, default_value_t = 500)]
    boot: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "fcc,energy,pearson,chatterjee", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "rademacher")]
    multiplier: MultiplierArg,
    #[arg(long, value_enum, default_value = "identity")]
    norm: NormArg,
    /// Write a line chart of the rejection rates here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct NullArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo draws for the weighted chi-square tail.
    #[arg(long, default_value_t = WEIGHTED_CHI2_DRAWS)]
    draws: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    setting: SettingArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out_x: PathBuf,
    #[arg(long)]
    out_y: PathBuf,
}

enum CliError {
    Lib(FccError),
    Io(String),
}

impl From<FccError> for CliError {
    fn from(e: FccError) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Lib(FccError::InvalidInput(msg.into()))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn sim_config(args: &SettingArgs) -> CliResult<SimConfig> {
    let mut cfg = match (&args.config, &args.setting) {
        (Some(path), setting) => {
            let cfg = SimConfig::parse(&read(path)?)?;
            if let Some(tag) = setting {
                if tag.parse::<SettingTag>()? != cfg.setting {
                    return Err(invalid(format!("--setting {tag} contradicts the config file ({})", cfg.setting)));
                }
            }
            cfg
        }
        (None, Some(tag)) => SimConfig::new(tag.parse()?),
        (None, None) => return Err(invalid("give either --x/--y sample files, --setting or --config")),
    };
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    Ok(cfg)
}

struct Loaded {
    xs: Vec<MetricObject>,
    ys: Vec<MetricObject>,
    space_x: Space,
    space_y: Space,
    default_partition: (usize, usize),
}

fn load_file(path: &Path, sphere: SphereMetric, spd: SpdMetric) -> CliResult<(Vec<MetricObject>, Space)> {
    let file = parse_samples(&read(path)?).map_err(|e| match e {
        FccError::Parse { line, message } => invalid(format!("{}:{line}: {message}", path.display())),
        other => CliError::Lib(other),
    })?;
    let space = file.space(sphere, spd)?;
    Ok((file.objects, space))
}

fn load_data(args: &DataArgs, seed: u64) -> CliResult<Loaded> {
    let sphere = match args.sphere_metric {
        SphereArg::Chordal => SphereMetric::Chordal,
        SphereArg::Geodesic => SphereMetric::Geodesic,
    };
    let spd = match args.spd_metric {
        SpdArg::LogCholesky => SpdMetric::LogCholesky,
        SpdArg::LogEuclidean => SpdMetric::LogEuclidean,
    };
    if let (Some(xp), Some(yp)) = (&args.x, &args.y) {
        let (xs, space_x) = load_file(xp, sphere, spd)?;
        let (ys, space_y) = load_file(yp, sphere, spd)?;
        if xs.len() != ys.len() {
            return Err(invalid(format!("{} predictors but {} responses", xs.len(), ys.len())));
        }
        return Ok(Loaded { xs, ys, space_x, space_y, default_partition: (15, 5) });
    }
    let mut cfg = sim_config(&args.setting)?;
    cfg.seed = seed;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    let s = cfg.generate()?;
    Ok(Loaded { xs: s.xs, ys: s.ys, space_x: s.space_x, space_y: s.space_y, default_partition: (cfg.h, cfg.min_cell) })
}

fn partition_config(args: &PartitionArgs, default: (usize, usize)) -> PartitionConfig {
    PartitionConfig::new(args.h.unwrap_or(default.0), args.min_cell.unwrap_or(default.1))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn cmd_estimate(a: EstimateArgs) -> CliResult<String> {
    let data = load_data(&a.data, a.seed)?;
    let pc = partition_config(&a.partition, data.default_partition);
    let partition = pc.build(&data.xs, &data.space_x)?;
    if let Some(path) = &a.partition_out {
        write(path, &partition.to_csv(pc.h, pc.min_cell))?;
    }
    let est = fcc_estimate(&data.xs, &data.ys, &data.space_y, &partition)?;
    Ok(json(&est.record()))
}

fn cmd_test(a: TestArgs) -> CliResult<String> {
    let data = load_data(&a.data, a.seed)?;
    let partition = partition_config(&a.partition, data.default_partition).build(&data.xs, &data.space_x)?;
    let result = wild_bootstrap_test(
        &data.xs,
        &data.ys,
        &data.space_y,
        &partition,
        a.b,
        a.multiplier.into(),
        a.norm.into(),
        a.seed,
    )?;
    Ok(json(&result))
}

fn cmd_power(a: PowerArgs) -> CliResult<String> {
    let mut cfg = sim_config(&a.setting)?;
    if let Some(h) = a.partition.h {
        cfg.h = h;
    }
    if let Some(m) = a.partition.min_cell {
        cfg.min_cell = m;
    }
    let methods = a.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>, _>>()?;
    let opts = PowerOptions {
        n_list: a.n_list,
        reps: a.reps,
        boot: a.boot,
        alpha: a.alpha,
        seed: a.seed,
        methods,
        multiplier: a.multiplier.into(),
        norm: a.norm.into(),
    };
    let curve = run_power(&cfg, &opts)?;
    if let Some(path) = &a.svg {
        write(path, &curve.to_svg())?;
    }
    Ok(curve.to_csv())
}

fn cmd_nulltable(a: NullArgs) -> CliResult<String> {
    let data = load_data(&a.data, a.seed)?;
    let pc = partition_config(&a.partition, (data.default_partition.0, data.default_partition.1.max(2)));
    let partition = pc.build(&data.xs, &data.space_x)?;
    let est = fcc_estimate(&data.xs, &data.ys, &data.space_y, &partition)?;
    let sample = embed_responses(&data.space_y, &data.ys)?;
    let spectrum = fixed_m_spectrum(&sample, &partition, est.v_f_hat)?;
    let diag = studentized_diagnostic(&sample, &partition, est.rho_hat, est.v_f_hat)?;
    let law = WeightedChi2Sample::new(&spectrum.eigenvalues, a.draws, mix64(WEIGHTED_CHI2_SEED, a.seed));
    let tail = law.tail(diag.stat / spectrum.scale);
    let df = partition.num_cells().saturating_sub(1) as u32;
    let mut out = spectrum.to_csv();
    out.push('\n');
    out.push_str(&diag.to_csv());
    out.push('\n');
    out.push_str("stat,weighted_chi2_p,weighted_chi2_se,chi2_p,df\n");
    out.push_str(&format!(
        "{},{},{},{},{}\n",
        fmt_float(diag.stat),
        fmt_float(tail.p),
        fmt_float(tail.std_err),
        fmt_float(chi2_upper_tail(diag.stat, df)),
        df
    ));
    Ok(out)
}

fn cmd_generate(a: GenerateArgs) -> CliResult<String> {
    let mut cfg = sim_config(&a.setting)?;
    cfg.seed = a.seed;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    let s = cfg.generate()?;
    write(&a.out_x, &write_samples(&s.space_x, &s.xs))?;
    write(&a.out_y, &write_samples(&s.space_y, &s.ys))?;
    Ok(cfg.to_text())
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Test(a) => cmd_test(a),
        Command::Power(a) => cmd_power(a),
        Command::Nulltable(a) => cmd_nulltable(a),
        Command::Generate(a) => cmd_generate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INVALID);
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            let degenerate = e.is_degenerate() || matches!(e, FccError::Numeric(_) | FccError::Convergence { .. });
            ExitCode::from(if degenerate { EXIT_DEGENERATE } else { EXIT_INVALID })
        }
    }
}
