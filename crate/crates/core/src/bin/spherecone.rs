use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use spherecone::experiments::{strata_scaling, trial_integral, SphereGenerator, StrataSettings};
use spherecone::finance::{
    brownian_transform, experiment_table, price_option, reference_prices, ConstructionKind, Generator, OptionKind,
    OptionSpec,
};
use spherecone::io::{fmt_f64, read_rows, write_rows, write_table};
use spherecone::lds::{bits_to_open_unit, DirectionNumberTable, Scramble, SobolStream};
use spherecone::specfun::inv_normal_cdf;
use spherecone::spheremap::{Lift, SpacePoint, SphereMap, UnitVector};
use spherecone::wce::{
    lambda_k, lambda_k_asymptotic, rms_wce_fixed_directions, rms_wce_iid, wce_nakagami, KernelParams,
};
use spherecone::{Error, Result};

#[derive(Parser, Debug, Serialize)]
#[command(name = "spherecone", version, about = "Sphere-lifted QMC point sets, cone discrepancies and option pricing")]
struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate point sets.
    Points(PointsArgs),
    /// Map unit-cube points to the sphere.
    SphereMap(SphereMapArgs),
    /// Worst-case error of a point set read from CSV.
    Wce(WceArgs),
    /// Expected worst-case error of random point sets.
    RmsWce(RmsWceArgs),
    /// Equal-weight integration of (x_1 + ... + x_d)^2 over the sphere.
    TrialIntegral(TrialArgs),
    /// Scaling of stratified sampling on S^2.
    Strata(StrataArgs),
    /// The radial stratification sum Lambda_K.
    Lambda(LambdaArgs),
    /// Price one option.
    Price(PriceArgs),
    /// Option tables over all methods.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum PointGen {
    /// Points of the unit cube.
    Cube,
    /// Inverse-normal images of Sobol' points.
    Sobol,
    /// Sphere-lifted Sobol' points.
    Sphere,
    /// Pseudo-random normals.
    Mc,
}

#[derive(Args, Debug, Serialize)]
struct PointsArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "sphere")]
    gen: PointGen,
    /// Scrambling seed; Sobol' points are unscrambled without it.
    #[arg(long)]
    seed: Option<u64>,
    /// Direction numbers in "d s a m_i" format.
    #[arg(long, env = "SPHERECONE_DIRFILE")]
    dirfile: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SphereMapArgs {
    /// CSV of points in [0,1)^s; without it `--n` Sobol' points of dimension `--dim` are mapped.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    dim: Option<usize>,
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct KernelArgs {
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long = "A", default_value_t = 1.0)]
    a: f64,
    #[arg(long = "B", default_value_t = 2.0)]
    b: f64,
}

impl KernelArgs {
    fn params(&self, d: usize) -> Result<KernelParams> {
        KernelParams::new(self.mu, self.a, self.b, d)
    }
}

#[derive(Args, Debug, Serialize)]
struct WceArgs {
    /// CSV of Cartesian points in R^{d+1}.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Args, Debug, Serialize)]
struct RmsWceArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Sphere dimension d (points live in R^{d+1}).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long = "N", value_delimiter = ',', default_value = "1")]
    n: Vec<usize>,
    /// Fixed directions (CSV of unit vectors); radii stay random.
    #[arg(long)]
    dirs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum TrialGen {
    InverseBeta,
    InverseNormal,
    Random,
    All,
}

#[derive(Args, Debug, Serialize)]
struct TrialArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long = "N", value_delimiter = ',', default_value = "1024,4096,16384,65536,262144,1048576")]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value = "all")]
    gen: TrialGen,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct StrataArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long = "M", value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
    m: Vec<usize>,
    /// Random point sets per level for the empirical means.
    #[arg(long, default_value_t = 100)]
    draws: usize,
    /// Largest N = MK with empirical means.
    #[arg(long, default_value_t = 2048)]
    empirical_max_n: usize,
    /// Monte Carlo pairs per zone for the cell distances.
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct LambdaArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    c: f64,
    #[arg(long = "K", value_delimiter = ',')]
    k: Vec<usize>,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct ContractArgs {
    #[arg(long = "S0", default_value_t = 100.0)]
    s0: f64,
    #[arg(long = "K", default_value_t = 100.0)]
    strike: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    maturity: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 130.0)]
    barrier: f64,
}

impl ContractArgs {
    fn spec(&self, kind: OptionKind) -> Result<OptionSpec> {
        OptionSpec::new(self.s0, self.strike, self.maturity, self.sigma, self.r, self.steps, Some(self.barrier), kind)
    }
}

#[derive(Args, Debug, Serialize)]
struct PriceArgs {
    #[command(flatten)]
    contract: ContractArgs,
    #[arg(long, value_enum, default_value = "asian")]
    kind: OptionKind,
    /// Total number of paths.
    #[arg(long = "N", default_value_t = 1 << 15)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    reps: usize,
    #[arg(long, value_enum, default_value = "sphere")]
    gen: Generator,
    #[arg(long, value_enum, default_value = "pca")]
    construction: ConstructionKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum TableKind {
    Asian,
    Barrier,
    Digital,
    All,
}

#[derive(Args, Debug, Serialize)]
struct TableArgs {
    #[command(flatten)]
    contract: ContractArgs,
    #[arg(long, value_enum, default_value = "all")]
    kind: TableKind,
    #[arg(long = "N", value_delimiter = ',', default_value = "32768,65536,131072,262144,524288")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also compute pseudo-random reference prices with this many paths.
    #[arg(long)]
    reference: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match serde_json::to_string(&cli) {
        Ok(s) => log::info!("config {s}"),
        Err(e) => log::warn!("could not serialize config: {e}"),
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let fmt = |default| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Points(a) => cmd_points(a, fmt(Format::Csv), out),
        Command::SphereMap(a) => cmd_sphere_map(a, fmt(Format::Csv), out),
        Command::Wce(a) => cmd_wce(a, fmt(Format::Json), out),
        Command::RmsWce(a) => cmd_rms_wce(a, fmt(Format::Csv), out),
        Command::TrialIntegral(a) => cmd_trial(a, fmt(Format::Csv), out),
        Command::Strata(a) => cmd_strata(a, fmt(Format::Csv), out),
        Command::Lambda(a) => cmd_lambda(a, fmt(Format::Csv), out),
        Command::Price(a) => cmd_price(a, fmt(Format::Csv), out),
        Command::Table(a) => cmd_table(a, fmt(Format::Csv), out),
    }
}

fn emit_json<T: Serialize>(mut out: Box<dyn Write>, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn emit_rows(out: Box<dyn Write>, format: Format, rows: &[Vec<f64>]) -> Result<()> {
    match format {
        Format::Csv => write_rows(out, rows),
        Format::Json => emit_json(out, &rows),
    }
}

/// Emits serializable records as CSV (header from `header`) or a JSON array.
fn emit_records<T: Serialize>(
    out: Box<dyn Write>,
    format: Format,
    items: &[T],
    header: &[&str],
    fields: impl Fn(&T) -> Vec<String>,
) -> Result<()> {
    match format {
        Format::Json => emit_json(out, &items),
        Format::Csv => write_table(out, header, &items.iter().map(fields).collect::<Vec<_>>()),
    }
}

/// Like [`emit_records`] for a single record; JSON output is an object.
fn emit_one<T: Serialize>(
    out: Box<dyn Write>,
    format: Format,
    item: &T,
    header: &[&str],
    fields: impl Fn(&T) -> Vec<String>,
) -> Result<()> {
    match format {
        Format::Json => emit_json(out, item),
        Format::Csv => write_table(out, header, &[fields(item)]),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn cmd_points(a: &PointsArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    if a.dim == 0 || a.n == 0 {
        return Err(Error::Config("--dim and --n must be positive".into()));
    }
    let table = match &a.dirfile {
        Some(p) => DirectionNumberTable::from_file(p)?,
        None => DirectionNumberTable::embedded().clone(),
    };
    let scramble = a.seed.map_or(Scramble::Off, |seed| Scramble::Linear { seed, replicate: 0 });
    let d = a.dim;
    let mut rows = Vec::with_capacity(a.n);
    match a.gen {
        PointGen::Mc => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
            for _ in 0..a.n {
                rows.push((0..d).map(|_| StandardNormal.sample(&mut rng)).collect());
            }
        }
        PointGen::Cube | PointGen::Sobol | PointGen::Sphere => {
            let mut s = SobolStream::with_table(&table, d, scramble)?;
            let lift = if a.gen == PointGen::Sphere { Some(Lift::new(d)?) } else { None };
            let mut bits = vec![0u32; d];
            let mut u = vec![0.0; d];
            for _ in 0..a.n {
                let row = match a.gen {
                    PointGen::Cube => s.next_point()?,
                    PointGen::Sobol => {
                        s.next_bits(&mut bits)?;
                        bits.iter().map(|&b| inv_normal_cdf(bits_to_open_unit(b))).collect::<Result<_>>()?
                    }
                    _ => {
                        s.next_into(&mut u)?;
                        let mut z = vec![0.0; d];
                        lift.as_ref().expect("lift built").lift_into(&u, &mut z)?;
                        z
                    }
                };
                rows.push(row);
            }
        }
    }
    emit_rows(out, format, &rows)
}

fn cmd_sphere_map(a: &SphereMapArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let cube = match &a.input {
        Some(p) => read_rows(File::open(p)?)?,
        None => {
            let (dim, n) = (a.dim.unwrap_or(0), a.n.unwrap_or(0));
            let mut s = match a.seed {
                Some(seed) => SobolStream::scrambled(dim, seed, 0)?,
                None => SobolStream::new(dim)?,
            };
            (0..n).map(|_| s.next_point()).collect::<Result<_>>()?
        }
    };
    let Some(first) = cube.first() else {
        return Err(Error::Config("no input points".into()));
    };
    let map = SphereMap::new(first.len())?;
    let rows: Vec<Vec<f64>> = cube.iter().map(|x| Ok(map.map(x)?.coords().to_vec())).collect::<Result<_>>()?;
    emit_rows(out, format, &rows)
}

fn read_space_points(path: &PathBuf) -> Result<Vec<SpacePoint>> {
    let rows = read_rows(File::open(path)?)?;
    if rows.is_empty() {
        return Err(Error::Config(format!("{} has no points", path.display())));
    }
    rows.iter().map(|r| SpacePoint::from_cartesian(r)).collect()
}

fn cmd_wce(a: &WceArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let x = read_space_points(&a.input)?;
    let ambient = x[0].ambient_dim();
    if ambient < 2 {
        return Err(Error::Config("points need at least two coordinates".into()));
    }
    let report = wce_nakagami(&a.kernel.params(ambient - 1)?, &x)?;
    emit_one(out, format, &report, &["wce", "double_sum_term", "single_sum_term", "W_K", "n_points", "clamped"], |r| {
        vec![
            fmt_f64(r.wce),
            fmt_f64(r.double_sum_term),
            fmt_f64(r.single_sum_term),
            fmt_f64(r.w_k),
            r.n_points.to_string(),
            r.clamped.to_string(),
        ]
    })
}

#[derive(Serialize)]
struct RmsRow {
    n: usize,
    expected_wce_sq: f64,
    rms_wce: f64,
}

fn cmd_rms_wce(a: &RmsWceArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let p = a.kernel.params(a.dim)?;
    let rows: Vec<RmsRow> = match &a.dirs {
        Some(path) => {
            let y: Vec<UnitVector> =
                read_rows(File::open(path)?)?.into_iter().map(UnitVector::new).collect::<Result<_>>()?;
            let e = rms_wce_fixed_directions(&p, &y)?;
            vec![RmsRow { n: y.len(), expected_wce_sq: e, rms_wce: e.max(0.0).sqrt() }]
        }
        None => {
            let c = rms_wce_iid(&p);
            a.n.iter()
                .map(|&n| {
                    if n == 0 {
                        return Err(Error::Config("N must be positive".into()));
                    }
                    let e = c / n as f64;
                    Ok(RmsRow { n, expected_wce_sq: e, rms_wce: e.sqrt() })
                })
                .collect::<Result<_>>()?
        }
    };
    emit_records(out, format, &rows, &["N", "expected_wce_sq", "rms_wce"], |r| {
        vec![r.n.to_string(), fmt_f64(r.expected_wce_sq), fmt_f64(r.rms_wce)]
    })
}

fn cmd_trial(a: &TrialArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let gens = match a.gen {
        TrialGen::InverseBeta => vec![SphereGenerator::InverseBeta],
        TrialGen::InverseNormal => vec![SphereGenerator::InverseNormal],
        TrialGen::Random => vec![SphereGenerator::Random],
        TrialGen::All => vec![SphereGenerator::InverseBeta, SphereGenerator::InverseNormal, SphereGenerator::Random],
    };
    let mut rows = Vec::new();
    for g in gens {
        rows.extend(trial_integral(a.dim, &a.n, g, a.seed)?);
    }
    emit_records(out, format, &rows, &["d", "N", "generator", "estimate", "error"], |r| {
        let g = serde_json::to_value(r.generator).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        vec![r.d.to_string(), r.n.to_string(), g, fmt_f64(r.estimate), fmt_f64(r.error)]
    })
}

fn cmd_strata(a: &StrataArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let p = a.kernel.params(2)?;
    let settings = StrataSettings {
        draws: a.draws,
        empirical_max_n: a.empirical_max_n,
        distance_samples: a.samples,
        seed: a.seed,
    };
    let study = strata_scaling(&p, &a.m, &settings)?;
    log::info!(
        "slopes: formula {:.4}, empirical {:?}, iid {:.4}, iid empirical {:?}",
        study.formula_slope,
        study.empirical_slope,
        study.iid_slope,
        study.iid_empirical_slope
    );
    match format {
        Format::Json => emit_json(out, &study),
        Format::Csv => write_table(
            out,
            &[
                "M",
                "K",
                "N",
                "formula",
                "formula_se",
                "empirical",
                "empirical_se",
                "iid",
                "iid_empirical",
                "iid_empirical_se",
            ],
            &study
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.k.to_string(),
                        r.n.to_string(),
                        fmt_f64(r.formula),
                        fmt_f64(r.formula_se),
                        opt(r.empirical),
                        opt(r.empirical_se),
                        fmt_f64(r.iid),
                        opt(r.iid_empirical),
                        opt(r.iid_empirical_se),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct LambdaRow {
    k: usize,
    lambda: f64,
    asymptotic: f64,
}

fn cmd_lambda(a: &LambdaArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    if a.k.is_empty() {
        return Err(Error::Config("give at least one --K".into()));
    }
    let rows: Vec<LambdaRow> = a
        .k
        .iter()
        .map(|&k| Ok(LambdaRow { k, lambda: lambda_k(a.mu, a.c, k)?, asymptotic: lambda_k_asymptotic(a.mu, a.c, k)? }))
        .collect::<Result<_>>()?;
    emit_records(out, format, &rows, &["K", "lambda", "asymptotic"], |r| {
        vec![r.k.to_string(), fmt_f64(r.lambda), fmt_f64(r.asymptotic)]
    })
}

fn cmd_price(a: &PriceArgs, format: Format, out: Box<dyn Write>) -> Result<()> {
    let spec = a.contract.spec(a.kind)?;
    let cons = brownian_transform(spec.steps, spec.maturity, a.construction)?;
    let est = price_option(&spec, &cons, a.gen, a.n, a.reps, a.seed)?;
    emit_one(out, format, &est, &["mean", "std_dev_across_replicates", "std_error", "N", "replicates"], |e| {
        vec![
            fmt_f64(e.mean),
            fmt_f64(e.std_dev_across_replicates),
            fmt_f64(e.std_error),
            e.n_points.to_string(),
            e.n_replicates.to_string(),
        ]
    })
}

fn cmd_table(a: &TableArgs, format: Format, mut out: Box<dyn Write>) -> Result<()> {
    let kinds = match a.kind {
        TableKind::Asian => vec![OptionKind::Asian],
        TableKind::Barrier => vec![OptionKind::Barrier],
        TableKind::Digital => vec![OptionKind::Digital],
        TableKind::All => vec![OptionKind::Asian, OptionKind::Barrier, OptionKind::Digital],
    };
    let specs: Vec<OptionSpec> = kinds.iter().map(|&k| a.contract.spec(k)).collect::<Result<_>>()?;
    let rows = experiment_table(&specs, &a.n, a.reps, a.seed)?;
    if let Some(paths) = a.reference {
        for (s, e) in specs.iter().zip(reference_prices(&specs, paths, a.seed ^ 0x5eed)?) {
            log::info!("reference {:?}: {:.8} +- {:.2e}", s.kind, e.mean, e.std_error);
        }
    }
    match format {
        Format::Json => emit_json(out, &rows),
        Format::Csv => {
            let recs: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let kind = serde_json::to_value(r.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default();
                    vec![
                        kind,
                        r.n.to_string(),
                        r.method.to_string(),
                        fmt_f64(r.mean),
                        fmt_f64(r.std_dev),
                        fmt_f64(r.std_error),
                    ]
                })
                .collect();
            write_table(&mut out, &["kind", "N", "method", "mean", "std_dev", "std_error"], &recs)
        }
    }
}
