//! Command-line front end. Every command is a pure function of its flags, seed
//! and input files, and writes a `.meta.json` sidecar next to each output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;

use crate::baselines::{clustered_design, fedorov_exchange, lhs_design, random_design, Placement};
use crate::design::{Design, Provenance};
use crate::diagnostics::{
    default_reference_side, f_function, g_function, k_csr, linspace, reference_grid, ripley_k,
    EdgeCorrection,
};
use crate::dpp::sample_fixed_rank_dpp;
use crate::emulator::{emulate_design, sequential_design, SequentialState};
use crate::error::DesignError;
use crate::io::{self, RunMetadata};
use crate::kernel::{build_kernel_matrix, CandidateSet, KernelFamily, KernelSpec};
use crate::rng::from_seed;
use crate::sgd::{mse_ratio_experiment, ExperimentConfig, SgdConfig};

/// Environment variable naming the directory used when `--out` is omitted.
pub const OUT_DIR_ENV: &str = "DPPDESIGN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dppdesign", version, about = "Entropy-optimal design emulation with determinantal point processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy mode of the fixed-rank DPP (the emulated optimal design).
    Emulate(EmulateArgs),
    /// Exact draw from the fixed-rank DPP.
    Sample(SampleArgs),
    /// Batch-sequential emulation, optionally without shared coordinates.
    Sequential(SequentialArgs),
    /// One-at-a-time exchange on the entropy criterion.
    Exchange(ExchangeArgs),
    /// Latin hypercube sample.
    Lhs(LhsArgs),
    /// Uniform subset of the candidates, or a clustered pattern.
    Random(RandomArgs),
    /// F, G and Ripley's K summaries of a design.
    Diagnose(DiagnoseArgs),
    /// Random versus designed mini-batches for SGD.
    SgdDemo(SgdArgs),
}

#[derive(Debug, Args)]
pub struct CandidateArgs {
    /// Use the m^d lattice of cell centres (i - 0.5) / m.
    #[arg(long, conflicts_with = "candidates")]
    pub grid: Option<usize>,
    /// Dimension of the lattice.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// CSV of candidate coordinates.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Exponential,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelFamily::GaussianIso,
            KernelArg::Exponential => KernelFamily::ExponentialL1,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 0.01)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0.0)]
    pub nugget: f64,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (defaults to `<command>.csv` in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmulateArgs {
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub n: usize,
    /// Break near-ties at random (seeded) instead of by lowest index.
    #[arg(long)]
    pub random_ties: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SequentialArgs {
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Design CSV (with an index column) to extend.
    #[arg(long)]
    pub existing: Option<PathBuf>,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub batch_sizes: Vec<usize>,
    /// Comma-separated rho per batch (defaults to --rho for every batch).
    #[arg(long, value_delimiter = ',')]
    pub rho_schedule: Vec<f64>,
    /// Forbid design points sharing a coordinate in any dimension.
    #[arg(long)]
    pub no_collapse: bool,
    #[arg(long)]
    pub random_ties: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ExchangeArgs {
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlacementArg {
    Centroid,
    Uniform,
}

#[derive(Debug, Args)]
pub struct LhsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = PlacementArg::Centroid)]
    pub placement: PlacementArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Uniform,
    Clustered,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = PatternArg::Uniform)]
    pub pattern: PatternArg,
    /// Cluster centre (every coordinate).
    #[arg(long, default_value_t = 0.5)]
    pub mean: f64,
    #[arg(long, default_value_t = 0.125)]
    pub sd: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    #[value(name = "F", alias = "f")]
    F,
    #[value(name = "G", alias = "g")]
    G,
    #[value(name = "K", alias = "k")]
    K,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EdgeArg {
    None,
    Translation,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Design CSV (`index,x1,..` or bare coordinates).
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, value_enum, default_value_t = StatArg::All)]
    pub stat: StatArg,
    #[arg(long, default_value_t = 0.5)]
    pub h_max: f64,
    #[arg(long, default_value_t = 51)]
    pub h_count: usize,
    #[arg(long, default_value_t = 0.5)]
    pub r_max: f64,
    #[arg(long, default_value_t = 501)]
    pub r_count: usize,
    #[arg(long, value_enum, default_value_t = EdgeArg::None)]
    pub edge: EdgeArg,
    /// Side of the F reference lattice; defaults to ceil(sqrt(N)) for a
    /// candidate set of N points given by --grid/--candidates, else 25.
    #[arg(long)]
    pub reference_side: Option<usize>,
    #[command(flatten)]
    pub cand: CandidateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SgdArgs {
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',', default_value = "23")]
    pub batchsize: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Gaussian-kernel rho for designed batches.
    #[arg(long, default_value_t = 0.01)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.05)]
    pub lr0: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Inconsistent or invalid flags (exit 2).
    Usage(String),
    /// The computation itself failed (exit 1).
    Compute(DesignError),
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn output_path(common: &CommonArgs, command: &str) -> PathBuf {
    match &common.out {
        Some(p) => p.clone(),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            dir.join(format!("{command}.csv"))
        }
    }
}

fn load_candidates(c: &CandidateArgs) -> CliResult<CandidateSet> {
    match (&c.grid, &c.candidates) {
        (Some(m), None) => {
            if *m == 0 || c.d == 0 {
                return Err(usage("--grid and --d must be positive"));
            }
            Ok(CandidateSet::grid(*m, c.d)?)
        }
        (None, Some(path)) => Ok(io::read_candidates_csv(path)?),
        (None, None) => Err(usage("give either --grid M (with --d) or --candidates FILE")),
        (Some(_), Some(_)) => Err(usage("--grid and --candidates are exclusive")),
    }
}

fn kernel_spec(k: &KernelArgs, rho: f64) -> CliResult<KernelSpec> {
    KernelSpec::with_nugget(k.kernel.into(), rho, k.nugget).map_err(|e| usage(e.to_string()))
}

fn finish(meta: &mut RunMetadata, out: &Path) -> CliResult<()> {
    meta.outputs.insert(0, out.display().to_string());
    io::write_metadata(out, meta)?;
    Ok(())
}

fn design_details(meta: &mut RunMetadata, design: &Design) {
    meta.detail("n", design.len())
        .detail("provenance", design.provenance)
        .detail("log_det", design.log_det);
}

fn kernel_details(meta: &mut RunMetadata, spec: &KernelSpec) {
    meta.detail("kernel", spec.family)
        .detail("rho", spec.rho)
        .detail("nugget", spec.nugget);
}

fn report(design: &Design, out: &Path) {
    match design.log_det {
        Some(ld) => println!("wrote {} points to {} (log det {ld:.6})", design.len(), out.display()),
        None => println!("wrote {} points to {}", design.len(), out.display()),
    }
}

fn cmd_emulate(a: &EmulateArgs, argv: Vec<String>) -> CliResult<()> {
    let candidates = load_candidates(&a.cand)?;
    let spec = kernel_spec(&a.kernel, a.kernel.rho)?;
    let k = build_kernel_matrix(&candidates, &spec)?;
    let mut rng = from_seed(a.common.seed);
    let tie_rng: Option<&mut dyn RngCore> = if a.random_ties { Some(&mut rng) } else { None };
    let design = emulate_design(&k, &candidates, a.n, tie_rng)?;
    let out = output_path(&a.common, "emulate");
    io::write_design_csv(&out, &design)?;
    let mut meta = RunMetadata::new("emulate", argv, a.common.seed);
    kernel_details(&mut meta, &spec);
    design_details(&mut meta, &design);
    finish(&mut meta, &out)?;
    report(&design, &out);
    Ok(())
}

fn cmd_sample(a: &SampleArgs, argv: Vec<String>) -> CliResult<()> {
    let candidates = load_candidates(&a.cand)?;
    let spec = kernel_spec(&a.kernel, a.kernel.rho)?;
    let k = build_kernel_matrix(&candidates, &spec)?;
    let design = sample_fixed_rank_dpp(&k, &candidates, a.n, &mut from_seed(a.common.seed))?;
    let out = output_path(&a.common, "sample");
    io::write_design_csv(&out, &design)?;
    let mut meta = RunMetadata::new("sample", argv, a.common.seed);
    kernel_details(&mut meta, &spec);
    design_details(&mut meta, &design);
    finish(&mut meta, &out)?;
    report(&design, &out);
    Ok(())
}

fn load_existing(path: &Path, candidates: &CandidateSet) -> CliResult<Design> {
    let table = io::read_design_csv(path)?;
    let indices = table.indices.ok_or_else(|| {
        usage(format!("{}: existing design needs an `index` column", path.display()))
    })?;
    let design = Design::from_indices(candidates, indices, Provenance::External)?;
    for (row, (given, actual)) in table.coords.iter().zip(&design.coords).enumerate() {
        let same = given.len() == actual.len()
            && given.iter().zip(actual).all(|(a, b)| (a - b).abs() <= 1e-9);
        if !same {
            return Err(usage(format!(
                "{}: row {} coordinates do not match candidate {}",
                path.display(),
                row + 1,
                design.indices[row]
            )));
        }
    }
    Ok(design)
}

fn cmd_sequential(a: &SequentialArgs, argv: Vec<String>) -> CliResult<()> {
    let candidates = load_candidates(&a.cand)?;
    let base = kernel_spec(&a.kernel, a.kernel.rho)?;
    let schedule = if a.rho_schedule.is_empty() {
        vec![a.kernel.rho; a.batch_sizes.len()]
    } else {
        a.rho_schedule.clone()
    };
    let existing = match &a.existing {
        Some(p) => load_existing(p, &candidates)?,
        None => Design::empty(Provenance::Sequential),
    };
    let mut state = SequentialState::new(existing, schedule.clone(), a.batch_sizes.clone())
        .map_err(|e| usage(e.to_string()))?;
    let mut rng = from_seed(a.common.seed);
    let tie_rng: Option<&mut dyn RngCore> = if a.random_ties { Some(&mut rng) } else { None };
    let design = sequential_design(&candidates, &base, &mut state, a.no_collapse, tie_rng)?;
    let out = output_path(&a.common, "sequential");
    io::write_design_csv(&out, &design)?;
    let mut meta = RunMetadata::new("sequential", argv, a.common.seed);
    kernel_details(&mut meta, &base);
    meta.detail("rho_schedule", &schedule)
        .detail("batch_sizes", &a.batch_sizes)
        .detail("no_collapse", a.no_collapse);
    design_details(&mut meta, &design);
    finish(&mut meta, &out)?;
    report(&design, &out);
    Ok(())
}

fn cmd_exchange(a: &ExchangeArgs, argv: Vec<String>) -> CliResult<()> {
    let candidates = load_candidates(&a.cand)?;
    let spec = kernel_spec(&a.kernel, a.kernel.rho)?;
    let k = build_kernel_matrix(&candidates, &spec)?;
    let res = fedorov_exchange(&k, &candidates, a.n, a.iters, &mut from_seed(a.common.seed))?;
    let out = output_path(&a.common, "exchange");
    io::write_design_csv(&out, &res.design)?;
    let mut meta = RunMetadata::new("exchange", argv, a.common.seed);
    kernel_details(&mut meta, &spec);
    meta.detail("iters", a.iters)
        .detail("initial_log_det", res.trace[0]);
    design_details(&mut meta, &res.design);
    finish(&mut meta, &out)?;
    report(&res.design, &out);
    Ok(())
}

fn cmd_lhs(a: &LhsArgs, argv: Vec<String>) -> CliResult<()> {
    let placement = match a.placement {
        PlacementArg::Centroid => Placement::Centroid,
        PlacementArg::Uniform => Placement::Uniform,
    };
    let lhs = lhs_design(a.n, a.d, placement, &mut from_seed(a.common.seed))
        .map_err(|e| usage(e.to_string()))?;
    let out = output_path(&a.common, "lhs");
    let rows: Vec<usize> = (0..a.n).collect();
    io::write_points_csv(&out, &rows, &lhs.points)?;
    let mut meta = RunMetadata::new("lhs", argv, a.common.seed);
    meta.detail("n", a.n)
        .detail("d", a.d)
        .detail("placement", placement)
        .detail("provenance", Provenance::Lhs)
        .detail("bins", &lhs.bins);
    finish(&mut meta, &out)?;
    println!("wrote {} points to {}", a.n, out.display());
    Ok(())
}

fn cmd_random(a: &RandomArgs, argv: Vec<String>) -> CliResult<()> {
    let mut rng = from_seed(a.common.seed);
    let out = output_path(&a.common, "random");
    let mut meta = RunMetadata::new("random", argv, a.common.seed);
    match a.pattern {
        PatternArg::Uniform => {
            let candidates = load_candidates(&a.cand)?;
            let design = random_design(&candidates, a.n, &mut rng)?;
            io::write_design_csv(&out, &design)?;
            design_details(&mut meta, &design);
        }
        PatternArg::Clustered => {
            if a.cand.candidates.is_some() || a.cand.grid.is_some() {
                return Err(usage("clustered patterns are continuous; drop --grid/--candidates"));
            }
            let pts = clustered_design(a.n, a.cand.d, a.mean, a.sd, &mut rng)
                .map_err(|e| usage(e.to_string()))?;
            let rows: Vec<usize> = (0..a.n).collect();
            io::write_points_csv(&out, &rows, &pts)?;
            meta.detail("n", a.n)
                .detail("d", a.cand.d)
                .detail("mean", a.mean)
                .detail("sd", a.sd)
                .detail("provenance", Provenance::Clustered);
        }
    }
    finish(&mut meta, &out)?;
    println!("wrote {} points to {}", a.n, out.display());
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn cmd_diagnose(a: &DiagnoseArgs, argv: Vec<String>) -> CliResult<()> {
    let table = io::read_design_csv(&a.design)?;
    let coords = table.coords;
    let d = coords.first().map_or(0, |p| p.len());
    if d == 0 {
        return Err(usage(format!("{}: no points", a.design.display())));
    }
    if coords.iter().any(|p| p.len() != d) {
        return Err(usage(format!("{}: ragged rows", a.design.display())));
    }
    if !(a.h_max > 0.0) || !(a.r_max > 0.0) || a.h_count < 2 || a.r_count < 2 {
        return Err(usage("grids need a positive maximum and at least two points"));
    }
    let side = match a.reference_side {
        Some(s) => s,
        None if a.cand.grid.is_some() || a.cand.candidates.is_some() => {
            default_reference_side(load_candidates(&a.cand)?.len())
        }
        None => 25,
    };
    let edge = match a.edge {
        EdgeArg::None => EdgeCorrection::None,
        EdgeArg::Translation => EdgeCorrection::Translation,
    };
    let h = linspace(a.h_max, a.h_count);
    let r = linspace(a.r_max, a.r_count);
    let out = output_path(&a.common, "diagnose");
    let mut meta = RunMetadata::new("diagnose", argv, a.common.seed);
    meta.detail("n", coords.len()).detail("d", d);

    let fg_wanted = matches!(a.stat, StatArg::F | StatArg::G | StatArg::All);
    let f_hat = if matches!(a.stat, StatArg::F | StatArg::All) {
        meta.detail("reference_side", side);
        Some(f_function(&coords, &reference_grid(side, d), &h)?)
    } else {
        None
    };
    let g_hat = if matches!(a.stat, StatArg::G | StatArg::All) {
        Some(g_function(&coords, &h)?)
    } else {
        None
    };
    if fg_wanted {
        match (&f_hat, &g_hat) {
            (Some(f), Some(g)) => io::write_fg_csv(&out, &h, f, g)?,
            (Some(f), None) => io::write_single_fn_csv(&out, "f_hat", &h, f)?,
            (None, Some(g)) => io::write_single_fn_csv(&out, "g_hat", &h, g)?,
            (None, None) => unreachable!(),
        }
    }
    if matches!(a.stat, StatArg::K | StatArg::All) {
        let k_path = if a.stat == StatArg::All { sibling(&out, "k") } else { out.clone() };
        let k_hat = ripley_k(&coords, 1.0, &r, edge)?;
        let csr: Vec<f64> = r.iter().map(|&x| k_csr(x, d)).collect();
        io::write_k_csv(&k_path, &r, &k_hat, &csr)?;
        meta.detail("edge_correction", format!("{:?}", edge).to_lowercase());
        if k_path != out {
            meta.outputs.push(k_path.display().to_string());
        }
    }
    finish(&mut meta, &out)?;
    println!("wrote diagnostics to {}", meta.outputs.join(", "));
    Ok(())
}

fn cmd_sgd(a: &SgdArgs, argv: Vec<String>) -> CliResult<()> {
    if a.batchsize.contains(&0) || a.replicates == 0 || a.epochs == 0 {
        return Err(usage("batch sizes, epochs and replicates must be positive"));
    }
    if !(a.rho > 0.0 && a.rho < 1.0) {
        return Err(usage(format!("rho {} outside (0, 1)", a.rho)));
    }
    let config = ExperimentConfig {
        batch_sizes: a.batchsize.clone(),
        replicates: a.replicates,
        sgd: SgdConfig {
            epochs: a.epochs,
            lr0: a.lr0,
            tau: a.tau,
        },
        rho: a.rho,
        seed: a.common.seed,
        jobs: a.jobs,
    };
    let table = mse_ratio_experiment(&config)?;
    let out = output_path(&a.common, "sgd_demo");
    io::write_ratio_csv(&out, &table)?;
    let mut meta = RunMetadata::new("sgd-demo", argv, a.common.seed);
    // Thread count does not affect results, so it is left out of the record.
    meta.detail("batch_sizes", &config.batch_sizes)
        .detail("replicates", config.replicates)
        .detail("sgd", config.sgd)
        .detail("rho", config.rho)
        .detail("worst_final_loss", table.worst_final_loss);
    finish(&mut meta, &out)?;
    for (bs, row) in table.batch_sizes.iter().zip(&table.ratios) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("batchsize {bs}: {}", cells.join(" "));
    }
    Ok(())
}

/// Runs one already-parsed command.
pub fn execute(cli: &Cli, argv: Vec<String>) -> CliResult<()> {
    match &cli.command {
        Command::Emulate(a) => cmd_emulate(a, argv),
        Command::Sample(a) => cmd_sample(a, argv),
        Command::Sequential(a) => cmd_sequential(a, argv),
        Command::Exchange(a) => cmd_exchange(a, argv),
        Command::Lhs(a) => cmd_lhs(a, argv),
        Command::Random(a) => cmd_random(a, argv),
        Command::Diagnose(a) => cmd_diagnose(a, argv),
        Command::SgdDemo(a) => cmd_sgd(a, argv),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let argv = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
