mod commands;
mod parse;
mod report;
mod sources;

use clap::{Args, Parser, Subcommand};
use mdlab_core::pretentious::MIN_GRID_POINTS;
use mdlab_core::verify::tolerances::HYBRID_SEED;
use parse::{parse_f64, parse_list, parse_u64, parse_usize, U64List};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "mdlab",
    version,
    about = "Experiments on Möbius-type sequences, short progressions and Dirichlet polynomials"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Worker threads (defaults to MDLAB_THREADS, then the hardware count)
    #[arg(long, global = true, value_parser = parse_usize)]
    threads: Option<usize>,
    /// Directory for cached sieve windows
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Also write the report rows as CSV to this file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized experiments
    #[arg(long, global = true, value_parser = parse_u64, default_value_t = HYBRID_SEED)]
    seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Sieve μ, μ², μ_r or λ on a range
    Sieve(SieveArgs),
    /// Cesàro inner product of two sequences along a cutoff ladder
    Inner(InnerArgs),
    /// Shift correlations of μ_r against the Euler-product oracle
    Corr(CorrArgs),
    /// Second moment of Möbius sums in short progressions
    Moment(MomentArgs),
    /// Residue and divisor decomposition of the second moment
    Decomp(DecompArgs),
    /// Pretentious distance to n^{it}
    Distance(DistanceArgs),
    /// Mean value against the Halász-type shape
    Halasz(HalaszArgs),
    /// Dirichlet characters and polynomials
    #[command(subcommand)]
    Dirichlet(DirichletCommand),
    /// Window census and entropy of {0,1} sequences
    Flow(FlowArgs),
    /// Rigidity of μ_r along n_j = (p_1⋯p_j)^r
    #[command(subcommand)]
    Rigidity(RigidityCommand),
    /// Run the acceptance grid
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct SieveArgs {
    /// mu, mu2, muR or lambda
    #[arg(long, default_value = "mu")]
    function: String,
    #[arg(long, value_parser = parse_u64, default_value_t = 1)]
    start: u64,
    /// Number of values
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
    /// Compare every value against trial factorization
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Args, Serialize)]
struct InnerArgs {
    /// mu, mu2, muR, lambda, one, e-sqrt, e-lin:θ or e-quad:θ
    #[arg(long)]
    f: String,
    /// Second sequence (defaults to f)
    #[arg(long)]
    g: Option<String>,
    /// Compare f with A^m g
    #[arg(long, value_parser = parse_usize, default_value_t = 0)]
    shift: usize,
    /// Increasing cutoffs
    #[arg(long = "N", value_parser = parse_list, default_value = "1e4,1e5,1e6")]
    #[serde(rename = "N")]
    n: U64List,
}

#[derive(Debug, Args, Serialize)]
struct CorrArgs {
    #[arg(long, value_parser = parse_u64, default_value_t = 2)]
    r: u64,
    /// Lags
    #[arg(long, value_parser = parse_list, default_value = "1..10")]
    m: U64List,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, value_parser = parse_u64, default_value = "1e6")]
    oracle_cutoff: u64,
}

#[derive(Debug, Args, Serialize)]
struct MomentArgs {
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, value_parser = parse_list, default_value = "10,100,1000")]
    h: U64List,
    #[arg(long, value_parser = parse_list, default_value = "1,2,6,30,210")]
    k: U64List,
}

#[derive(Debug, Args, Serialize)]
struct DecompArgs {
    #[arg(long = "X", value_parser = parse_u64)]
    #[serde(rename = "X")]
    x: u64,
    #[arg(long, value_parser = parse_u64, default_value_t = 10)]
    h: u64,
    #[arg(long, value_parser = parse_list, default_value = "1,6")]
    k: U64List,
}

#[derive(Debug, Args, Serialize)]
struct DistanceArgs {
    /// one, mu, lambda, muR, nit:t or chi:k:i
    #[arg(long, default_value = "mu")]
    f: String,
    #[arg(long, value_parser = parse_u64)]
    x: u64,
    #[arg(long = "T", value_parser = parse_f64, default_value_t = 10.0)]
    #[serde(rename = "T")]
    t_max: f64,
    #[arg(long, value_parser = parse_u64, default_value_t = 1)]
    k: u64,
    /// Minimum number of grid points on [-T, T]
    #[arg(long, value_parser = parse_usize, default_value_t = MIN_GRID_POINTS)]
    grid: usize,
    /// Also minimize over twists by every character mod k
    #[arg(long, conflicts_with = "floor")]
    characters: bool,
    /// Scan every character mod k against n^{it} instead of using f
    #[arg(long)]
    floor: bool,
}

#[derive(Debug, Args, Serialize)]
struct HalaszArgs {
    #[arg(long, default_value = "mu")]
    f: String,
    #[arg(long, value_parser = parse_u64)]
    x: u64,
    #[arg(long, value_parser = parse_u64, default_value_t = 1)]
    k: u64,
    #[arg(long = "T", value_parser = parse_f64, default_value_t = 10.0)]
    #[serde(rename = "T")]
    t_max: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
enum DirichletCommand {
    /// List the characters mod k
    Characters(CharactersArgs),
    /// Mean square over characters of a Dirichlet polynomial
    MeanSquare(MeanSquareArgs),
    /// Hybrid large-sieve ratio for random ±1 coefficients
    Hybrid(HybridArgs),
    /// Short-interval mean square against the Dirichlet-polynomial side
    Parseval(ParsevalArgs),
}

#[derive(Debug, Args, Serialize)]
struct CharactersArgs {
    #[arg(long, value_parser = parse_u64)]
    k: u64,
    /// Also report the orthogonality defect
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Args, Serialize)]
struct MeanSquareArgs {
    #[arg(long, default_value = "mu")]
    f: String,
    #[arg(long, value_parser = parse_u64)]
    k: u64,
    #[arg(long = "X", value_parser = parse_u64)]
    #[serde(rename = "X")]
    x: u64,
    #[arg(long = "T", value_parser = parse_f64)]
    #[serde(rename = "T")]
    t_max: f64,
    /// Quadrature step (defaults to the largest allowed)
    #[arg(long, value_parser = parse_f64)]
    step: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct HybridArgs {
    #[arg(long, value_parser = parse_u64)]
    k: u64,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long = "T", value_parser = parse_f64)]
    #[serde(rename = "T")]
    t_max: f64,
    #[arg(long, value_parser = parse_usize, default_value_t = 50)]
    trials: usize,
}

#[derive(Debug, Args, Serialize)]
struct ParsevalArgs {
    /// Coefficient file (MDL1 cache or one value per line); overrides --f
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Index of the first coefficient in --coeffs
    #[arg(long, value_parser = parse_u64, default_value_t = 1)]
    coeffs_start: u64,
    #[arg(long, default_value = "mu")]
    f: String,
    #[arg(long, value_parser = parse_u64)]
    h: u64,
    #[arg(long = "X", value_parser = parse_u64)]
    #[serde(rename = "X")]
    x: u64,
}

#[derive(Debug, Args, Serialize)]
struct FlowArgs {
    /// A {0,1} sequence: mu2, muR or one
    #[arg(long, default_value = "mu2", conflicts_with = "shifts")]
    f: String,
    /// Use ∏_i μ²(n + m_i) instead of f
    #[arg(long, value_parser = parse_list)]
    shifts: Option<U64List>,
    /// Window lengths
    #[arg(long = "L", value_parser = parse_list, default_value = "10..20")]
    #[serde(rename = "L")]
    l: U64List,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
enum RigidityCommand {
    /// ‖μ_r − A^{l n_j} μ_r‖² against Mirsky's closed form
    Norm(NormArgs),
    /// ‖π_i ∘ B^{l n_j} − π_i‖² for μ²
    Projection(ProjectionArgs),
    /// Projection rigidity averaged over l < h
    Averaged(AveragedArgs),
    /// Closed-form minimum over 1 ≤ l ≤ n_j^δ
    Floor(FloorArgs),
}

#[derive(Debug, Args, Serialize)]
struct NormArgs {
    #[arg(long, value_parser = parse_u64, default_value_t = 2)]
    r: u64,
    #[arg(long, value_parser = parse_usize)]
    j: usize,
    #[arg(long, value_parser = parse_list, default_value = "1")]
    l: U64List,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, value_parser = parse_u64, default_value = "1e6")]
    oracle_cutoff: u64,
}

#[derive(Debug, Args, Serialize)]
struct ProjectionArgs {
    #[arg(long, value_parser = parse_u64, default_value_t = 0)]
    i: u64,
    #[arg(long, value_parser = parse_usize)]
    j: usize,
    #[arg(long, value_parser = parse_list, default_value = "1")]
    l: U64List,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Debug, Args, Serialize)]
struct AveragedArgs {
    #[arg(long, value_parser = parse_u64, default_value_t = 0)]
    i: u64,
    #[arg(long, value_parser = parse_usize)]
    j: usize,
    #[arg(long, value_parser = parse_u64)]
    h: u64,
    #[arg(long = "N", value_parser = parse_u64)]
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Debug, Args, Serialize)]
struct FloorArgs {
    #[arg(long, value_parser = parse_usize)]
    j: usize,
    #[arg(long, value_parser = parse_f64, default_value_t = 0.5)]
    delta: f64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value = "primary", value_parser = ["primary"])]
    suite: String,
    /// Run only these criteria
    #[arg(long, value_parser = parse_list)]
    criteria: Option<U64List>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sieve(_) => "sieve",
            Command::Inner(_) => "inner",
            Command::Corr(_) => "corr",
            Command::Moment(_) => "moment",
            Command::Decomp(_) => "decomp",
            Command::Distance(_) => "distance",
            Command::Halasz(_) => "halasz",
            Command::Dirichlet(_) => "dirichlet",
            Command::Flow(_) => "flow",
            Command::Rigidity(_) => "rigidity",
            Command::Verify(_) => "verify",
        }
    }
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("MDLAB_THREADS") {
        Ok(v) if !v.trim().is_empty() => parse_usize(&v)
            .map(Some)
            .map_err(|e| anyhow::anyhow!("MDLAB_THREADS: {e}")),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = thread_count(cli.global.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let params = serde_json::to_value(&cli.command)?;
    let mut emitter = report::Emitter::new(
        cli.command.name(),
        params,
        cli.global.seed,
        cli.global.out.as_deref(),
        Box::new(std::io::stdout().lock()),
    );
    let mut sieves = sources::Sieves::new(cli.global.cache_dir.as_deref())?;
    let ok = commands::dispatch(&cli.command, &cli.global, &mut sieves, &mut emitter)?;
    emitter.finish()?;
    Ok(ok)
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = c
            .downcast_ref::<std::io::Error>()
            .map(|io| io.kind())
            .or_else(|| {
                c.downcast_ref::<serde_json::Error>()
                    .and_then(|j| j.io_error_kind())
            });
        kind == Some(std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
