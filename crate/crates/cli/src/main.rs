use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use torusspec::friedrichs::critical_mu_with;
use torusspec::friedrichs::Side;
use torusspec::quadrature::Measure;

mod commands;
mod config;
mod report;
mod selftest;

use commands::{parse_list, Command, Settings};
use report::{emit_report, Format};

#[derive(Debug, Parser)]
#[command(name = "torusspec", version, about = "Spectral analysis of a lattice 2x2 operator matrix on the 3-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, clap::Args)]
struct Opts {
    /// Interaction parameter gamma [default: 6]
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Coupling mu [default: mu0]
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Grid points per axis for quadrature and discretizations [default: 64]
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// k-grid per axis for the branch sweep [default: 16]
    #[arg(long, global = true)]
    kgrid: Option<usize>,
    /// Spectral parameter
    #[arg(long, global = true, allow_negative_numbers = true)]
    z: Option<f64>,
    /// left|right (classify) or below|above (count, oracle)
    #[arg(long, global = true)]
    side: Option<String>,
    /// Quadrature tolerance [default: 1e-6]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Interval lengths for U(1), comma separated [default: 40,60,80]
    #[arg(long, global = true)]
    r_list: Option<String>,
    /// Eigenvalue search window a,b [default: -60,-6]
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// Most eigenvalues reported by eigs [default: 16]
    #[arg(long, global = true)]
    max_count: Option<usize>,
    #[arg(long, global = true, value_enum)]
    out: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use the probability measure on the torus
    #[arg(long, global = true)]
    normalized_measure: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leave timing out of the report
    #[arg(long, global = true)]
    no_timing: bool,
    /// key=value file with defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Binary dump of the direct matrix (oracle)
    #[arg(long, global = true)]
    dump: Option<PathBuf>,
    /// Also fit log laws of counts near both thresholds (asymp)
    #[arg(long, global = true)]
    fit: bool,
}

#[derive(Debug)]
pub enum CliError {
    Core(torusspec::Error),
    Usage(String),
    Failed(String),
}

impl From<torusspec::Error> for CliError {
    fn from(e: torusspec::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(s) | CliError::Failed(s) => f.write_str(s),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use torusspec::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Core(e) => match e {
                E::Domain(_) | E::BandInterior { .. } | E::Capacity(_) | E::InsufficientData(_) => 2,
                E::Convergence(_) | E::Truncation { .. } | E::Mismatch(_) => 3,
                E::SignCondition { .. } | E::Ambiguity { .. } => 4,
                E::Io(_) => 1,
            },
        }
    }
}

/// Flag value, else config value, else nothing.
fn pick<T: FromStr>(flag: Option<T>, cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config {key} = {v:?}: {e}"))))
        .transpose()
}

fn settings(o: Opts) -> Result<(Settings, Option<usize>), CliError> {
    let cfg = match &o.config {
        Some(p) => config::load(p).map_err(CliError::Usage)?,
        None => BTreeMap::new(),
    };
    let flag = |set: bool, key: &str| -> Result<bool, CliError> {
        Ok(set || pick::<bool>(None, &cfg, key)?.unwrap_or(false))
    };
    let measure = if flag(o.normalized_measure, "normalized-measure")? { Measure::Normalized } else { Measure::Lebesgue };
    let gamma = pick(o.gamma, &cfg, "gamma")?.unwrap_or(6.0);
    let mu = match pick(o.mu, &cfg, "mu")? {
        Some(m) => m,
        None => critical_mu_with(6.0, Side::Left, measure)?,
    };
    let r_list = parse_list(&pick(o.r_list, &cfg, "r-list")?.unwrap_or_else(|| "40,60,80".into()))?;
    let w = parse_list(&pick(o.window, &cfg, "window")?.unwrap_or_else(|| "-60,-6".into()))?;
    if w.len() != 2 {
        return Err(CliError::Usage("--window needs exactly two numbers".into()));
    }
    let out = match pick::<String>(o.out.map(|f| format!("{f:?}").to_lowercase()), &cfg, "out")? {
        Some(s) => Format::from_str(&s, true).map_err(CliError::Usage)?,
        None => Format::Json,
    };
    let s = Settings {
        gamma,
        mu,
        grid: pick(o.grid, &cfg, "grid")?.unwrap_or(64),
        kgrid: pick(o.kgrid, &cfg, "kgrid")?.unwrap_or(16),
        z: pick(o.z, &cfg, "z")?,
        side: pick(o.side, &cfg, "side")?,
        tol: pick(o.tol, &cfg, "tol")?.unwrap_or(1e-6),
        r_list,
        window: (w[0], w[1]),
        max_count: pick(o.max_count, &cfg, "max-count")?.unwrap_or(16),
        out,
        output: pick(o.output, &cfg, "output")?,
        measure,
        seed: pick(o.seed, &cfg, "seed")?.unwrap_or(0),
        timing: !flag(o.no_timing, "no-timing")?,
        dump: pick(o.dump, &cfg, "dump")?,
        fit: flag(o.fit, "fit")?,
    };
    Ok((s, pick(o.threads, &cfg, "threads")?))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (s, threads) = settings(cli.opts)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let start = Instant::now();
    let (mut rep, table) = commands::run(cli.command, &s)?;
    if s.timing {
        rep.provenance.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let io = |e: std::io::Error| CliError::Core(e.into());
    match &s.output {
        Some(p) => emit_report(&rep, &table, s.out, std::fs::File::create(p).map_err(io)?).map_err(io)?,
        None => emit_report(&rep, &table, s.out, std::io::stdout().lock()).map_err(io)?,
    }
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Failed(format!("self-test failures: {}", failed.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
