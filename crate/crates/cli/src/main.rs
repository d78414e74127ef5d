use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bousspec::boussinesq::BoussinesqParams;
use bousspec_cli::commands::region::{parse_grid, parse_range, region, RegionArgs};
use bousspec_cli::commands::simulate::simulate;
use bousspec_cli::commands::tools::{besov, twin, BesovArgs, TwinArgs};
use bousspec_cli::commands::verify::{verify, Suite, VerifyArgs};
use bousspec_cli::config::{parse_exponent, Layers, RunConfig, ENV_OUT, ENV_THREADS};
use bousspec_cli::error::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bousspec", version, about = "Fractional Boussinesq solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled solver and write series.csv, report.json and snapshots.
    Simulate(SimulateArgs),
    /// Query the admissible parameter region or tabulate it on a lattice.
    Region(RegionCli),
    /// Run a verification suite: lp, td, commutator, energy or twin.
    Verify(VerifyCli),
    /// Besov norm of one field of a snapshot.
    Besov(BesovCli),
    /// Twin-trajectory stability experiment.
    Twin(TwinCli),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T", alias = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    gamma: Option<bool>,
    #[arg(long)]
    besov: Option<bool>,
    #[arg(long)]
    smoothing: Option<bool>,
    #[arg(long)]
    commutator: Option<bool>,
    #[arg(long)]
    p_list: Option<String>,
    #[arg(long)]
    r_tilde: Option<String>,
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionCli {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    r: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    p: Option<f64>,
    /// Lattice size `NxM` for pi_grid.csv.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "0.5:1")]
    alpha_range: String,
    #[arg(long, default_value = "0:0.5")]
    beta_range: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCli {
    suite: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BesovCli {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    field: String,
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, value_parser = parse_exponent)]
    p: f64,
    #[arg(long, value_parser = parse_exponent)]
    r: f64,
    #[arg(long)]
    homogeneous: bool,
}

#[derive(Args)]
struct TwinCli {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1e-8,1e-6,1e-4", value_parser = parse_scale)]
    scales: Vec<f64>,
    #[arg(long = "T", default_value_t = 0.5)]
    t_final: f64,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    #[arg(long, default_value_t = 10)]
    sample_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scale(v: &str) -> Result<f64, String> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite() && *x >= 0.0)
        .ok_or_else(|| format!("invalid scale `{v}`"))
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bousspec_out"))
}

fn run_config(a: SimulateArgs) -> CliResult<RunConfig> {
    let mut l = match &a.config {
        Some(p) => Layers::from_file(p)?,
        None => Layers::default(),
    };
    l.set("run.alpha", a.alpha);
    l.set("run.beta", a.beta);
    l.set("run.n", a.n);
    l.set("run.dt", a.dt);
    l.set("run.T", a.t_final);
    l.set("run.seed", a.seed);
    l.set("run.init", a.init);
    l.set("run.sample_every", a.sample_every);
    l.set("run.kmax", a.kmax);
    l.set("diagnostics.gamma", a.gamma);
    l.set("diagnostics.besov", a.besov);
    l.set("diagnostics.smoothing", a.smoothing);
    l.set("diagnostics.commutator", a.commutator);
    l.set("diagnostics.p_list", a.p_list);
    l.set("diagnostics.r_tilde", a.r_tilde);
    l.set("output.snapshots", a.snapshots);
    l.set("output.dir", a.out.map(|p| p.display().to_string()));
    RunConfig::from_layers(&l)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => simulate(&run_config(a)?),
        Command::Region(a) => {
            let args = RegionArgs {
                alpha: a.alpha,
                beta: a.beta,
                r: a.r,
                p: a.p,
                grid: a.grid.as_deref().map(parse_grid).transpose()?,
                alpha_range: parse_range(&a.alpha_range)?,
                beta_range: parse_range(&a.beta_range)?,
            };
            region(&args, &out_dir(a.out))
        }
        Command::Verify(a) => {
            let suite: Suite = a.suite.parse().map_err(CliError::Config)?;
            let args = VerifyArgs {
                alpha: a.alpha,
                beta: a.beta,
                n: a.n,
                seeds: a.seeds,
            };
            verify(suite, &args, &out_dir(a.out))
        }
        Command::Besov(a) => {
            let args = BesovArgs {
                s: a.s,
                p: a.p,
                r: a.r,
                homogeneous: a.homogeneous,
            };
            let v = besov(Path::new(&a.snapshot), &a.field, &args)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            Ok(())
        }
        Command::Twin(a) => {
            let args = TwinArgs {
                params: BoussinesqParams::new(a.alpha, a.beta)?,
                n: a.n,
                seed: a.seed,
                scales: a.scales,
                t_final: a.t_final,
                dt: a.dt,
                sample_every: a.sample_every,
            };
            let dir = out_dir(a.out);
            for (scale, y) in twin(&args, &dir)? {
                println!("scale={scale:e} Y={y:.6e}");
            }
            Ok(())
        }
    }
}

fn init_threads() -> CliResult<()> {
    let Some(v) = std::env::var_os(ENV_THREADS) else {
        return Ok(());
    };
    let v = v.to_string_lossy();
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{ENV_THREADS} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
