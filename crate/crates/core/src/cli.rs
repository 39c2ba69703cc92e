//! The `cmrp` command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::change_of_measure::{kappa_solve, log_density};
use crate::error::{CmrpError, Result};
use crate::model::Theta;
use crate::numerics::quadrature::QuadConfig;
use crate::output::{
    fmt_g, read_paths, write_densities, write_paths, write_reports, write_ruin, DensityRow,
};
use crate::ruin::{psi_mixed, psi_monte_carlo};
use crate::scenario::Scenario;
use crate::simulate::{simulate_paths, with_workers};
use crate::verify::{default_suite, run_suite, Suite};

const PATHS_SCHEMA: &str = "\
paths CSV: path_id,theta[,theta2],n,T_n,W_n,X_n
  one row per claim (n = 1, 2, ...: claim index, T_n arrival time,
  W_n interarrival time, X_n claim size); a path without claims gets a
  single row `path_id,theta,0,,,`. theta2 appears only for two-dimensional
  mixing laws.";

const DENSITY_SCHEMA: &str = "\
density CSV: path_id,log_density,log_conditional,log_xi
  log_density = log_conditional + log_xi, the log of the density of the
  target measure with respect to the base measure at time t.

input: a paths CSV as written by `cmrp simulate`. t must not exceed the
horizon the paths were simulated to.";

const RUIN_SCHEMA: &str = "\
ruin CSV: u,psi,method,error_bound
  method is closed_form, quadrature or monte_carlo. For monte_carlo, psi is
  the fraction of paths ruined before the horizon (a lower bound for the
  infinite-horizon probability) and error_bound its standard error.";

const REPORT_SCHEMA: &str = "\
report CSV: check_name,estimate,std_error,target,passed,n_paths,seed
  a check passes when |estimate - target| <= max(tolerance, 3 std_error).";

const EXIT_CODES: &str = "\
exit status: 0 success, 1 numeric failure or failed check, 2 usage or
configuration error.";

#[derive(Debug, Parser)]
#[command(
    name = "cmrp",
    version,
    about = "Compound mixed renewal processes: simulation, changes of measure and ruin"
)]
#[command(after_help = EXIT_CODES)]
pub struct Cli {
    /// Maximum number of worker threads (default: available cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate paths of a scenario's process and write them as CSV.
    #[command(after_help = PATHS_SCHEMA)]
    Simulate(SimulateArgs),
    /// Evaluate log densities of a change of measure on simulated paths.
    #[command(after_help = DENSITY_SCHEMA)]
    Density(DensityArgs),
    /// Solve the Lundberg equation for kappa at given mixing values.
    Lundberg(LundbergArgs),
    /// Compute mixed ruin probabilities.
    #[command(after_help = RUIN_SCHEMA)]
    Ruin(RuinArgs),
    /// Run a verification suite and report every check.
    #[command(after_help = REPORT_SCHEMA)]
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed.
    #[arg(long, env = "CMRP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON file or built-in scenario name.
    #[arg(long)]
    scenario: String,
    /// Number of paths.
    #[arg(long)]
    paths: usize,
    /// Simulation horizon.
    #[arg(long)]
    horizon: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Output paths CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Scenario JSON file or built-in scenario name.
    #[arg(long)]
    scenario: String,
    /// Paths CSV written by `cmrp simulate`.
    #[arg(long = "paths-in")]
    paths_in: PathBuf,
    /// Time at which the density is evaluated.
    #[arg(long)]
    t: f64,
    /// Use a named preset instead of the scenario's change of measure.
    #[arg(long)]
    preset: Option<String>,
    /// Output density CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LundbergArgs {
    /// Scenario JSON file or built-in scenario name.
    #[arg(long)]
    scenario: String,
    /// Mixing value; repeat for several. Coordinates of a two-dimensional
    /// value are separated by commas, e.g. `--theta 1.5,2`.
    #[arg(long, required = true, allow_hyphen_values = true)]
    theta: Vec<String>,
    /// Esscher parameter r.
    #[arg(long, allow_hyphen_values = true)]
    r: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuinMethodArg {
    Quadrature,
    Mc,
}

#[derive(Debug, Args)]
struct RuinArgs {
    /// Scenario JSON file or built-in scenario name.
    #[arg(long)]
    scenario: String,
    /// Initial reserves, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    u: Vec<f64>,
    /// Mixed closed form by quadrature, or Monte Carlo over a finite horizon.
    #[arg(long, value_enum, default_value_t = RuinMethodArg::Quadrature)]
    method: RuinMethodArg,
    /// Monte Carlo horizon.
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    /// Monte Carlo path count.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Output ruin CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// `default` or a suite JSON file.
    #[arg(long, default_value = "default")]
    suite: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Output report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let workers = cli.workers;
    match with_workers(workers, move || dispatch(cli.command)).and_then(|r| r) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &CmrpError) -> i32 {
    match e {
        CmrpError::Config { .. }
        | CmrpError::Io(_)
        | CmrpError::InvalidParameter(_)
        | CmrpError::Expr(_) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Density(a) => density(a),
        Command::Lundberg(a) => lundberg(a),
        Command::Ruin(a) => ruin(a),
        Command::Verify(a) => verify(a),
    }
}

fn create(path: &FsPath) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CmrpError::Io(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CmrpError::InvalidParameter(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    positive("horizon", a.horizon)?;
    let s = Scenario::load(&a.scenario)?;
    let paths = simulate_paths(&s.model, a.horizon, a.paths, a.seed.seed)?;
    write_paths(create(&a.out)?, &paths)?;
    let jumps: usize = paths.iter().map(|p| p.n_jumps()).sum();
    println!(
        "simulated {} paths of {} to t={} ({} claims) -> {}",
        paths.len(),
        s.name,
        fmt_g(a.horizon),
        jumps,
        a.out.display()
    );
    Ok(0)
}

fn density(a: DensityArgs) -> Result<i32> {
    if !(a.t.is_finite() && a.t >= 0.0) {
        return Err(CmrpError::InvalidParameter(format!(
            "--t must be non-negative, got {}",
            a.t
        )));
    }
    let s = Scenario::load(&a.scenario)?;
    let mc = s.change_named(a.preset.as_deref())?;
    let file = File::open(&a.paths_in)
        .map_err(|e| CmrpError::Io(format!("{}: {e}", a.paths_in.display())))?;
    let paths = read_paths(BufReader::new(file), a.t)?;
    let rows: Vec<DensityRow> = paths
        .par_iter()
        .map(|(id, p)| {
            let d = log_density(mc, &s.model, p, a.t)?;
            Ok(DensityRow {
                path_id: *id,
                log_density: d.log_value,
                log_conditional: d.log_conditional(),
                log_xi: d.xi_log_factor,
            })
        })
        .collect::<Result<_>>()?;
    write_densities(create(&a.out)?, &rows)?;
    println!(
        "evaluated {} densities at t={} -> {}",
        rows.len(),
        fmt_g(a.t),
        a.out.display()
    );
    Ok(0)
}

fn parse_theta(raw: &str) -> Result<Theta> {
    let coords: Vec<f64> = raw
        .split(',')
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| CmrpError::InvalidParameter(format!("--theta: bad number `{c}`")))
        })
        .collect::<Result<_>>()?;
    Theta::from_slice(&coords).map_err(|e| CmrpError::InvalidParameter(format!("--theta: {e}")))
}

fn lundberg(a: LundbergArgs) -> Result<i32> {
    let s = Scenario::load(&a.scenario)?;
    let thetas: Vec<Theta> = a
        .theta
        .iter()
        .map(|t| parse_theta(t))
        .collect::<Result<_>>()?;
    for th in &thetas {
        if th.dim() != s.model.mixing.dim() {
            return Err(CmrpError::InvalidParameter(format!(
                "--theta {th} has {} coordinates, the mixing law has {}",
                th.dim(),
                s.model.mixing.dim()
            )));
        }
        let sol = kappa_solve(&s.model, th, a.r)?;
        println!(
            "theta={} r={} kappa={} residual={}",
            th,
            fmt_g(a.r),
            fmt_g(sol.kappa),
            fmt_g(sol.residual)
        );
    }
    Ok(0)
}

fn ruin(a: RuinArgs) -> Result<i32> {
    let s = Scenario::load(&a.scenario)?;
    for &u in &a.u {
        if !(u.is_finite() && u >= 0.0) {
            return Err(CmrpError::InvalidParameter(format!(
                "--u must be non-negative, got {u}"
            )));
        }
    }
    let rows = match a.method {
        RuinMethodArg::Quadrature => {
            let quad = QuadConfig::default();
            a.u.iter()
                .map(|&u| psi_mixed(&s.model, u, &quad))
                .collect::<Result<Vec<_>>>()?
        }
        RuinMethodArg::Mc => {
            positive("horizon", a.horizon)?;
            a.u.iter()
                .map(|&u| psi_monte_carlo(&s.model, u, a.horizon, a.paths, a.seed.seed))
                .collect::<Result<Vec<_>>>()?
        }
    };
    for r in &rows {
        match a.method {
            RuinMethodArg::Mc => println!(
                "u={} psi>={} se={} method={} horizon={}",
                fmt_g(r.u),
                fmt_g(r.psi),
                fmt_g(r.error_bound),
                r.method,
                fmt_g(a.horizon)
            ),
            RuinMethodArg::Quadrature => println!(
                "u={} psi={} error_bound={} method={}",
                fmt_g(r.u),
                fmt_g(r.psi),
                fmt_g(r.error_bound),
                r.method
            ),
        }
    }
    if let Some(out) = &a.out {
        write_ruin(create(out)?, &rows)?;
    }
    Ok(0)
}

fn load_suite(spec: &str) -> Result<(Suite, Option<PathBuf>)> {
    if spec == "default" {
        return Ok((default_suite(), None));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CmrpError::Io(format!("{spec}: {e}")))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let suite: Suite = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CmrpError::Config {
            path: format!("{spec}: {path}"),
            message: e.into_inner().to_string(),
        }
    })?;
    let dir = FsPath::new(spec).parent().map(|d| d.to_path_buf());
    Ok((suite, dir))
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let (suite, dir) = load_suite(&a.suite)?;
    let load = |name: &str| {
        if let Some(d) = &dir {
            let local = d.join(name);
            if local.exists() {
                return Scenario::load(&local.to_string_lossy());
            }
        }
        Scenario::load(name)
    };
    let reports = run_suite(&suite, a.seed.seed, load)?;
    let mut stdout = std::io::stdout().lock();
    for r in &reports {
        writeln!(
            stdout,
            "{} {} estimate={} target={} se={} tol={}",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_name,
            fmt_g(r.estimate),
            fmt_g(r.target),
            fmt_g(r.std_error),
            fmt_g(r.tolerance)
        )?;
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    writeln!(
        stdout,
        "{passed}/{} checks passed (seed {})",
        reports.len(),
        a.seed.seed
    )?;
    if let Some(out) = &a.out {
        write_reports(create(out)?, &reports)?;
    }
    Ok(if passed == reports.len() { 0 } else { 1 })
}
